// SPDX-License-Identifier: Apache-2.0
#include "l2s/channel.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "l2s/rng.hpp"
#include "l2s/units.hpp"

namespace l2s {

void OfdmaConfig::validate() const {
    if (fft_size <= 0 || data_subcarriers <= 0 || subchannels <= 0 || null_subcarriers < 0 ||
        pilot_subcarriers < 0) {
        throw std::domain_error("OfdmaConfig: counts must be positive");
    }
    if (null_subcarriers + pilot_subcarriers + data_subcarriers != fft_size) {
        throw std::domain_error("OfdmaConfig: null + pilot + data != fft_size");
    }
    if (data_subcarriers % subchannels != 0) {
        throw std::domain_error("OfdmaConfig: data_subcarriers not divisible by subchannels");
    }
    if (!(sampling_freq_mhz > 0.0) || !(useful_symbol_time_us > 0.0)) {
        throw std::domain_error("OfdmaConfig: sampling_freq_mhz and useful_symbol_time_us must be > 0");
    }
    const double expected_guard = useful_symbol_time_us / 8.0;
    if (std::abs(guard_time_us - expected_guard) > 0.01 * expected_guard) {
        throw std::domain_error("OfdmaConfig: guard_time_us must be useful_symbol_time_us/8 within 1%");
    }
}

OfdmaConfig OfdmaConfig::downlink_pusc_10mhz() {
    OfdmaConfig c;
    c.fft_size = 1024;
    c.null_subcarriers = 184;
    c.pilot_subcarriers = 120;
    c.data_subcarriers = 720;
    c.subchannels = 30;
    c.bandwidth_mhz = 10.0;
    c.sampling_freq_mhz = 11.2;
    c.subcarrier_spacing_khz = 10.94;
    c.useful_symbol_time_us = 91.4;
    c.guard_time_us = 11.4;
    return c;
}

OfdmaConfig load_ofdma_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    OfdmaConfig c;
    try {
        c.fft_size = j.at("fft_size").get<int>();
        c.null_subcarriers = j.at("null_subcarriers").get<int>();
        c.pilot_subcarriers = j.at("pilot_subcarriers").get<int>();
        c.data_subcarriers = j.at("data_subcarriers").get<int>();
        c.subchannels = j.at("num_subchannels").get<int>();
        c.bandwidth_mhz = j.at("system_channel_bandwidth_mhz").get<double>();
        c.sampling_freq_mhz = j.at("sampling_frequency_mhz").get<double>();
        c.subcarrier_spacing_khz = j.at("subcarrier_frequency_spacing_khz").get<double>();
        c.useful_symbol_time_us = j.at("useful_symbol_time_us").get<double>();
        c.guard_time_us = j.at("guard_time_us").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
    if (j.contains("data_subcarriers_per_subchannel")) {
        const int per = j["data_subcarriers_per_subchannel"].get<int>();
        if (per * c.subchannels != c.data_subcarriers) {
            throw std::runtime_error(path.string() +
                                     ": data_subcarriers_per_subchannel inconsistent with totals");
        }
    }
    c.validate();
    return c;
}

void save_ofdma_config(const OfdmaConfig& config, const std::filesystem::path& path) {
    config.validate();
    nlohmann::json j{
        {"system_channel_bandwidth_mhz", config.bandwidth_mhz},
        {"sampling_frequency_mhz", config.sampling_freq_mhz},
        {"subcarrier_frequency_spacing_khz", config.subcarrier_spacing_khz},
        {"fft_size", config.fft_size},
        {"null_subcarriers", config.null_subcarriers},
        {"pilot_subcarriers", config.pilot_subcarriers},
        {"data_subcarriers", config.data_subcarriers},
        {"data_subcarriers_per_subchannel", config.data_per_subchannel()},
        {"num_subchannels", config.subchannels},
        {"useful_symbol_time_us", config.useful_symbol_time_us},
        {"guard_time_us", config.guard_time_us},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path.string());
    }
    out << j.dump(2) << '\n';
}

ChannelProfile::ChannelProfile(std::string name, std::vector<ChannelTap> taps,
                               double mobile_speed_kmh)
    : name_(std::move(name)), speed_kmh_(mobile_speed_kmh), taps_(std::move(taps)) {
    if (taps_.empty()) {
        throw std::domain_error("ChannelProfile: need at least one tap");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < taps_.size(); ++i) {
        if (taps_[i].delay_ns < 0.0) {
            throw std::domain_error("ChannelProfile: negative tap delay");
        }
        if (i > 0 && !(taps_[i].delay_ns > taps_[i - 1].delay_ns)) {
            throw std::domain_error("ChannelProfile: tap delays must be strictly increasing");
        }
        total += db_to_linear(taps_[i].power_db);
    }
    norm_powers_.resize(taps_.size());
    for (std::size_t i = 0; i < taps_.size(); ++i) {
        norm_powers_[i] = db_to_linear(taps_[i].power_db) / total;
    }
}

ChannelProfile load_channel_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open profile file: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
        std::vector<ChannelTap> taps;
        for (const auto& t : j.at("taps")) {
            taps.push_back({t.at("delay_ns").get<double>(), t.at("power_db").get<double>()});
        }
        return ChannelProfile(j.at("name").get<std::string>(), std::move(taps),
                              j.value("speed_kmh", 0.0));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

void save_channel_profile(const ChannelProfile& profile, const std::filesystem::path& path) {
    nlohmann::json taps = nlohmann::json::array();
    for (const auto& t : profile.taps()) {
        taps.push_back({{"delay_ns", t.delay_ns}, {"power_db", t.power_db}});
    }
    nlohmann::json j{{"name", profile.name()},
                     {"speed_kmh", profile.mobile_speed_kmh()},
                     {"taps", taps}};
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path.string());
    }
    out << j.dump(2) << '\n';
}

ChannelRealization realize_channel(const ChannelProfile& profile, const OfdmaConfig& config,
                                   std::uint64_t seed) {
    config.validate();
    Rng rng(seed);

    // Tap delays in whole samples of the ADC clock.
    const double samples_per_ns = config.sampling_freq_mhz * 1e-3;
    const std::size_t num_taps = profile.taps().size();
    std::vector<double> tap_samples(num_taps);
    std::vector<std::complex<double>> tap_gains(num_taps);
    for (std::size_t k = 0; k < num_taps; ++k) {
        tap_samples[k] = std::round(profile.taps()[k].delay_ns * samples_per_ns);
        tap_gains[k] =
            rng.complex_normal_unit() * std::sqrt(profile.normalized_powers()[k]);
    }

    // Data tones: contiguous block after stripping the null edges symmetrically.
    const int left_guard = config.null_subcarriers / 2;
    const int n_fft = config.fft_size;

    ChannelRealization out;
    out.seed = seed;
    out.profile_name = profile.name();
    out.tone_gains.resize(static_cast<std::size_t>(config.data_subcarriers));
    for (int m = 0; m < config.data_subcarriers; ++m) {
        const int tone = left_guard + m;
        std::complex<double> h{0.0, 0.0};
        for (std::size_t k = 0; k < num_taps; ++k) {
            const double phase =
                -2.0 * std::numbers::pi * static_cast<double>(tone) * tap_samples[k] / n_fft;
            h += tap_gains[k] * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        out.tone_gains[static_cast<std::size_t>(m)] = h;
    }
    return out;
}

SinrVector sinr_per_tone(const ChannelRealization& realization, double mean_snr_db) {
    if (realization.tone_gains.empty()) {
        throw std::domain_error("sinr_per_tone: empty realization");
    }
    const double snr_lin = db_to_linear(mean_snr_db);
    std::vector<double> sinr(realization.tone_gains.size());
    for (std::size_t i = 0; i < sinr.size(); ++i) {
        const double p = std::norm(realization.tone_gains[i]) * snr_lin;
        // |H|^2 underflowing to zero is essentially impossible for Gaussian
        // taps; keep the vector strictly positive regardless.
        sinr[i] = std::max(p, std::numeric_limits<double>::min());
    }
    return SinrVector(std::move(sinr));
}

SinrVector rayleigh_flat_vector(std::size_t n, double mean_snr_db, std::uint64_t seed) {
    if (n < 1) {
        throw std::domain_error("rayleigh_flat_vector: n must be >= 1");
    }
    Rng rng(seed);
    const double mean_lin = db_to_linear(mean_snr_db);
    std::vector<double> sinr(n);
    for (auto& v : sinr) {
        v = std::max(mean_lin * rng.exponential(), std::numeric_limits<double>::min());
    }
    return SinrVector(std::move(sinr));
}

} // namespace l2s
