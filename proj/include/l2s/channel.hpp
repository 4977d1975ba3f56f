// SPDX-License-Identifier: Apache-2.0
#ifndef L2S_CHANNEL_HPP
#define L2S_CHANNEL_HPP

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "l2s/eesm.hpp"

namespace l2s {

// Downlink OFDMA subcarrier layout. Field names mirror the configuration
// table shipped in data/configs/.
struct OfdmaConfig {
    int fft_size = 0;
    int null_subcarriers = 0;
    int pilot_subcarriers = 0;
    int data_subcarriers = 0;
    int subchannels = 0;
    double bandwidth_mhz = 0.0;
    double sampling_freq_mhz = 0.0;
    double subcarrier_spacing_khz = 0.0;
    double useful_symbol_time_us = 0.0;
    double guard_time_us = 0.0;

    /// null + pilot + data must cover the FFT exactly, data must divide into
    /// whole subchannels, and the guard interval must be 1/8 of the useful
    /// symbol within 1%.
    void validate() const;

    int data_per_subchannel() const { return data_subcarriers / subchannels; }

    /// The stock 10 MHz downlink PUSC layout (1024-point FFT, 720 data tones).
    static OfdmaConfig downlink_pusc_10mhz();
};

OfdmaConfig load_ofdma_config(const std::filesystem::path& path);
void save_ofdma_config(const OfdmaConfig& config, const std::filesystem::path& path);

struct ChannelTap {
    double delay_ns;
    double power_db;
};

// Tapped-delay-line multipath profile. Tap powers are normalized at
// construction so the expected total power is 1; the profile then shapes
// frequency selectivity without changing the mean SNR.
class ChannelProfile {
public:
    ChannelProfile(std::string name, std::vector<ChannelTap> taps, double mobile_speed_kmh);

    const std::string& name() const { return name_; }
    double mobile_speed_kmh() const { return speed_kmh_; }
    const std::vector<ChannelTap>& taps() const { return taps_; }

    /// Linear mean tap powers after normalization; sums to 1.
    const std::vector<double>& normalized_powers() const { return norm_powers_; }

private:
    std::string name_;
    double speed_kmh_;
    std::vector<ChannelTap> taps_;
    std::vector<double> norm_powers_;
};

// JSON schema: { "name": str, "speed_kmh": number,
//                "taps": [ { "delay_ns": number, "power_db": number } ] }
ChannelProfile load_channel_profile(const std::filesystem::path& path);
void save_channel_profile(const ChannelProfile& profile, const std::filesystem::path& path);

struct ChannelRealization {
    std::vector<std::complex<double>> tone_gains; // one per data subcarrier
    std::uint64_t seed = 0;
    std::string profile_name;
};

// Draws one channel realization: each tap is a circularly-symmetric complex
// Gaussian with variance equal to its normalized mean power (Rayleigh
// amplitudes), delays are quantized to the sampling period, and the frequency
// response is evaluated on the FFT grid. The data-subcarrier subset is the
// lowest-index contiguous block after removing the null guard edges
// symmetrically. Deterministic given (profile, config, seed); batch drivers
// should seed realization k with derive_stream(master_seed, k).
ChannelRealization realize_channel(const ChannelProfile& profile, const OfdmaConfig& config,
                                   std::uint64_t seed);

/// Per-tone SINR: |gain_i|^2 * 10^(mean_snr_db/10).
SinrVector sinr_per_tone(const ChannelRealization& realization, double mean_snr_db);

/// n i.i.d. squared-Rayleigh (exponential) SINRs with mean 10^(mean_snr_db/10).
SinrVector rayleigh_flat_vector(std::size_t n, double mean_snr_db, std::uint64_t seed);

} // namespace l2s

#endif
