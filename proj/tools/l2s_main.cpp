// SPDX-License-Identifier: Apache-2.0
//
// l2s: command-line front end for the effective-SINR link abstraction toolkit.
//
// Subcommands: map, calibrate, curve, protocol-demo.
// Exit codes: 0 success, 2 input error, 3 insufficient data, 4 numeric failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "l2s/calibration.hpp"
#include "l2s/channel.hpp"
#include "l2s/eesm.hpp"
#include "l2s/protocol.hpp"
#include "l2s/reference_curve.hpp"
#include "l2s/rng.hpp"
#include "l2s/units.hpp"
#include "l2s/version.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInsufficientData = 3;
constexpr int kExitNumeric = 4;

std::string format_db(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string format_linear(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Accepts "7.45", "7.45dB" or "7.45 dB".
double parse_db_value(std::string text) {
    while (!text.empty() && text.back() == ' ') {
        text.pop_back();
    }
    if (text.size() >= 2) {
        const std::string tail = text.substr(text.size() - 2);
        if (tail == "dB" || tail == "db" || tail == "DB") {
            text = text.substr(0, text.size() - 2);
        }
    }
    std::size_t pos = 0;
    const double v = std::stod(text, &pos);
    while (pos < text.size() && text[pos] == ' ') {
        ++pos;
    }
    if (pos != text.size()) {
        throw std::runtime_error("not a dB value: '" + text + "'");
    }
    return v;
}

struct Range {
    double lo;
    double hi;
};

Range parse_range(const std::string& text, const char* what) {
    Range r{};
    char extra = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf%c", &r.lo, &r.hi, &extra) != 2 || !(r.lo < r.hi)) {
        throw std::runtime_error(std::string(what) + ": expected 'lo:hi' with lo < hi, got '" +
                                 text + "'");
    }
    return r;
}

struct Grid {
    double lo;
    double step;
    double hi;
};

std::vector<double> parse_grid(const std::string& text) {
    Grid g{};
    char extra = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf%c", &g.lo, &g.step, &g.hi, &extra) != 3 ||
        !(g.step > 0.0) || !(g.lo < g.hi)) {
        throw std::runtime_error("--grid: expected 'lo:step:hi', got '" + text + "'");
    }
    std::vector<double> grid;
    for (double b = g.lo; b <= g.hi + 0.5 * g.step; b += g.step) {
        grid.push_back(b);
    }
    return grid;
}

/// Relative paths that do not exist are retried under $L2S_TABLE_DIR.
std::filesystem::path resolve_input(const std::string& path) {
    std::filesystem::path p(path);
    if (!std::filesystem::exists(p) && p.is_relative()) {
        if (const char* dir = std::getenv("L2S_TABLE_DIR")) {
            const std::filesystem::path candidate = std::filesystem::path(dir) / p;
            if (std::filesystem::exists(candidate)) {
                return candidate;
            }
        }
    }
    return p;
}

std::vector<double> load_gamma_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open gamma file: " + path.string());
    }
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) {
        throw l2s::ParseError(path.string(), 1, "empty file");
    }
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "gamma_linear") {
        throw l2s::ParseError(path.string(), 1, "expected header 'gamma_linear'");
    }
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        double v = 0.0;
        char extra = 0;
        if (std::sscanf(line.c_str(), "%lf%c", &v, &extra) != 1) {
            throw l2s::ParseError(path.string(), lineno, "malformed row: '" + line + "'");
        }
        values.push_back(v);
    }
    return values;
}

void write_manifest(const std::filesystem::path& out_file, const std::string& command,
                    const std::vector<std::string>& argv_rest, std::uint64_t seed,
                    const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));

    json manifest{{"command", command}, {"args", argv_rest},      {"seed", seed},
                  {"inputs", inputs},   {"outputs", outputs},      {"tool_version", l2s::kVersion},
                  {"timestamp", stamp}};
    const auto dir = out_file.has_parent_path() ? out_file.parent_path()
                                                : std::filesystem::current_path();
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write manifest in " + dir.string());
    }
    out << manifest.dump(2) << '\n';
}

// Shared gamma-source options for map and curve.
struct GammaSource {
    std::string flat;
    int n = 0;
    std::string gamma_file;
    int rayleigh = 0;
    double mean_snr_db = 0.0;
    std::uint64_t seed = 1;

    void add_options(CLI::App* cmd, bool allow_rayleigh) {
        cmd->add_option("--flat", flat, "Flat channel SINR in dB (e.g. 10 or 10dB)");
        cmd->add_option("--n", n, "Tone count for --flat");
        cmd->add_option("--gamma-file", gamma_file,
                        "CSV of linear per-tone SINRs (header 'gamma_linear')");
        if (allow_rayleigh) {
            cmd->add_option("--rayleigh", rayleigh,
                            "Draw this many i.i.d. squared-Rayleigh tones");
            cmd->add_option("--mean-snr", mean_snr_db, "Mean SNR in dB for --rayleigh")
                ->default_val(0.0);
            cmd->add_option("--seed", seed, "PRNG seed")->default_val(1);
        }
    }

    l2s::SinrVector make() const {
        const int sources = (flat.empty() ? 0 : 1) + (gamma_file.empty() ? 0 : 1) +
                            (rayleigh > 0 ? 1 : 0);
        if (sources != 1) {
            throw std::runtime_error("need exactly one gamma source (--flat/--gamma-file/--rayleigh)");
        }
        if (!flat.empty()) {
            if (n < 1) {
                throw std::runtime_error("--flat needs --n >= 1");
            }
            return l2s::SinrVector(
                std::vector<double>(static_cast<std::size_t>(n), l2s::db_to_linear(parse_db_value(flat))));
        }
        if (!gamma_file.empty()) {
            return l2s::SinrVector(load_gamma_csv(resolve_input(gamma_file)));
        }
        return l2s::rayleigh_flat_vector(static_cast<std::size_t>(rayleigh), mean_snr_db, seed);
    }
};

// ---- map -------------------------------------------------------------------

struct MapOptions {
    GammaSource gamma;
    std::optional<double> beta_db;
    int format = 0;
    std::string table_path;
    std::string curve_path;
    int mcs = 0;
    std::string out_path;
};

int cmd_map(const MapOptions& opt) {
    const l2s::SinrVector gamma = opt.gamma.make();

    double beta_db = 0.0;
    if (opt.beta_db && !opt.table_path.empty()) {
        throw std::runtime_error("give either --beta or --format with --table, not both");
    }
    if (opt.beta_db) {
        beta_db = *opt.beta_db;
    } else if (!opt.table_path.empty()) {
        if (opt.format < 1) {
            throw std::runtime_error("--table needs --format");
        }
        beta_db = l2s::load_beta_table(resolve_input(opt.table_path)).lookup(opt.format);
    } else {
        throw std::runtime_error("need a beta source: --beta or --format with --table");
    }

    const l2s::EffectiveSinr eff = l2s::eesm_effective_sinr(gamma, l2s::Beta::from_db(beta_db));

    std::optional<double> bler;
    if (!opt.curve_path.empty()) {
        const int mcs = opt.mcs > 0 ? opt.mcs : opt.format;
        if (mcs < 1) {
            throw std::runtime_error("--curve needs --mcs (or --format)");
        }
        const l2s::CurveSet curves = l2s::load_curves(resolve_input(opt.curve_path));
        bler = curves.get(mcs).bler_at(eff.db());
    }

    std::ostringstream body;
    body << "eff_sinr_db=" << format_db(eff.db()) << '\n'
         << "eff_sinr_linear=" << format_linear(eff.linear()) << '\n';
    if (bler) {
        body << "bler=" << format_linear(*bler) << '\n';
    }
    std::cout << body.str();

    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open for write: " + opt.out_path);
        }
        out << "eff_sinr_db,eff_sinr_linear" << (bler ? ",bler" : "") << '\n'
            << format_db(eff.db()) << ',' << format_linear(eff.linear());
        if (bler) {
            out << ',' << format_linear(*bler);
        }
        out << '\n';
        write_manifest(opt.out_path, "map", {}, opt.gamma.seed,
                       {opt.gamma.gamma_file, opt.table_path, opt.curve_path}, {opt.out_path});
    }
    return kExitOk;
}

// ---- calibrate ---------------------------------------------------------------

struct CalibrateOptions {
    int realizations = 100;
    std::string profile_path;
    std::string config_path;
    std::string curve_path;
    int mcs = 0;
    int format = 0;
    bool weighted = false;
    std::uint64_t seed = 1;
    std::optional<double> planted_beta_db;
    std::optional<double> snr_lo_db;
    std::optional<double> snr_hi_db;
    double noise_low_db = 0.0;
    double noise_high_db = 0.0;
    double noise_band_db = 2.5;
    std::string window = "0.001:0.9";
    std::string bracket = "-5:20";
    std::string out_path;
};

int cmd_calibrate(const CalibrateOptions& opt) {
    if (!opt.planted_beta_db) {
        throw std::runtime_error(
            "calibrate derives per-realization BLER from the reference curve at a planted "
            "beta; supply --planted <beta_db>");
    }
    if (opt.mcs < 1) {
        throw std::runtime_error("--mcs is required");
    }
    const l2s::ChannelProfile profile = l2s::load_channel_profile(resolve_input(opt.profile_path));
    const l2s::OfdmaConfig config = l2s::load_ofdma_config(resolve_input(opt.config_path));
    const l2s::CurveSet curves = l2s::load_curves(resolve_input(opt.curve_path));
    const l2s::ReferenceCurve& curve = curves.get(opt.mcs);

    const Range window = parse_range(opt.window, "--window");
    const Range bracket = parse_range(opt.bracket, "--bracket");
    const double snr_start = curve.snr_start().snr_db;
    const double snr_lo = opt.snr_lo_db.value_or(snr_start + 1.0);
    const double snr_hi = opt.snr_hi_db.value_or(snr_start + 12.0);
    if (!(snr_lo < snr_hi)) {
        throw std::runtime_error("--snr-lo must be below --snr-hi");
    }

    l2s::CalibrationSet set(opt.mcs, curve);
    l2s::Rng snr_rng(l2s::derive_stream(opt.seed, 0xA11CEULL));
    l2s::Rng noise_rng(l2s::derive_stream(opt.seed, 0x0B0B0ULL));
    for (int k = 0; k < opt.realizations; ++k) {
        const auto realization =
            l2s::realize_channel(profile, config, l2s::derive_stream(opt.seed, k));
        const double mean_snr = snr_rng.uniform(snr_lo, snr_hi);
        l2s::SinrVector gamma = l2s::sinr_per_tone(realization, mean_snr);
        double point_db = l2s::eesm_db(gamma, l2s::Beta::from_db(*opt.planted_beta_db));
        if (opt.noise_low_db > 0.0 || opt.noise_high_db > 0.0) {
            const double sigma = point_db < snr_start + opt.noise_band_db ? opt.noise_low_db
                                                                          : opt.noise_high_db;
            point_db += sigma * noise_rng.normal();
        }
        const double bler = curve.bler_at(point_db);
        if (bler > 0.0 && bler < 1.0) {
            set.add(std::move(gamma), bler);
        }
    }

    const l2s::TrainResult result = l2s::train_beta(
        set, {.weighted = opt.weighted,
              .window = {window.lo, window.hi},
              .bracket_lo_db = bracket.lo,
              .bracket_hi_db = bracket.hi});

    json exclusions = json::array();
    for (const auto& ex : result.exclusions) {
        exclusions.push_back({{"index", ex.sample_index},
                              {"reason", l2s::to_string(ex.reason)},
                              {"bler", ex.bler}});
    }
    json trace = json::array();
    for (const auto& step : result.minimize.trace) {
        trace.push_back({{"lo_db", step.lo_db},
                         {"hi_db", step.hi_db},
                         {"beta_db", step.beta_db},
                         {"cost", step.cost}});
    }
    json report{{"mcs_id", opt.mcs},
                {"format", opt.format > 0 ? opt.format : opt.mcs},
                {"weighted", result.weighted},
                {"planted_beta_db", *opt.planted_beta_db},
                {"beta_db", result.beta_db},
                {"cost", result.cost},
                {"realizations", opt.realizations},
                {"raw_count", set.raw_count()},
                {"used_samples", result.used_samples},
                {"exclusions", exclusions},
                {"degenerate_fit", result.degenerate_fit},
                {"snr_start_db", result.snr_start_db ? json(*result.snr_start_db) : json()},
                {"bracket_trace", trace},
                {"bracket", {{"lo_db", bracket.lo}, {"hi_db", bracket.hi}}},
                {"bler_window", {{"lo", window.lo}, {"hi", window.hi}}},
                {"expansions", result.minimize.expansions},
                {"at_bracket_edge", result.minimize.at_bracket_edge},
                {"seed", opt.seed},
                {"profile", profile.name()},
                {"noise", {{"low_db", opt.noise_low_db},
                           {"high_db", opt.noise_high_db},
                           {"band_db", opt.noise_band_db}}},
                {"mean_snr_range_db", {{"lo", snr_lo}, {"hi", snr_hi}}}};

    std::cout << "beta_db=" << format_db(result.beta_db) << '\n';
    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open for write: " + opt.out_path);
        }
        out << report.dump(2) << '\n';
        write_manifest(opt.out_path, "calibrate", {}, opt.seed,
                       {opt.profile_path, opt.config_path, opt.curve_path}, {opt.out_path});
    } else {
        std::cout << report.dump(2) << '\n';
    }
    return kExitOk;
}

// ---- curve -------------------------------------------------------------------

struct CurveOptions {
    GammaSource gamma;
    std::string grid = "-40:0.5:40";
    std::string fit;
    std::string out_path;
    std::string fit_out_path;
};

int cmd_curve(const CurveOptions& opt) {
    const l2s::SinrVector gamma = opt.gamma.make();
    const std::vector<double> grid = parse_grid(opt.grid);
    const auto curve = l2s::eesm_beta_curve(gamma, grid);

    std::ostringstream csv;
    csv << "beta_db,eesm_db\n";
    for (const auto& pt : curve) {
        csv << format_db(pt.beta_db) << ',' << format_db(pt.eesm_db) << '\n';
    }

    std::optional<json> fit_json;
    if (!opt.fit.empty()) {
        const Range window = parse_range(opt.fit, "--fit");
        const l2s::CurveApprox fit = l2s::fit_local_linear(curve, window.lo, window.hi);
        fit_json = json{{"slope", fit.slope},
                        {"intercept_db", fit.intercept_db},
                        {"beta_lo_db", fit.beta_lo_db},
                        {"beta_hi_db", fit.beta_hi_db},
                        {"max_residual_db", fit.max_residual_db}};
    }

    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open for write: " + opt.out_path);
        }
        out << csv.str();
        write_manifest(opt.out_path, "curve", {}, opt.gamma.seed, {opt.gamma.gamma_file},
                       {opt.out_path});
    } else {
        std::cout << csv.str();
    }
    if (fit_json) {
        if (!opt.fit_out_path.empty()) {
            std::ofstream out(opt.fit_out_path, std::ios::binary);
            if (!out) {
                throw std::runtime_error("cannot open for write: " + opt.fit_out_path);
            }
            out << fit_json->dump(2) << '\n';
        } else {
            std::cout << fit_json->dump() << '\n';
        }
    }
    return kExitOk;
}

// ---- protocol-demo ------------------------------------------------------------

struct DemoOptions {
    std::string scenario_path;
    std::uint64_t seed = 1;
    std::string out_path;
};

struct DemoStep {
    double boost_db;
    int target_format;
};

int cmd_protocol_demo(const DemoOptions& opt) {
    std::ifstream in(resolve_input(opt.scenario_path));
    if (!in) {
        throw std::runtime_error("cannot open scenario: " + opt.scenario_path);
    }
    json scenario;
    try {
        in >> scenario;
    } catch (const json::exception& e) {
        throw std::runtime_error(opt.scenario_path + ": " + e.what());
    }

    const auto scenario_dir = resolve_input(opt.scenario_path).parent_path();
    auto scenario_file = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() ? path : scenario_dir / path;
    };

    // Beta table: from a CSV path or inline entries.
    l2s::BetaTable table;
    if (scenario.contains("beta_table_path")) {
        table = l2s::load_beta_table(scenario_file(scenario["beta_table_path"].get<std::string>()));
    } else if (scenario.contains("beta_table_entries")) {
        table = l2s::BetaTable(scenario.value("channel_label", "custom"));
        for (const auto& e : scenario["beta_table_entries"]) {
            table.set(e.at("format").get<int>(), e.at("beta_db").get<double>());
        }
    } else {
        throw std::runtime_error("scenario needs beta_table_path or beta_table_entries");
    }

    const auto mss_id = scenario.value("mss_id", std::string("mss-1"));
    const int active_format = scenario.at("active_format").get<int>();
    l2s::MssOptions mss_options;
    mss_options.impl_loss_db = scenario.value("impl_loss_db", 0.0);
    mss_options.ema_alpha = scenario.value("ema_alpha", 0.25);
    mss_options.window_width_db = scenario.value("window_width_db", 8.0);
    l2s::Mss mss(mss_id, table, active_format, mss_options);

    const bool bootstrap = scenario.value("mss_bootstraps_bs", false);
    l2s::Bs bs = bootstrap ? l2s::Bs() : l2s::Bs(table);
    if (bootstrap) {
        bs.handle(mss.bootstrap_message());
    }
    if (scenario.contains("curves_path")) {
        bs.attach_curves(l2s::load_curves(scenario_file(scenario["curves_path"].get<std::string>())));
        bs.derive_thresholds(scenario.value("threshold_bler", 0.1));
    }
    if (scenario.contains("thresholds")) {
        for (const auto& [key, value] : scenario["thresholds"].items()) {
            bs.set_threshold(std::stoi(key), value.get<double>());
        }
    }

    // Channel model per step.
    const json channel = scenario.at("channel");
    const std::string channel_type = channel.at("type").get<std::string>();
    std::optional<l2s::ChannelProfile> profile;
    std::optional<l2s::OfdmaConfig> config;
    if (channel_type == "profile") {
        profile = l2s::load_channel_profile(scenario_file(channel.at("profile_path").get<std::string>()));
        config = l2s::load_ofdma_config(scenario_file(channel.at("config_path").get<std::string>()));
    } else if (channel_type != "rayleigh" && channel_type != "flat") {
        throw std::runtime_error("channel.type must be rayleigh, flat or profile");
    }
    auto make_gamma = [&](std::uint64_t step) -> l2s::SinrVector {
        if (channel_type == "flat") {
            const auto n = channel.value("n", 24);
            return l2s::SinrVector(std::vector<double>(
                static_cast<std::size_t>(n), l2s::db_to_linear(channel.at("sinr_db").get<double>())));
        }
        if (channel_type == "rayleigh") {
            return l2s::rayleigh_flat_vector(channel.value("n", 24),
                                             channel.value("mean_snr_db", 0.0),
                                             l2s::derive_stream(opt.seed, step));
        }
        const auto realization =
            l2s::realize_channel(*profile, *config, l2s::derive_stream(opt.seed, step));
        return l2s::sinr_per_tone(realization, channel.value("mean_snr_db", 10.0));
    };

    // Steps: explicit list or generated.
    std::vector<DemoStep> steps;
    if (scenario.contains("steps")) {
        for (const auto& s : scenario["steps"]) {
            steps.push_back({s.value("boost_db", 0.0), s.value("target_format", active_format)});
        }
    } else if (scenario.contains("generate")) {
        const json gen = scenario["generate"];
        const int num = gen.at("num_steps").get<int>();
        const double lo = gen.value("boost_lo_db", -3.0);
        const double hi = gen.value("boost_hi_db", 6.0);
        const std::vector<int> formats = gen.value("target_formats", std::vector<int>{active_format});
        const int identity_every = gen.value("identity_every", 10);
        l2s::Rng gen_rng(l2s::derive_stream(opt.seed, 0x57E9ULL));
        for (int i = 0; i < num; ++i) {
            if (identity_every > 0 && i % identity_every == 0) {
                steps.push_back({0.0, active_format});
            } else {
                const auto pick = static_cast<std::size_t>(gen_rng.next_u64() % formats.size());
                steps.push_back({gen_rng.uniform(lo, hi), formats[pick]});
            }
        }
    } else {
        throw std::runtime_error("scenario needs steps or generate");
    }

    const int slow_every = scenario.value("slow_update_every", 1);
    std::optional<json> candidates;
    if (scenario.contains("candidates")) {
        candidates = scenario["candidates"];
    }

    std::ostringstream trace;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const l2s::SinrVector gamma = make_gamma(i);
        json line{{"step", i}};

        if (slow_every > 0 && i % static_cast<std::size_t>(slow_every) == 0) {
            const auto update_wire = l2s::serialize_message(mss.slow_update(gamma));
            const auto update = std::get<l2s::CurveUpdateMsg>(l2s::parse_message(update_wire));
            bs.handle(update);
            line["curve_update"] = json::parse(update_wire);
        }
        const auto report_wire = l2s::serialize_message(mss.fast_report(gamma));
        const auto report = std::get<l2s::CinrReportMsg>(l2s::parse_message(report_wire));
        bs.handle(report);
        line["report"] = json::parse(report_wire);

        const DemoStep& step = steps[i];
        const l2s::Prediction pred = bs.predict(mss_id, step.boost_db, step.target_format);
        const double beta_t = table.lookup(step.target_format);
        const double truth = step.boost_db == 0.0
                                 ? l2s::eesm_db(gamma, l2s::Beta::from_db(beta_t))
                                 : l2s::eesm_boosted(gamma, l2s::BoostRatio::from_db(step.boost_db),
                                                     l2s::Beta::from_db(beta_t))
                                       .db();
        line["boost_db"] = step.boost_db;
        line["target_format"] = step.target_format;
        line["prediction"] = {{"cinr_db", pred.cinr_db}, {"in_range", pred.in_range}};
        if (pred.bler) {
            line["prediction"]["bler"] = *pred.bler;
        }
        line["truth_eesm_db"] = truth;
        line["prediction_error_db"] = std::abs(pred.cinr_db - truth);
        line["max_residual_db"] = bs.curve_approx(mss_id)->max_residual_db;

        if (candidates) {
            const auto formats = candidates->at("formats").get<std::vector<int>>();
            const auto boosts = candidates->at("boosts_db").get<std::vector<double>>();
            const l2s::Selection sel = bs.select(mss_id, formats, boosts);
            line["decision"] = json::parse(l2s::serialize_message(bs.decision_message(mss_id, sel)));
        }
        trace << line.dump() << '\n';
    }

    if (!opt.out_path.empty()) {
        std::ofstream out(opt.out_path, std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot open for write: " + opt.out_path);
        }
        out << trace.str();
        write_manifest(opt.out_path, "protocol-demo", {}, opt.seed, {opt.scenario_path},
                       {opt.out_path});
    } else {
        std::cout << trace.str();
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Effective-SINR link abstraction toolkit for OFDMA downlinks"};
    app.set_version_flag("--version", l2s::kVersion);
    app.require_subcommand(1);

    MapOptions map_opt;
    auto* map_cmd = app.add_subcommand(
        "map", "Compress a per-tone SINR vector into one effective SINR");
    map_opt.gamma.add_options(map_cmd, /*allow_rayleigh=*/false);
    double beta_db_flag = 0.0;
    auto* beta_opt = map_cmd->add_option("--beta", beta_db_flag, "Beta in dB");
    map_cmd->add_option("--format", map_opt.format, "Format id for --table lookup");
    map_cmd->add_option("--table", map_opt.table_path, "Beta table CSV");
    map_cmd->add_option("--curve", map_opt.curve_path, "Reference curve CSV for BLER output");
    map_cmd->add_option("--mcs", map_opt.mcs, "Curve id for --curve (defaults to --format)");
    map_cmd->add_option("--out", map_opt.out_path, "Also write a one-row CSV here");

    CalibrateOptions cal_opt;
    auto* cal_cmd = app.add_subcommand("calibrate", "Train beta for one format from seeded realizations");
    cal_cmd->add_option("--realizations", cal_opt.realizations, "Channel realizations")
        ->default_val(100);
    cal_cmd->add_option("--profile", cal_opt.profile_path, "Channel profile JSON")->required();
    cal_cmd->add_option("--config", cal_opt.config_path, "OFDMA config JSON")->required();
    cal_cmd->add_option("--curve", cal_opt.curve_path, "Reference curve CSV")->required();
    cal_cmd->add_option("--mcs", cal_opt.mcs, "Curve id to calibrate against")->required();
    cal_cmd->add_option("--format", cal_opt.format, "Format label for the report");
    cal_cmd->add_flag("--weighted", cal_opt.weighted, "Use the snr_start-weighted cost");
    cal_cmd->add_option("--seed", cal_opt.seed, "Master seed")->default_val(1);
    double planted_flag = 0.0;
    auto* planted_opt =
        cal_cmd->add_option("--planted", planted_flag, "Planted beta (dB) used to synthesize BLER");
    double snr_lo_flag = 0.0, snr_hi_flag = 0.0;
    auto* snr_lo_opt = cal_cmd->add_option("--snr-lo", snr_lo_flag, "Mean-SNR draw range low (dB)");
    auto* snr_hi_opt = cal_cmd->add_option("--snr-hi", snr_hi_flag, "Mean-SNR draw range high (dB)");
    cal_cmd->add_option("--noise-low", cal_opt.noise_low_db,
                        "Target noise sigma (dB) near snr_start");
    cal_cmd->add_option("--noise-high", cal_opt.noise_high_db,
                        "Target noise sigma (dB) away from snr_start");
    cal_cmd->add_option("--noise-band", cal_opt.noise_band_db,
                        "Width (dB) of the noisy band above snr_start")
        ->default_val(2.5);
    cal_cmd->add_option("--window", cal_opt.window, "BLER window lo:hi")->default_val("0.001:0.9");
    cal_cmd->add_option("--bracket", cal_opt.bracket, "Beta bracket lo:hi (dB)")
        ->default_val("-5:20");
    cal_cmd->add_option("--out", cal_opt.out_path, "Write the calibration report JSON here");

    CurveOptions curve_opt;
    auto* curve_cmd = app.add_subcommand("curve", "Emit EESM as a function of beta");
    curve_opt.gamma.add_options(curve_cmd, /*allow_rayleigh=*/true);
    curve_cmd->add_option("--grid", curve_opt.grid, "Beta grid lo:step:hi (dB)")
        ->default_val("-40:0.5:40");
    curve_cmd->add_option("--fit", curve_opt.fit, "Also fit a line on window lo:hi (dB)");
    curve_cmd->add_option("--out", curve_opt.out_path, "Write the CSV here instead of stdout");
    curve_cmd->add_option("--fit-out", curve_opt.fit_out_path, "Write the fit JSON here");

    DemoOptions demo_opt;
    auto* demo_cmd = app.add_subcommand("protocol-demo", "Run one MSS/BS reporting session");
    demo_cmd->add_option("--scenario", demo_opt.scenario_path, "Scenario JSON")->required();
    demo_cmd->add_option("--seed", demo_opt.seed, "Master seed")->default_val(1);
    demo_cmd->add_option("--out", demo_opt.out_path, "Write the JSONL trace here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    if (beta_opt->count() > 0) {
        map_opt.beta_db = beta_db_flag;
    }
    if (planted_opt->count() > 0) {
        cal_opt.planted_beta_db = planted_flag;
    }
    if (snr_lo_opt->count() > 0) {
        cal_opt.snr_lo_db = snr_lo_flag;
    }
    if (snr_hi_opt->count() > 0) {
        cal_opt.snr_hi_db = snr_hi_flag;
    }

    try {
        if (map_cmd->parsed()) {
            return cmd_map(map_opt);
        }
        if (cal_cmd->parsed()) {
            return cmd_calibrate(cal_opt);
        }
        if (curve_cmd->parsed()) {
            return cmd_curve(curve_opt);
        }
        if (demo_cmd->parsed()) {
            return cmd_protocol_demo(demo_opt);
        }
    } catch (const l2s::InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInsufficientData;
    } catch (const l2s::NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
