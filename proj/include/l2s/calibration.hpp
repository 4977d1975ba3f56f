// SPDX-License-Identifier: Apache-2.0
#ifndef L2S_CALIBRATION_HPP
#define L2S_CALIBRATION_HPP

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "l2s/eesm.hpp"
#include "l2s/reference_curve.hpp"

namespace l2s {

enum class ExclusionReason {
    bler_above_curve_range,
    bler_below_curve_range,
    outside_bler_window,
};

const char* to_string(ExclusionReason reason);

struct Exclusion {
    std::size_t sample_index;
    ExclusionReason reason;
    double bler;
};

/// One usable training point: a per-tone SINR vector, its measured BLER, and
/// the AWGN-equivalent SNR target obtained by inverting the reference curve.
struct CalibrationSample {
    SinrVector gamma;
    double bler;
    double awgn_equiv_snr_db;
};

struct BlerWindow {
    double lo = 0.001;
    double hi = 0.9;
};

/// Inverts a measured BLER through the AWGN curve. Returns the equivalent SNR
/// or, when the BLER is outside the invertible range, the exclusion reason.
struct InversionResult {
    std::optional<double> snr_db;
    ExclusionReason reason = ExclusionReason::outside_bler_window;
};
InversionResult awgn_equivalent_snr(double bler, const ReferenceCurve& curve);

// Raw (gamma, bler) measurements for one MCS format plus the AWGN reference
// they calibrate against. Windowing and inversion happen in prepare(), which
// reports excluded samples instead of clamping them into the fit.
class CalibrationSet {
public:
    CalibrationSet(int mcs_id, ReferenceCurve curve);

    void add(SinrVector gamma, double bler);

    int mcs_id() const { return mcs_id_; }
    const ReferenceCurve& curve() const { return curve_; }
    std::size_t raw_count() const { return gammas_.size(); }

    struct Prepared {
        std::vector<CalibrationSample> samples;
        std::vector<Exclusion> exclusions;
    };
    Prepared prepare(const BlerWindow& window) const;

private:
    int mcs_id_;
    ReferenceCurve curve_;
    std::vector<SinrVector> gammas_;
    std::vector<double> blers_;
};

struct WeightVector {
    std::vector<double> weights; // finite, >= 0, one per sample
};

/// Sum over samples of squared dB residuals (target - EESM(gamma, beta)).
double unweighted_cost(const Beta& beta, std::span<const CalibrationSample> samples);

/// w_n = ((snr_eff_db(n) - snr_start_db) / snr_start_db)^2, in dB. snr_eff is
/// the sample's AWGN-equivalent SNR. snr_start_db == 0 is a configuration
/// error (the weight is undefined there).
WeightVector weight_vector(std::span<const CalibrationSample> samples, double snr_start_db);

/// Sum of w_n * residual_n^2; |weights| must match |samples|.
double weighted_cost(const Beta& beta, std::span<const CalibrationSample> samples,
                     const WeightVector& weights);

struct BracketStep {
    double lo_db;
    double hi_db;
    double beta_db;  // minimizer found inside this bracket
    double cost;
};

struct MinimizeResult {
    double beta_db = 0.0;
    double cost = 0.0;
    bool at_bracket_edge = false; // still pinned to an edge after all expansions
    int expansions = 0;
    std::vector<BracketStep> trace;
};

// Scalar minimization by golden-section search with parabolic interpolation
// (Brent), to 1e-4 dB absolute. A minimizer that lands within tolerance of a
// bracket edge triggers a doubling expansion toward that edge, up to 3 times.
MinimizeResult minimize_beta(const std::function<double(double)>& cost_of_beta_db, double lo_db,
                             double hi_db, double tol_db = 1e-4);

/// Non-finite cost encountered inside the minimization bracket.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
public:
    InsufficientDataError(const std::string& what, std::vector<Exclusion> exclusions)
        : std::runtime_error(what), exclusions_(std::move(exclusions)) {}
    const std::vector<Exclusion>& exclusions() const { return exclusions_; }

private:
    std::vector<Exclusion> exclusions_;
};

struct TrainOptions {
    bool weighted = false;
    BlerWindow window{};
    double bracket_lo_db = -5.0;
    double bracket_hi_db = 20.0;
};

struct TrainResult {
    double beta_db = 0.0;
    double cost = 0.0;
    bool weighted = false;
    std::size_t used_samples = 0;
    std::vector<Exclusion> exclusions;
    bool degenerate_fit = false; // cost flat in beta (e.g. all-flat channels)
    std::optional<double> snr_start_db; // set on the weighted path
    MinimizeResult minimize;
};

// Full training pass: window-filter the measurements, invert BLERs into AWGN
// targets, optionally build the SNR_start weights, and minimize the selected
// cost over the bracket. Throws InsufficientDataError when fewer than 2
// samples survive the window.
TrainResult train_beta(const CalibrationSet& set, const TrainOptions& options = {});

// Per-format beta lookup, dB. Shipped defaults live in
// data/betas_pb_3kmh.csv and data/betas_va_60kmh.csv.
class BetaTable {
public:
    BetaTable() = default;
    explicit BetaTable(std::string channel_label) : label_(std::move(channel_label)) {}

    void set(int format_id, double beta_db);
    bool contains(int format_id) const { return entries_.count(format_id) != 0; }
    double lookup(int format_id) const;
    const std::map<int, double>& entries() const { return entries_; }
    const std::string& channel_label() const { return label_; }
    std::size_t size() const { return entries_.size(); }

private:
    std::string label_;
    std::map<int, double> entries_;
};

// CSV schema: header "format,beta_db", one row per format.
BetaTable load_beta_table(const std::filesystem::path& path);
void save_beta_table(const BetaTable& table, const std::filesystem::path& path);

inline double lookup_beta(const BetaTable& table, int format_id) {
    return table.lookup(format_id);
}

} // namespace l2s

#endif
