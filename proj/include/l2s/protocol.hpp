// SPDX-License-Identifier: Apache-2.0
#ifndef L2S_PROTOCOL_HPP
#define L2S_PROTOCOL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "l2s/calibration.hpp"
#include "l2s/eesm.hpp"
#include "l2s/reference_curve.hpp"

namespace l2s {

/// A protocol operation needs state (report, curve, table entry) that has not
/// arrived yet.
class StateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Compressed EESM(beta) description an MSS sends upstream: a least-squares
// line in (beta dB, EESM dB) plus the window it is valid on and the worst
// in-window fit error.
struct CurveApprox {
    double slope = 0.0;        // dB per dB
    double intercept_db = 0.0; // EESM at beta_db = 0 on the fitted line
    double beta_lo_db = 0.0;
    double beta_hi_db = 0.0;
    double max_residual_db = 0.0;
    std::uint64_t sequence = 0;

    double eval(double beta_db) const { return intercept_db + slope * beta_db; }

    struct ClampedEval {
        double eesm_db;
        bool in_range;
    };
    /// Evaluation clamped to [beta_lo_db, beta_hi_db]; the linearity claim is
    /// local, so out-of-window queries pin to the nearest edge and say so.
    ClampedEval eval_clamped(double beta_db) const;
};

struct CinrReport {
    double cinr_db = 0.0;
    int format_id = 0;
    std::uint64_t sequence = 0;
};

// ---- Wire messages -------------------------------------------------------

struct CurveUpdateMsg {
    std::string mss_id;
    std::uint64_t sequence = 0;
    double slope = 0.0;
    double intercept_db = 0.0;
    double beta_lo_db = 0.0;
    double beta_hi_db = 0.0;
    double max_residual_db = 0.0;

    CurveApprox approx() const;
    bool operator==(const CurveUpdateMsg&) const = default;
};

struct CinrReportMsg {
    std::string mss_id;
    std::uint64_t sequence = 0;
    double cinr_db = 0.0;
    int format_id = 0;

    bool operator==(const CinrReportMsg&) const = default;
};

struct DecisionMsg {
    std::string mss_id;
    int format_id = 0;
    double boost_db = 0.0;
    std::vector<std::string> flags;

    bool operator==(const DecisionMsg&) const = default;
};

/// Optional handover bootstrap: the MSS hands the BS its per-format beta
/// table so reporting can start before the BS has one configured.
struct BetaTableBootstrapMsg {
    std::string mss_id;
    std::string channel_label;
    std::vector<std::pair<int, double>> entries; // (format_id, beta_db)

    bool operator==(const BetaTableBootstrapMsg&) const = default;
};

using ProtocolMessage =
    std::variant<CurveUpdateMsg, CinrReportMsg, DecisionMsg, BetaTableBootstrapMsg>;

std::string serialize_message(const ProtocolMessage& msg);
ProtocolMessage parse_message(const std::string& json_text);

// ---- Pure fitting --------------------------------------------------------

/// Least-squares line through the samples with beta_db in [window_lo_db,
/// window_hi_db]; needs at least 2 in-window samples. beta_lo/hi record the
/// extremes of the samples actually used; max_residual_db is exact over them.
CurveApprox fit_local_linear(std::span<const BetaCurvePoint> samples, double window_lo_db,
                             double window_hi_db);

// ---- MSS endpoint --------------------------------------------------------

struct MssOptions {
    double impl_loss_db = 0.0;
    double ema_alpha = 0.25;      // weight of the newest measurement
    double window_width_db = 8.0; // slow-update fit window
    double grid_step_db = 0.5;
};

// Mobile-side endpoint: owns the shared beta table, the active format, the
// measurement averager, and the per-message sequence counters.
class Mss {
public:
    Mss(std::string mss_id, BetaTable beta_table, int active_format, MssOptions options = {});

    const std::string& id() const { return mss_id_; }
    int active_format() const { return active_format_; }
    void set_active_format(int format_id);

    /// Fits EESM(beta) on a grid centered on the active format's beta and
    /// packages it for transmission. Sequence increments per call.
    CurveUpdateMsg slow_update(const SinrVector& gamma);

    /// Averaged, loss-compensated CINR at the active format's beta.
    CinrReportMsg fast_report(const SinrVector& gamma);

    BetaTableBootstrapMsg bootstrap_message() const;

private:
    std::string mss_id_;
    BetaTable beta_table_;
    int active_format_;
    MssOptions options_;
    std::uint64_t curve_seq_ = 0;
    std::uint64_t report_seq_ = 0;
    std::optional<double> ema_db_;
};

// ---- BS endpoint ---------------------------------------------------------

struct Prediction {
    double cinr_db = 0.0;
    bool in_range = true;                // beta_t - boost inside curve window
    std::optional<double> bler;          // when reference curves are attached
};

struct Selection {
    int format_id = 0;
    double boost_db = 0.0;
    bool below_threshold = false; // no candidate met its threshold
};

// Base-station endpoint. Everything it knows about an MSS arrived in
// messages; prediction combines the latest report with the curve line through
// the boost/beta scaling identity:
//
//   predicted(boost, target) = boost_db + approx(beta_target_db - boost_db)
//
// except that zero boost at the reported format returns the report verbatim.
class Bs {
public:
    Bs() = default;
    explicit Bs(BetaTable beta_table);

    bool has_beta_table() const { return beta_table_.has_value(); }
    const BetaTable& beta_table() const;

    /// Per-format reference curves; enables BLER prediction and
    /// threshold derivation.
    void attach_curves(CurveSet curves);

    /// CINR admission threshold for a format (dB).
    void set_threshold(int format_id, double cinr_db);
    /// Derive thresholds as the SNR at `target_bler` on each attached curve.
    void derive_thresholds(double target_bler = 0.1);
    std::optional<double> threshold(int format_id) const;

    /// Returns false (and ignores the message) when the sequence is stale.
    bool handle(const CurveUpdateMsg& msg);
    bool handle(const CinrReportMsg& msg);
    void handle(const BetaTableBootstrapMsg& msg);

    const CurveApprox* curve_approx(const std::string& mss_id) const;
    const CinrReportMsg* last_report(const std::string& mss_id) const;

    Prediction predict(const std::string& mss_id, double boost_db, int target_format) const;

    /// Picks (format, boost) among the candidates: qualifying pairs (predicted
    /// CINR >= threshold) ranked by efficiency (threshold order), then lowest
    /// boost, then lowest format id. With no qualifier, falls back to the
    /// largest-margin pair and flags it.
    Selection select(const std::string& mss_id, std::span<const int> candidate_formats,
                     std::span<const double> boost_set_db) const;

    DecisionMsg decision_message(const std::string& mss_id, const Selection& selection) const;

private:
    std::optional<BetaTable> beta_table_;
    std::optional<CurveSet> curves_;
    std::map<int, double> thresholds_;
    std::map<std::string, CurveApprox> curve_approx_;
    std::map<std::string, CinrReportMsg> last_report_;
};

} // namespace l2s

#endif
