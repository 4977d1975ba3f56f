// SPDX-License-Identifier: Apache-2.0
#include "l2s/protocol.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace l2s {

CurveApprox::ClampedEval CurveApprox::eval_clamped(double beta_db) const {
    const double clamped = std::clamp(beta_db, beta_lo_db, beta_hi_db);
    return {eval(clamped), clamped == beta_db};
}

CurveApprox CurveUpdateMsg::approx() const {
    return {slope, intercept_db, beta_lo_db, beta_hi_db, max_residual_db, sequence};
}

// ---- Wire format -----------------------------------------------------------

std::string serialize_message(const ProtocolMessage& msg) {
    nlohmann::json j;
    if (const auto* cu = std::get_if<CurveUpdateMsg>(&msg)) {
        j = {{"type", "curve_update"},
             {"mss_id", cu->mss_id},
             {"sequence", cu->sequence},
             {"slope", cu->slope},
             {"intercept_db", cu->intercept_db},
             {"beta_lo_db", cu->beta_lo_db},
             {"beta_hi_db", cu->beta_hi_db},
             {"max_residual_db", cu->max_residual_db}};
    } else if (const auto* cr = std::get_if<CinrReportMsg>(&msg)) {
        j = {{"type", "cinr_report"},
             {"mss_id", cr->mss_id},
             {"sequence", cr->sequence},
             {"cinr_db", cr->cinr_db},
             {"format_id", cr->format_id}};
    } else if (const auto* d = std::get_if<DecisionMsg>(&msg)) {
        j = {{"type", "decision"},
             {"mss_id", d->mss_id},
             {"format_id", d->format_id},
             {"boost_db", d->boost_db},
             {"flags", d->flags}};
    } else {
        const auto& b = std::get<BetaTableBootstrapMsg>(msg);
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& [format, beta_db] : b.entries) {
            entries.push_back({{"format", format}, {"beta_db", beta_db}});
        }
        j = {{"type", "beta_table_bootstrap"},
             {"mss_id", b.mss_id},
             {"channel_label", b.channel_label},
             {"entries", entries}};
    }
    return j.dump();
}

ProtocolMessage parse_message(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
        const std::string type = j.at("type").get<std::string>();
        if (type == "curve_update") {
            CurveUpdateMsg m;
            m.mss_id = j.at("mss_id").get<std::string>();
            m.sequence = j.at("sequence").get<std::uint64_t>();
            m.slope = j.at("slope").get<double>();
            m.intercept_db = j.at("intercept_db").get<double>();
            m.beta_lo_db = j.at("beta_lo_db").get<double>();
            m.beta_hi_db = j.at("beta_hi_db").get<double>();
            m.max_residual_db = j.at("max_residual_db").get<double>();
            return m;
        }
        if (type == "cinr_report") {
            CinrReportMsg m;
            m.mss_id = j.at("mss_id").get<std::string>();
            m.sequence = j.at("sequence").get<std::uint64_t>();
            m.cinr_db = j.at("cinr_db").get<double>();
            m.format_id = j.at("format_id").get<int>();
            return m;
        }
        if (type == "decision") {
            DecisionMsg m;
            m.mss_id = j.at("mss_id").get<std::string>();
            m.format_id = j.at("format_id").get<int>();
            m.boost_db = j.at("boost_db").get<double>();
            m.flags = j.at("flags").get<std::vector<std::string>>();
            return m;
        }
        if (type == "beta_table_bootstrap") {
            BetaTableBootstrapMsg m;
            m.mss_id = j.at("mss_id").get<std::string>();
            m.channel_label = j.at("channel_label").get<std::string>();
            for (const auto& e : j.at("entries")) {
                m.entries.emplace_back(e.at("format").get<int>(), e.at("beta_db").get<double>());
            }
            return m;
        }
        throw std::runtime_error("parse_message: unknown message type '" + type + "'");
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("parse_message: ") + e.what());
    }
}

// ---- Fitting ---------------------------------------------------------------

CurveApprox fit_local_linear(std::span<const BetaCurvePoint> samples, double window_lo_db,
                             double window_hi_db) {
    if (!(window_lo_db < window_hi_db)) {
        throw std::domain_error("fit_local_linear: window must satisfy lo < hi");
    }
    std::vector<BetaCurvePoint> used;
    for (const auto& s : samples) {
        if (s.beta_db >= window_lo_db && s.beta_db <= window_hi_db) {
            used.push_back(s);
        }
    }
    if (used.size() < 2) {
        throw std::domain_error("fit_local_linear: need at least 2 samples inside the window");
    }

    double x_mean = 0.0, y_mean = 0.0;
    for (const auto& s : used) {
        x_mean += s.beta_db;
        y_mean += s.eesm_db;
    }
    x_mean /= static_cast<double>(used.size());
    y_mean /= static_cast<double>(used.size());

    double sxx = 0.0, sxy = 0.0;
    for (const auto& s : used) {
        sxx += (s.beta_db - x_mean) * (s.beta_db - x_mean);
        sxy += (s.beta_db - x_mean) * (s.eesm_db - y_mean);
    }
    if (sxx == 0.0) {
        throw std::domain_error("fit_local_linear: all samples at one beta");
    }

    CurveApprox fit;
    fit.slope = sxy / sxx;
    fit.intercept_db = y_mean - fit.slope * x_mean;
    fit.beta_lo_db = used.front().beta_db;
    fit.beta_hi_db = used.back().beta_db;
    for (const auto& s : used) {
        fit.beta_lo_db = std::min(fit.beta_lo_db, s.beta_db);
        fit.beta_hi_db = std::max(fit.beta_hi_db, s.beta_db);
        fit.max_residual_db = std::max(fit.max_residual_db, std::abs(fit.eval(s.beta_db) - s.eesm_db));
    }
    return fit;
}

// ---- MSS -------------------------------------------------------------------

Mss::Mss(std::string mss_id, BetaTable beta_table, int active_format, MssOptions options)
    : mss_id_(std::move(mss_id)), beta_table_(std::move(beta_table)),
      active_format_(active_format), options_(options) {
    beta_table_.lookup(active_format_); // throws when the format is unknown
    if (!(options_.ema_alpha > 0.0) || options_.ema_alpha > 1.0) {
        throw std::domain_error("Mss: ema_alpha must lie in (0, 1]");
    }
    if (!(options_.window_width_db > 0.0) || !(options_.grid_step_db > 0.0)) {
        throw std::domain_error("Mss: window width and grid step must be > 0");
    }
}

void Mss::set_active_format(int format_id) {
    beta_table_.lookup(format_id);
    active_format_ = format_id;
}

CurveUpdateMsg Mss::slow_update(const SinrVector& gamma) {
    const double center_db = beta_table_.lookup(active_format_);
    const double half = 0.5 * options_.window_width_db;
    const int steps = static_cast<int>(std::lround(options_.window_width_db / options_.grid_step_db));

    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(steps) + 1);
    for (int k = 0; k <= steps; ++k) {
        grid.push_back(center_db - half + options_.grid_step_db * k);
    }
    const auto samples = eesm_beta_curve(gamma, grid);
    CurveApprox fit = fit_local_linear(samples, center_db - half, center_db + half);
    fit.sequence = ++curve_seq_;

    return {mss_id_,        fit.sequence,   fit.slope,          fit.intercept_db,
            fit.beta_lo_db, fit.beta_hi_db, fit.max_residual_db};
}

CinrReportMsg Mss::fast_report(const SinrVector& gamma) {
    const Beta beta = Beta::from_db(beta_table_.lookup(active_format_));
    const double measured = eesm_db(gamma, beta) - options_.impl_loss_db;
    if (ema_db_) {
        ema_db_ = options_.ema_alpha * measured + (1.0 - options_.ema_alpha) * *ema_db_;
    } else {
        ema_db_ = measured;
    }
    return {mss_id_, ++report_seq_, *ema_db_, active_format_};
}

BetaTableBootstrapMsg Mss::bootstrap_message() const {
    BetaTableBootstrapMsg msg;
    msg.mss_id = mss_id_;
    msg.channel_label = beta_table_.channel_label();
    for (const auto& [format, beta_db] : beta_table_.entries()) {
        msg.entries.emplace_back(format, beta_db);
    }
    return msg;
}

// ---- BS --------------------------------------------------------------------

Bs::Bs(BetaTable beta_table) : beta_table_(std::move(beta_table)) {}

const BetaTable& Bs::beta_table() const {
    if (!beta_table_) {
        throw StateError("Bs: no beta table configured or bootstrapped yet");
    }
    return *beta_table_;
}

void Bs::attach_curves(CurveSet curves) { curves_ = std::move(curves); }

void Bs::set_threshold(int format_id, double cinr_db) { thresholds_[format_id] = cinr_db; }

void Bs::derive_thresholds(double target_bler) {
    if (!curves_) {
        throw StateError("Bs: derive_thresholds needs attached curves");
    }
    for (const auto& [mcs_id, curve] : curves_->curves()) {
        thresholds_[mcs_id] = curve.snr_at(target_bler);
    }
}

std::optional<double> Bs::threshold(int format_id) const {
    auto it = thresholds_.find(format_id);
    if (it == thresholds_.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool Bs::handle(const CurveUpdateMsg& msg) {
    auto it = curve_approx_.find(msg.mss_id);
    if (it != curve_approx_.end() && msg.sequence <= it->second.sequence) {
        return false; // stale update
    }
    curve_approx_[msg.mss_id] = msg.approx();
    return true;
}

bool Bs::handle(const CinrReportMsg& msg) {
    auto it = last_report_.find(msg.mss_id);
    if (it != last_report_.end() && msg.sequence <= it->second.sequence) {
        return false;
    }
    last_report_[msg.mss_id] = msg;
    return true;
}

void Bs::handle(const BetaTableBootstrapMsg& msg) {
    if (beta_table_) {
        return; // BS-owned table wins; bootstrap only fills a blank state
    }
    BetaTable table(msg.channel_label);
    for (const auto& [format, beta_db] : msg.entries) {
        table.set(format, beta_db);
    }
    beta_table_ = std::move(table);
}

const CurveApprox* Bs::curve_approx(const std::string& mss_id) const {
    auto it = curve_approx_.find(mss_id);
    return it == curve_approx_.end() ? nullptr : &it->second;
}

const CinrReportMsg* Bs::last_report(const std::string& mss_id) const {
    auto it = last_report_.find(mss_id);
    return it == last_report_.end() ? nullptr : &it->second;
}

Prediction Bs::predict(const std::string& mss_id, double boost_db, int target_format) const {
    const CurveApprox* approx = curve_approx(mss_id);
    const CinrReportMsg* report = last_report(mss_id);
    if (approx == nullptr || report == nullptr) {
        throw StateError("Bs: no curve approximation and report held for '" + mss_id + "'");
    }
    const double beta_target_db = beta_table().lookup(target_format);

    Prediction out;
    if (boost_db == 0.0 && target_format == report->format_id) {
        // Identity: asking about the reported operating point.
        out.cinr_db = report->cinr_db;
        out.in_range = true;
    } else {
        const auto ev = approx->eval_clamped(beta_target_db - boost_db);
        out.cinr_db = boost_db + ev.eesm_db;
        out.in_range = ev.in_range;
    }
    if (curves_ && curves_->contains(target_format)) {
        out.bler = curves_->get(target_format).bler_at(out.cinr_db);
    }
    return out;
}

Selection Bs::select(const std::string& mss_id, std::span<const int> candidate_formats,
                     std::span<const double> boost_set_db) const {
    if (candidate_formats.empty() || boost_set_db.empty()) {
        throw std::domain_error("Bs::select: empty candidate set");
    }
    for (int format : candidate_formats) {
        if (!threshold(format)) {
            throw StateError("Bs::select: no threshold for format " + std::to_string(format));
        }
    }

    bool have_qualifier = false;
    Selection best{};
    double best_threshold = 0.0;
    Selection fallback{};
    double fallback_margin = 0.0;
    bool have_fallback = false;

    for (int format : candidate_formats) {
        const double thr = *threshold(format);
        for (double boost_db : boost_set_db) {
            const Prediction pred = predict(mss_id, boost_db, format);
            const double margin = pred.cinr_db - thr;
            if (margin >= 0.0) {
                // Efficiency ranked by threshold: a format that needs more
                // CINR carries more bits.
                const bool better =
                    !have_qualifier || thr > best_threshold ||
                    (thr == best_threshold &&
                     (boost_db < best.boost_db ||
                      (boost_db == best.boost_db && format < best.format_id)));
                if (better) {
                    best = {format, boost_db, false};
                    best_threshold = thr;
                    have_qualifier = true;
                }
            }
            const bool better_fallback =
                !have_fallback || margin > fallback_margin ||
                (margin == fallback_margin &&
                 (boost_db < fallback.boost_db ||
                  (boost_db == fallback.boost_db && format < fallback.format_id)));
            if (better_fallback) {
                fallback = {format, boost_db, true};
                fallback_margin = margin;
                have_fallback = true;
            }
        }
    }
    return have_qualifier ? best : fallback;
}

DecisionMsg Bs::decision_message(const std::string& mss_id, const Selection& selection) const {
    DecisionMsg msg;
    msg.mss_id = mss_id;
    msg.format_id = selection.format_id;
    msg.boost_db = selection.boost_db;
    if (selection.below_threshold) {
        msg.flags.push_back("below_threshold");
    }
    const Prediction pred = predict(mss_id, selection.boost_db, selection.format_id);
    if (!pred.in_range) {
        msg.flags.push_back("out_of_range");
    }
    return msg;
}

} // namespace l2s
