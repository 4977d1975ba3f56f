// SPDX-License-Identifier: Apache-2.0
#include "l2s/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace l2s {

const char* to_string(ExclusionReason reason) {
    switch (reason) {
    case ExclusionReason::bler_above_curve_range: return "bler_above_curve_range";
    case ExclusionReason::bler_below_curve_range: return "bler_below_curve_range";
    case ExclusionReason::outside_bler_window: return "outside_bler_window";
    }
    return "unknown";
}

InversionResult awgn_equivalent_snr(double bler, const ReferenceCurve& curve) {
    if (bler > curve.max_bler()) {
        return {std::nullopt, ExclusionReason::bler_above_curve_range};
    }
    if (bler < curve.min_bler()) {
        return {std::nullopt, ExclusionReason::bler_below_curve_range};
    }
    return {curve.snr_at(bler), ExclusionReason::outside_bler_window};
}

CalibrationSet::CalibrationSet(int mcs_id, ReferenceCurve curve)
    : mcs_id_(mcs_id), curve_(std::move(curve)) {}

void CalibrationSet::add(SinrVector gamma, double bler) {
    if (!(bler > 0.0) || !(bler < 1.0)) {
        throw std::domain_error("CalibrationSet: measured bler must lie in (0, 1)");
    }
    gammas_.push_back(std::move(gamma));
    blers_.push_back(bler);
}

CalibrationSet::Prepared CalibrationSet::prepare(const BlerWindow& window) const {
    Prepared out;
    for (std::size_t i = 0; i < gammas_.size(); ++i) {
        const double bler = blers_[i];
        if (bler < window.lo || bler > window.hi) {
            out.exclusions.push_back({i, ExclusionReason::outside_bler_window, bler});
            continue;
        }
        const InversionResult inv = awgn_equivalent_snr(bler, curve_);
        if (!inv.snr_db) {
            out.exclusions.push_back({i, inv.reason, bler});
            continue;
        }
        out.samples.push_back({gammas_[i], bler, *inv.snr_db});
    }
    return out;
}

double unweighted_cost(const Beta& beta, std::span<const CalibrationSample> samples) {
    double cost = 0.0;
    for (const auto& s : samples) {
        const double r = s.awgn_equiv_snr_db - eesm_db(s.gamma, beta);
        cost += r * r;
    }
    return cost;
}

WeightVector weight_vector(std::span<const CalibrationSample> samples, double snr_start_db) {
    if (snr_start_db == 0.0) {
        throw std::domain_error("weight_vector: snr_start_db of 0 makes the weight undefined");
    }
    WeightVector w;
    w.weights.reserve(samples.size());
    for (const auto& s : samples) {
        const double rel = (s.awgn_equiv_snr_db - snr_start_db) / snr_start_db;
        w.weights.push_back(rel * rel);
    }
    return w;
}

double weighted_cost(const Beta& beta, std::span<const CalibrationSample> samples,
                     const WeightVector& weights) {
    if (weights.weights.size() != samples.size()) {
        throw std::domain_error("weighted_cost: weight count does not match sample count");
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double w = weights.weights[i];
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw std::domain_error("weighted_cost: weights must be finite and >= 0");
        }
        const double r = samples[i].awgn_equiv_snr_db - eesm_db(samples[i].gamma, beta);
        cost += w * r * r;
    }
    return cost;
}

namespace {

double checked_eval(const std::function<double(double)>& f, double x) {
    const double v = f(x);
    if (!std::isfinite(v)) {
        throw NumericError("minimize_beta: cost is not finite at beta_db = " + std::to_string(x));
    }
    return v;
}

struct BrentOut {
    double x;
    double fx;
};

// Golden-section search with parabolic interpolation on [lo, hi], absolute
// x tolerance `tol`.
BrentOut brent_minimize(const std::function<double(double)>& f, double lo, double hi, double tol) {
    constexpr double kGolden = 0.3819660112501051; // (3 - sqrt(5)) / 2
    double a = lo, b = hi;
    double x = a + kGolden * (b - a);
    double w = x, v = x;
    double fx = checked_eval(f, x);
    double fw = fx, fv = fx;
    double d = 0.0, e = 0.0;

    for (int iter = 0; iter < 300; ++iter) {
        const double m = 0.5 * (a + b);
        const double t2 = 2.0 * tol;
        if (std::abs(x - m) <= t2 - 0.5 * (b - a)) {
            break;
        }
        double step;
        bool parabolic = false;
        if (std::abs(e) > tol) {
            // Parabola through (x, fx), (w, fw), (v, fv).
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) {
                p = -p;
            }
            q = std::abs(q);
            const double e_prev = e;
            e = d;
            if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
                step = p / q;
                const double u = x + step;
                if (u - a < t2 || b - u < t2) {
                    step = (x < m) ? tol : -tol;
                }
                parabolic = true;
            } else {
                step = 0.0;
            }
        } else {
            step = 0.0;
        }
        if (!parabolic) {
            e = ((x < m) ? b : a) - x;
            step = kGolden * e;
        }
        const double u = (std::abs(step) >= tol) ? x + step : x + ((step > 0.0) ? tol : -tol);
        const double fu = checked_eval(f, u);
        if (fu <= fx) {
            if (u < x) {
                b = x;
            } else {
                a = x;
            }
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) {
                a = u;
            } else {
                b = u;
            }
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    return {x, fx};
}

} // namespace

MinimizeResult minimize_beta(const std::function<double(double)>& cost_of_beta_db, double lo_db,
                             double hi_db, double tol_db) {
    if (!(lo_db < hi_db)) {
        throw std::domain_error("minimize_beta: bracket must satisfy lo < hi");
    }
    if (!(tol_db > 0.0)) {
        throw std::domain_error("minimize_beta: tolerance must be > 0");
    }
    constexpr int kMaxExpansions = 3;

    MinimizeResult result;
    double lo = lo_db, hi = hi_db;
    for (int attempt = 0;; ++attempt) {
        const BrentOut best = brent_minimize(cost_of_beta_db, lo, hi, 0.5 * tol_db);
        result.trace.push_back({lo, hi, best.x, best.fx});
        result.beta_db = best.x;
        result.cost = best.fx;

        const double margin = 2.0 * tol_db;
        const bool at_lo = best.x <= lo + margin;
        const bool at_hi = best.x >= hi - margin;
        if (!at_lo && !at_hi) {
            result.at_bracket_edge = false;
            return result;
        }
        if (attempt == kMaxExpansions) {
            result.at_bracket_edge = true;
            return result;
        }
        const double width = hi - lo;
        if (at_lo) {
            lo -= width;
        }
        if (at_hi) {
            hi += width;
        }
        ++result.expansions;
    }
}

TrainResult train_beta(const CalibrationSet& set, const TrainOptions& options) {
    auto prepared = set.prepare(options.window);
    if (prepared.samples.size() < 2) {
        std::string msg = "train_beta: only " + std::to_string(prepared.samples.size()) +
                          " usable samples (need >= 2);";
        for (const auto& ex : prepared.exclusions) {
            msg += " sample " + std::to_string(ex.sample_index) + " " + to_string(ex.reason) + ";";
        }
        throw InsufficientDataError(msg, std::move(prepared.exclusions));
    }

    TrainResult result;
    result.weighted = options.weighted;
    result.used_samples = prepared.samples.size();
    result.exclusions = std::move(prepared.exclusions);

    std::function<double(double)> cost;
    if (options.weighted) {
        const SnrStartResult start = set.curve().snr_start();
        result.snr_start_db = start.snr_db;
        const WeightVector w = weight_vector(prepared.samples, start.snr_db);
        cost = [samples = prepared.samples, w](double beta_db) {
            return weighted_cost(Beta::from_db(beta_db), samples, w);
        };
    } else {
        cost = [samples = prepared.samples](double beta_db) {
            return unweighted_cost(Beta::from_db(beta_db), samples);
        };
    }

    // Flat-channel sets make every beta an exact fit; flag instead of
    // pretending the minimizer's pick means anything.
    const double f_lo = cost(options.bracket_lo_db);
    const double f_mid = cost(0.5 * (options.bracket_lo_db + options.bracket_hi_db));
    const double f_hi = cost(options.bracket_hi_db);
    const double f_max = std::max({f_lo, f_mid, f_hi});
    const double f_min = std::min({f_lo, f_mid, f_hi});
    result.degenerate_fit = (f_max - f_min) <= 1e-10 * std::max(1.0, f_max);

    result.minimize = minimize_beta(cost, options.bracket_lo_db, options.bracket_hi_db);
    result.beta_db = result.minimize.beta_db;
    result.cost = result.minimize.cost;
    return result;
}

void BetaTable::set(int format_id, double beta_db) {
    if (!std::isfinite(beta_db)) {
        throw std::domain_error("BetaTable: beta_db must be finite");
    }
    entries_[format_id] = beta_db;
}

double BetaTable::lookup(int format_id) const {
    auto it = entries_.find(format_id);
    if (it == entries_.end()) {
        throw std::out_of_range("BetaTable: no entry for format " + std::to_string(format_id));
    }
    return it->second;
}

BetaTable load_beta_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open beta table: " + path.string());
    }
    const std::string fname = path.string();
    std::string line;
    int lineno = 0;
    if (!std::getline(in, line)) {
        throw ParseError(fname, 1, "empty file");
    }
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != "format,beta_db") {
        throw ParseError(fname, lineno, "expected header 'format,beta_db'");
    }
    BetaTable table(path.stem().string());
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        int format = 0;
        double beta_db = 0.0;
        char extra = 0;
        if (std::sscanf(line.c_str(), "%d,%lf%c", &format, &beta_db, &extra) != 2) {
            throw ParseError(fname, lineno, "malformed row: '" + line + "'");
        }
        if (table.contains(format)) {
            throw ParseError(fname, lineno, "duplicate format id " + std::to_string(format));
        }
        if (!std::isfinite(beta_db)) {
            throw ParseError(fname, lineno, "beta_db must be finite");
        }
        table.set(format, beta_db);
    }
    if (table.size() == 0) {
        throw ParseError(fname, lineno, "no table rows");
    }
    return table;
}

void save_beta_table(const BetaTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path.string());
    }
    out << "format,beta_db\n";
    char buf[64];
    for (const auto& [format, beta_db] : table.entries()) {
        std::snprintf(buf, sizeof buf, "%d,%.12g\n", format, beta_db);
        out << buf;
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

} // namespace l2s
