// SPDX-License-Identifier: Apache-2.0
#include "l2s/reference_curve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace l2s {

ParseError::ParseError(const std::string& file, int line, const std::string& what)
    : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

ReferenceCurve::ReferenceCurve(int mcs_id, std::vector<CurvePoint> points)
    : mcs_id_(mcs_id), points_(std::move(points)) {
    if (points_.size() < 3) {
        throw std::domain_error("ReferenceCurve: need at least 3 points");
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto& p = points_[i];
        if (!std::isfinite(p.snr_db) || !(p.bler > 0.0) || !(p.bler <= 1.0)) {
            throw std::domain_error("ReferenceCurve: bler must lie in (0, 1]");
        }
        if (i > 0 && !(p.snr_db > points_[i - 1].snr_db)) {
            throw std::domain_error("ReferenceCurve: snr_db must be strictly increasing");
        }
    }
    // Running-minimum repair: measured waterfalls occasionally tick upward from
    // simulation noise, which would break inversion.
    double running = points_[0].bler;
    for (auto& p : points_) {
        if (p.bler > running) {
            p.bler = running;
            repaired_ = true;
        } else {
            running = p.bler;
        }
    }
    log_bler_.resize(points_.size());
    std::transform(points_.begin(), points_.end(), log_bler_.begin(),
                   [](const CurvePoint& p) { return std::log10(p.bler); });
}

double ReferenceCurve::bler_at(double snr_db) const {
    if (snr_db <= points_.front().snr_db) {
        return points_.front().bler;
    }
    if (snr_db >= points_.back().snr_db) {
        return points_.back().bler;
    }
    // first knot strictly right of snr_db
    auto it = std::upper_bound(points_.begin(), points_.end(), snr_db,
                               [](double s, const CurvePoint& p) { return s < p.snr_db; });
    const std::size_t j = static_cast<std::size_t>(it - points_.begin());
    const std::size_t i = j - 1;
    const double t = (snr_db - points_[i].snr_db) / (points_[j].snr_db - points_[i].snr_db);
    return std::pow(10.0, log_bler_[i] + t * (log_bler_[j] - log_bler_[i]));
}

double ReferenceCurve::snr_at(double bler) const {
    if (!(bler > 0.0) || !(bler <= 1.0) || !std::isfinite(bler)) {
        throw CurveRangeError("snr_at: bler outside (0, 1]", points_.front().snr_db,
                              points_.front().bler);
    }
    const double lt = std::log10(bler);
    if (lt > log_bler_.front()) {
        throw CurveRangeError("snr_at: bler above curve maximum", points_.front().snr_db,
                              points_.front().bler);
    }
    if (lt < log_bler_.back()) {
        throw CurveRangeError("snr_at: bler below curve minimum", points_.back().snr_db,
                              points_.back().bler);
    }
    // log_bler_ is non-increasing; find the first knot at or below the target.
    auto it = std::lower_bound(log_bler_.begin(), log_bler_.end(), lt,
                               [](double lb, double target) { return lb > target; });
    const std::size_t j = static_cast<std::size_t>(it - log_bler_.begin());
    if (log_bler_[j] == lt) {
        return points_[j].snr_db;
    }
    const std::size_t i = j - 1; // j >= 1 here: log_bler_[0] >= lt and log_bler_[0] != lt
    const double t = (lt - log_bler_[i]) / (log_bler_[j] - log_bler_[i]);
    return points_[i].snr_db + t * (points_[j].snr_db - points_[i].snr_db);
}

SnrStartResult ReferenceCurve::snr_start() const {
    constexpr double kStartBler = 0.99;
    if (max_bler() < kStartBler) {
        return {points_.front().snr_db, true};
    }
    if (min_bler() > kStartBler) {
        // Degenerate: the curve never drops through 0.99 at all.
        return {points_.back().snr_db, true};
    }
    return {snr_at(kStartBler), false};
}

void CurveSet::add(ReferenceCurve curve) {
    const int id = curve.mcs_id();
    if (!curves_.emplace(id, std::move(curve)).second) {
        throw std::domain_error("CurveSet: duplicate mcs_id " + std::to_string(id));
    }
}

const ReferenceCurve& CurveSet::get(int mcs_id) const {
    auto it = curves_.find(mcs_id);
    if (it == curves_.end()) {
        throw std::out_of_range("CurveSet: no curve for mcs_id " + std::to_string(mcs_id));
    }
    return it->second;
}

namespace {

std::string trim_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') {
        s.pop_back();
    }
    return s;
}

} // namespace

CurveSet load_curves(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open curve file: " + path.string());
    }
    const std::string fname = path.string();
    std::string line;
    int lineno = 0;

    if (!std::getline(in, line)) {
        throw ParseError(fname, 1, "empty file");
    }
    ++lineno;
    if (trim_cr(line) != "mcs_id,snr_db,bler") {
        throw ParseError(fname, lineno, "expected header 'mcs_id,snr_db,bler'");
    }

    CurveSet set;
    std::vector<CurvePoint> points;
    std::vector<int> seen_ids;
    int current_id = 0;
    bool has_current = false;

    auto flush = [&](int at_line) {
        if (!has_current) {
            return;
        }
        try {
            set.add(ReferenceCurve(current_id, std::move(points)));
        } catch (const std::domain_error& e) {
            throw ParseError(fname, at_line, std::string("mcs_id ") + std::to_string(current_id) +
                                                 ": " + e.what());
        }
        points.clear();
    };

    while (std::getline(in, line)) {
        ++lineno;
        line = trim_cr(line);
        if (line.empty()) {
            continue;
        }
        int id = 0;
        double snr = 0.0, bler = 0.0;
        char extra = 0;
        if (std::sscanf(line.c_str(), "%d,%lf,%lf%c", &id, &snr, &bler, &extra) != 3) {
            throw ParseError(fname, lineno, "malformed row: '" + line + "'");
        }
        if (!(bler > 0.0) || !(bler <= 1.0)) {
            throw ParseError(fname, lineno, "bler must lie in (0, 1]");
        }
        if (!has_current || id != current_id) {
            if (std::find(seen_ids.begin(), seen_ids.end(), id) != seen_ids.end()) {
                throw ParseError(fname, lineno,
                                 "rows for mcs_id " + std::to_string(id) + " are not contiguous");
            }
            flush(lineno);
            current_id = id;
            has_current = true;
            seen_ids.push_back(id);
        }
        if (!points.empty() && !(snr > points.back().snr_db)) {
            throw ParseError(fname, lineno, "snr_db not strictly increasing (duplicate or reorder)");
        }
        points.push_back({snr, bler});
    }
    flush(lineno);
    if (set.size() == 0) {
        throw ParseError(fname, lineno, "no curve rows");
    }
    return set;
}

void save_curves(const CurveSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary); // binary: LF endings everywhere
    if (!out) {
        throw std::runtime_error("cannot open for write: " + path.string());
    }
    out << "mcs_id,snr_db,bler\n";
    char buf[64];
    for (const auto& [id, curve] : set.curves()) {
        for (const auto& p : curve.points()) {
            std::snprintf(buf, sizeof buf, "%d,%.12g,%.12g\n", id, p.snr_db, p.bler);
            out << buf;
        }
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

ReferenceCurve synthetic_curve(int mcs_id, double midpoint_db, double slope_db) {
    if (!(slope_db > 0.0) || !std::isfinite(slope_db)) {
        throw std::domain_error("synthetic_curve: slope_db must be > 0");
    }
    std::vector<CurvePoint> points;
    for (int k = 0; k <= 96; ++k) {
        const double s = midpoint_db - 12.0 + 0.25 * k;
        double bler = 1.0 / (1.0 + std::exp((s - midpoint_db) / slope_db));
        bler = std::clamp(bler, 1e-6, 1.0 - 1e-6);
        points.push_back({s, bler});
    }
    return ReferenceCurve(mcs_id, std::move(points));
}

} // namespace l2s
