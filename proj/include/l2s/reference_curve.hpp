// SPDX-License-Identifier: Apache-2.0
#ifndef L2S_REFERENCE_CURVE_HPP
#define L2S_REFERENCE_CURVE_HPP

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace l2s {

/// Thrown when a requested BLER lies outside a curve's representable range.
/// Carries the nearest tabulated endpoint so callers can report how far off
/// the request was.
class CurveRangeError : public std::range_error {
public:
    CurveRangeError(const std::string& what, double nearest_snr_db, double nearest_bler)
        : std::range_error(what), nearest_snr_db_(nearest_snr_db), nearest_bler_(nearest_bler) {}

    double nearest_snr_db() const { return nearest_snr_db_; }
    double nearest_bler() const { return nearest_bler_; }

private:
    double nearest_snr_db_;
    double nearest_bler_;
};

/// Parse failure in a curve or table file; line is 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, int line, const std::string& what);
    int line() const { return line_; }

private:
    int line_;
};

struct CurvePoint {
    double snr_db;
    double bler;
};

struct SnrStartResult {
    double snr_db;
    bool never_reaches_bler_99; // curve's max BLER < 0.99; snr_db is then the first knot
};

// AWGN BLER-vs-SNR reference for one MCS format. Interpolation runs in
// (snr dB, log10 bler) coordinates, where coded waterfalls are close to
// straight lines. Input points must be strictly increasing in SNR; small
// non-monotonicities in BLER (simulation noise) are repaired by a running
// minimum from the left and flagged.
class ReferenceCurve {
public:
    ReferenceCurve(int mcs_id, std::vector<CurvePoint> points);

    int mcs_id() const { return mcs_id_; }
    const std::vector<CurvePoint>& points() const { return points_; }
    bool monotone_repaired() const { return repaired_; }

    double min_bler() const { return points_.back().bler; }
    double max_bler() const { return points_.front().bler; }

    /// BLER at an SNR; clamps to the end values outside the tabulated range.
    double bler_at(double snr_db) const;

    /// SNR whose interpolated BLER equals `bler`. Defined on the strictly
    /// decreasing part of the curve; throws CurveRangeError outside
    /// [min_bler, max_bler].
    double snr_at(double bler) const;

    /// SNR where the interpolated BLER first drops through 0.99.
    SnrStartResult snr_start() const;

private:
    int mcs_id_;
    std::vector<CurvePoint> points_;
    std::vector<double> log_bler_; // log10 of points_[i].bler
    bool repaired_ = false;
};

class CurveSet {
public:
    void add(ReferenceCurve curve);
    bool contains(int mcs_id) const { return curves_.count(mcs_id) != 0; }
    const ReferenceCurve& get(int mcs_id) const;
    const std::map<int, ReferenceCurve>& curves() const { return curves_; }
    std::size_t size() const { return curves_.size(); }

private:
    std::map<int, ReferenceCurve> curves_;
};

// CSV schema: header "mcs_id,snr_db,bler", one row per point, rows of one
// mcs_id contiguous and sorted by snr_db, LF line endings.
CurveSet load_curves(const std::filesystem::path& path);
void save_curves(const CurveSet& set, const std::filesystem::path& path);

/// Logistic test family: bler(s) = 1 / (1 + exp((s - midpoint)/slope)),
/// sampled every 0.25 dB over midpoint +/- 12 dB, clipped to [1e-6, 1 - 1e-6].
ReferenceCurve synthetic_curve(int mcs_id, double midpoint_db, double slope_db);

} // namespace l2s

#endif
