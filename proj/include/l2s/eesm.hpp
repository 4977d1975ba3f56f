// SPDX-License-Identifier: Apache-2.0
#ifndef L2S_EESM_HPP
#define L2S_EESM_HPP

#include <span>
#include <vector>

#include "l2s/units.hpp"

namespace l2s {

// Per-data-subcarrier SINR vector. Values are linear power ratios, never dB;
// conversion happens at the edges so the core math has one canonical unit.
class SinrVector {
public:
    /// Takes ownership of `linear_values`; every entry must be finite and > 0,
    /// and the vector non-empty.
    explicit SinrVector(std::vector<double> linear_values);

    static SinrVector from_db(const std::vector<double>& db_values);

    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    double min_linear() const;
    double mean_linear() const;

    /// Elementwise scaling, e.g. a power boost applied to every tone.
    SinrVector scaled(double factor) const;

private:
    std::vector<double> values_;
};

// EESM tuning parameter. Stored in dB to match how the per-format tables are
// published; the exponential map consumes the linear value.
class Beta {
public:
    static Beta from_db(double beta_db);
    static Beta from_linear(double beta_linear);

    double db() const { return db_; }
    double linear() const { return db_to_linear(db_); }

private:
    explicit Beta(double db_value) : db_(db_value) {}
    double db_;
};

/// AWGN-equivalent scalar SINR produced by the exponential map.
class EffectiveSinr {
public:
    explicit EffectiveSinr(double linear_value);
    double linear() const { return linear_; }
    double db() const { return linear_to_db(linear_); }

private:
    double linear_;
};

/// Linear power multiplier applied to an allocation.
class BoostRatio {
public:
    static BoostRatio from_db(double boost_db);
    static BoostRatio from_linear(double boost_linear);
    double linear() const { return linear_; }
    double db() const { return linear_to_db(linear_); }

private:
    explicit BoostRatio(double linear_value) : linear_(linear_value) {}
    double linear_;
};

// Exponential effective SINR map:
//
//   gamma_eff = -beta * ln( (1/N) * sum_i exp(-gamma_i / beta) )
//
// evaluated with a max-shifted log-sum-exp so no intermediate over/underflows
// for gamma_i/beta ratios up to 1e6. The result always satisfies
// min(gamma) <= gamma_eff <= mean(gamma), with equality on flat vectors.
EffectiveSinr eesm_effective_sinr(const SinrVector& gamma, const Beta& beta);

/// eesm_effective_sinr in dB.
double eesm_db(const SinrVector& gamma, const Beta& beta);

/// Effective SINR after a power boost: EESM(boost * gamma, beta). Identical to
/// boost * EESM(gamma, beta / boost) -- the scaling identity the BS-side
/// prediction relies on.
EffectiveSinr eesm_boosted(const SinrVector& gamma, const BoostRatio& boost, const Beta& beta);

struct BetaCurvePoint {
    double beta_db;
    double eesm_db;
};

/// Samples EESM(gamma, beta) in dB over a strictly increasing beta grid (dB).
/// The sampled curve is nondecreasing in beta.
std::vector<BetaCurvePoint> eesm_beta_curve(const SinrVector& gamma,
                                            std::span<const double> beta_grid_db);

} // namespace l2s

#endif
