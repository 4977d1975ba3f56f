// SPDX-License-Identifier: Apache-2.0
#include "l2s/eesm.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace l2s {

SinrVector::SinrVector(std::vector<double> linear_values) : values_(std::move(linear_values)) {
    if (values_.empty()) {
        throw std::domain_error("SinrVector: empty vector");
    }
    for (double v : values_) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::domain_error("SinrVector: entries must be finite and > 0");
        }
    }
}

SinrVector SinrVector::from_db(const std::vector<double>& db_values) {
    std::vector<double> lin(db_values.size());
    std::transform(db_values.begin(), db_values.end(), lin.begin(), db_to_linear);
    return SinrVector(std::move(lin));
}

double SinrVector::min_linear() const {
    return *std::min_element(values_.begin(), values_.end());
}

double SinrVector::mean_linear() const {
    return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

SinrVector SinrVector::scaled(double factor) const {
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw std::domain_error("SinrVector::scaled: factor must be finite and > 0");
    }
    std::vector<double> out(values_.size());
    std::transform(values_.begin(), values_.end(), out.begin(),
                   [factor](double v) { return v * factor; });
    return SinrVector(std::move(out));
}

Beta Beta::from_db(double beta_db) {
    if (!std::isfinite(beta_db)) {
        throw std::domain_error("Beta: dB value must be finite");
    }
    return Beta(beta_db);
}

Beta Beta::from_linear(double beta_linear) {
    return Beta(linear_to_db(beta_linear));
}

EffectiveSinr::EffectiveSinr(double linear_value) : linear_(linear_value) {
    if (!(linear_ > 0.0) || !std::isfinite(linear_)) {
        throw std::domain_error("EffectiveSinr: value must be finite and > 0");
    }
}

BoostRatio BoostRatio::from_db(double boost_db) {
    return BoostRatio(db_to_linear(boost_db));
}

BoostRatio BoostRatio::from_linear(double boost_linear) {
    if (!(boost_linear > 0.0) || !std::isfinite(boost_linear)) {
        throw std::domain_error("BoostRatio: value must be finite and > 0");
    }
    return BoostRatio(boost_linear);
}

EffectiveSinr eesm_effective_sinr(const SinrVector& gamma, const Beta& beta) {
    const double beta_lin = beta.linear();
    const double gamma_min = gamma.min_linear();

    // Shifted form: gamma_eff = min + beta * (ln N - ln sum_i exp(-(g_i - min)/beta)).
    // Every exponent is <= 0, so the sum lies in [1, N] and nothing overflows;
    // a flat vector gives sum == N exactly and collapses to the identity.
    // Summation runs over the values sorted descending, so the result is
    // bit-identical under permutation of the input and small terms accumulate
    // first.
    std::vector<double> sorted = gamma.values();
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double sum = 0.0;
    for (double g : sorted) {
        sum += std::exp(-(g - gamma_min) / beta_lin);
    }
    const double n = static_cast<double>(gamma.size());
    return EffectiveSinr(gamma_min + beta_lin * (std::log(n) - std::log(sum)));
}

double eesm_db(const SinrVector& gamma, const Beta& beta) {
    return eesm_effective_sinr(gamma, beta).db();
}

EffectiveSinr eesm_boosted(const SinrVector& gamma, const BoostRatio& boost, const Beta& beta) {
    return eesm_effective_sinr(gamma.scaled(boost.linear()), beta);
}

std::vector<BetaCurvePoint> eesm_beta_curve(const SinrVector& gamma,
                                            std::span<const double> beta_grid_db) {
    if (beta_grid_db.empty()) {
        throw std::domain_error("eesm_beta_curve: empty beta grid");
    }
    for (std::size_t i = 1; i < beta_grid_db.size(); ++i) {
        if (!(beta_grid_db[i] > beta_grid_db[i - 1])) {
            throw std::domain_error("eesm_beta_curve: beta grid must be strictly increasing");
        }
    }
    std::vector<BetaCurvePoint> curve;
    curve.reserve(beta_grid_db.size());
    for (double b : beta_grid_db) {
        curve.push_back({b, eesm_db(gamma, Beta::from_db(b))});
    }
    return curve;
}

} // namespace l2s
