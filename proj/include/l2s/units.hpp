// SPDX-License-Identifier: Apache-2.0
#ifndef L2S_UNITS_HPP
#define L2S_UNITS_HPP

#include <cmath>
#include <stdexcept>

namespace l2s {

/// 10^(x_db / 10)
inline double db_to_linear(double x_db) {
    return std::pow(10.0, x_db / 10.0);
}

/// 10 * log10(x); x must be a strictly positive power ratio.
inline double linear_to_db(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("linear_to_db: value must be positive and finite");
    }
    return 10.0 * std::log10(x);
}

} // namespace l2s

#endif
