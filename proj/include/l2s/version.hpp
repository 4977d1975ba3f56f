// SPDX-License-Identifier: Apache-2.0
#ifndef L2S_VERSION_HPP
#define L2S_VERSION_HPP

namespace l2s {

inline constexpr const char* kVersion = "0.1.0";

} // namespace l2s

#endif
