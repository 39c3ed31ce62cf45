#pragma once

namespace ibcal {

inline constexpr const char* kToolName = "ibcal";
inline constexpr const char* kVersion = "0.1.0";

}  // namespace ibcal
