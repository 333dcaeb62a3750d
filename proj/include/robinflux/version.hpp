#pragma once

namespace robinflux {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace robinflux
