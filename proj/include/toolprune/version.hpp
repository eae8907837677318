#pragma once

namespace toolprune {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace toolprune
