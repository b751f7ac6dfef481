#pragma once

#include <string_view>

namespace flowroute {

inline constexpr std::string_view kEngineName = "flowroute";
inline constexpr std::string_view kEngineVersion = "0.1.0";

}  // namespace flowroute
