#pragma once

namespace wnct {

inline constexpr const char* kVersion = "0.1.0";

} // namespace wnct
