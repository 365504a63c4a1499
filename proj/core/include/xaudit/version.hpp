#pragma once

namespace xaudit {

inline constexpr const char* kVersion = "0.1.0";

} // namespace xaudit
