#pragma once

namespace scop {

inline constexpr const char* kVersion = "0.1.0";

} // namespace scop
