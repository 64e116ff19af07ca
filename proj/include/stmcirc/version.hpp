#pragma once

namespace stmcirc {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace stmcirc
