#pragma once

namespace cpfind {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cpfind
