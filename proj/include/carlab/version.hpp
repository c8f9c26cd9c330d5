#pragma once

namespace carlab {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace carlab
