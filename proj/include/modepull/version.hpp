#pragma once

namespace modepull {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace modepull
