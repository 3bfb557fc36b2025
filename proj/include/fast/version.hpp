#pragma once

namespace fast {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fast
