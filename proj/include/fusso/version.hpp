#pragma once

namespace fusso {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fusso
