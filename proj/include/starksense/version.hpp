#pragma once

namespace starksense {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace starksense
