#pragma once

namespace driftlab {
inline constexpr const char* kVersion = "0.1.0";
}
