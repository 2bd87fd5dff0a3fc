#pragma once

namespace fluxgate {
inline constexpr const char* kVersion = "1.0.0";
}
