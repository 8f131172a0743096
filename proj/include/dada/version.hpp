#pragma once

namespace dada {
inline constexpr const char* kVersion = "0.1.0";
}
