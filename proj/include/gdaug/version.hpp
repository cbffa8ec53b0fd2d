#pragma once

namespace gdaug {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gdaug
