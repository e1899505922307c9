#pragma once

namespace lmmsel {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lmmsel
