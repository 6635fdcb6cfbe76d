#pragma once

namespace hypertax {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hypertax
