#pragma once

namespace fairpca {

inline constexpr const char kVersion[] = "0.1.0";

}  // namespace fairpca
