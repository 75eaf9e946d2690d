#pragma once

namespace duality {

inline constexpr const char* kToolName = "dualsim";
inline constexpr const char* kToolVersion = "1.0.0";

} // namespace duality
