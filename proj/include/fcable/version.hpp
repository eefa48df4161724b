#pragma once

namespace fcable {

inline constexpr const char* kToolName = "fcable";
inline constexpr const char* kToolVersion = "0.1.0";

/// Identity string for the counter-based generator, echoed in CSV metadata.
inline constexpr const char* kRngIdentity = "splitmix64-counter/stafford-mix13";

}  // namespace fcable
