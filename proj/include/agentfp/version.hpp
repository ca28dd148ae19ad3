#pragma once

namespace agentfp {

inline constexpr const char* kVersion = "0.1.0";
// Bumped whenever a report's JSON layout changes.
inline constexpr int kReportSchemaVersion = 1;

}  // namespace agentfp
