#pragma once

#include <iosfwd>

namespace kknock {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitInternal = 1;

/// Parses argv, runs one verb and returns the process exit status:
/// 0 success, 2 configuration error, 3 data error.
int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int parse_and_dispatch(int argc, const char* const* argv);

}  // namespace kknock
