#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace pfd::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Runs one subcommand. `args` excludes the program name.
/// Returns 0 on success, 1 on usage errors and 2 on computation errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// 64-bit FNV-1a digest, used for the run manifest.
[[nodiscard]] std::uint64_t fnv1a64(std::string_view data);

/// Parses "START:STOP:N" (inclusive linear grid) or a comma list.
[[nodiscard]] std::vector<double> parse_grid(const std::string& text);

}  // namespace pfd::cli
