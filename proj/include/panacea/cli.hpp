#pragma once

// Command-line entry point: train, sweep, misalign, compare, data, serve.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <string>
#include <string_view>
#include <vector>

namespace panacea {

inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_usage = 2;

/// `args[0]` is the program name.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace panacea
