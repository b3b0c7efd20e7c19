#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tquate::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Flat "key = value" config file. Blank lines and '#' comments are skipped.
/// Keys are returned with '_' replaced by '-'.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

}  // namespace tquate::cli
