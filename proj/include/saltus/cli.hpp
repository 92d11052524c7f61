#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "saltus/funcrep.hpp"

namespace saltus::cli {

/// Exit codes of the command-line front end.
enum ExitCode : int { kOk = 0, kNonexistent = 2, kInvalid = 3, kBudget = 4 };

/// 64-bit FNV-1a digest of a byte string.
std::uint64_t fnv1a64(const std::string& bytes);

/// Reads and parses a function document. Io errors for unreadable files,
/// Schema errors for malformed JSON, then whatever make_func raises.
RepFunc parse_func_file(const std::string& path);

/// Runs one subcommand. The JSON report goes to `out`, messages to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace saltus::cli
