#pragma once

// Batch driver behind the `addcomp` tool. Every subcommand reads a JSON
// config (optional) plus flag overrides and writes its reports into the
// output directory, together with <subcommand>.manifest.json.

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "addcomp/error.hpp"

namespace addcomp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitUsage = 2;

// Distinct nonzero status per error kind, starting at 3.
int exit_code(ErrorKind kind);

// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

const std::vector<std::string>& subcommands();

// `args` excludes the program name. Errors are reported on `err` as one JSON
// line {"error": kind, "exit": status, "message": text}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace addcomp::cli
