#pragma once

// Subcommand bodies of the command-line tool. Each takes a fully validated
// configuration and writes its artifact set into the configured output
// directory: resolved.cfg first, then the artifacts, then manifest.csv with
// per-file byte counts and CRC-32 checksums. All writes are atomic
// (temporary file + rename). Identical configurations and seeds produce
// byte-identical artifacts.

#include <string>
#include <vector>

#include "bilat/config.hpp"

namespace bilat::commands {

// Subcommand names in help order.
const std::vector<std::string>& subcommands();

// One-line help text; throws ValidationError on an unknown name.
std::string description(const std::string& subcommand);

// Runs one subcommand. Throws ConfigError for configuration-level problems
// and other bilat::Error subclasses for domain failures.
void run(const std::string& subcommand, const config::RunConfig& cfg);

} // namespace bilat::commands
