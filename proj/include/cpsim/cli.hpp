#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cpsim::cli {

inline constexpr const char* kToolVersion = "0.1.0";

// flat key=value configuration text; '#' starts a comment
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::string& path);

// defaults table (key -> default value as text, with derived entries noted)
const std::vector<std::pair<std::string, std::string>>& default_table();

// Effective configuration: defaults filled, overrides applied, every key
// recognized, cross-field rules checked. Throws std::invalid_argument
// naming the offending key or rule.
std::map<std::string, std::string> resolve_config(
    const std::map<std::string, std::string>& kv);

// FNV-1a 64 content digest, hex
std::string digest_hex(const std::string& bytes);
std::string digest_file(const std::string& path);

struct ExecResult {
    int status = 0;
    std::string run_dir;
    std::vector<std::string> files;
};

// Runs one command, writing its CSV/JSON artifacts plus manifest.json into
// a fresh per-run directory under out_root.
ExecResult execute(const std::string& command,
                   const std::map<std::string, std::string>& config,
                   const std::string& out_root, bool window_doubling = false);

// command names, for the CLI front end
const std::vector<std::string>& command_names();

}  // namespace cpsim::cli
