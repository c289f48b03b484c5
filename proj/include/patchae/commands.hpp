#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "patchae/config.hpp"

namespace patchae {

// Overrides shared by the command-line entry points.
struct CommandOptions {
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    std::optional<double> coreset_fraction;
    bool reweight = false;
    std::string heatmaps_dir;  // empty = no heatmaps
    std::string checkpoint;    // empty = <output_dir>/checkpoint.pae
    std::string bank;          // empty = <output_dir>/bank.paeb
    std::string out_dir;       // gen-toy-data target; empty = parent of data.class_dir
};

// Each command throws patchae::Error on failure; exit_code() maps it.
RunConfig resolve_config(const std::filesystem::path& config_path, const CommandOptions& opts);

void cmd_train(const std::filesystem::path& config_path, const CommandOptions& opts, std::ostream& log);
void cmd_build_bank(const std::filesystem::path& config_path, const CommandOptions& opts, std::ostream& log);
void cmd_evaluate(const std::filesystem::path& config_path, const CommandOptions& opts, std::ostream& log);
void cmd_gen_toy_data(const std::filesystem::path& config_path, const CommandOptions& opts, std::ostream& log);

}  // namespace patchae
