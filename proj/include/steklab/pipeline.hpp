#ifndef STEKLAB_PIPELINE_HPP
#define STEKLAB_PIPELINE_HPP

#include "steklab/config.hpp"

#include <filesystem>

namespace steklab {

// Runs the configured steps in dependency order, writes every artifact plus
// a manifest, and evaluates the config's assert block. Returns the process
// exit status (0 on success / all asserts green).
int run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

} // namespace steklab

#endif
