#pragma once

// Command implementations behind the CLI. Each returns the JSON summary that
// the CLI prints; files go to `out_dir`.

#include <filesystem>

#include "bdsim/io.hpp"

namespace bdsim {

/// traj_NNNNNN.jsonl per trajectory plus manifest.json.
nlohmann::json run_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, unsigned jobs);

/// lower_/upper_/audit_NNNNNN.jsonl plus manifest.json. With check_premise a
/// failed premise search writes nothing and returns {"refused": true, ...}.
/// The summary carries "inclusion_violations".
nlohmann::json run_couple(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, unsigned jobs,
                          bool check_premise);

/// dist, d_Eucl and the optimal assignment between two point-list files.
nlohmann::json run_metric(const std::filesystem::path& a, const std::filesystem::path& b);

}  // namespace bdsim
