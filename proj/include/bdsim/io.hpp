#pragma once

// Experiment configuration files, trajectory streams and run manifests.
// Everything written here is a deterministic function of the configuration,
// so reruns are byte-identical.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdsim/coupling.hpp"
#include "bdsim/simulator.hpp"

namespace bdsim {

inline constexpr const char* kConfigSchema = "bdsim-config/1";
inline constexpr const char* kManifestSchema = "bdsim-manifest/1";
inline constexpr const char* kTrajectorySchema = "bdsim-trajectory/1";

struct InitialSpec {
  enum class Kind { Points, Poisson };
  Kind kind = Kind::Points;
  std::vector<Point> points;
  double intensity = 0.0;  // Poisson: expected points per unit volume
  Box box;

  friend bool operator==(const InitialSpec&, const InitialSpec&) = default;
};

struct ExperimentConfig {
  std::size_t dimension = 1;
  nlohmann::json model;  // normalized descriptor; null when only `models` is given
  nlohmann::json lower_model;
  nlohmann::json upper_model;
  InitialSpec initial;
  std::optional<InitialSpec> initial_lower;
  double horizon = 1.0;
  Caps caps;
  std::size_t n_traj = 1;
  std::uint64_t master_seed = 0;
  nlohmann::json options = nlohmann::json::object();

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);
};

/// Validates and normalizes. Error messages start with the offending field path.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Accepts a config document or a run manifest (its embedded config is used).
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

nlohmann::json to_json(const ExperimentConfig& cfg);
std::string canonical_text(const ExperimentConfig& cfg);
/// FNV-1a 64 of canonical_text, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

/// Builds a rate model from a normalized or raw descriptor. `where` prefixes errors.
RateModel build_model(const nlohmann::json& descriptor, std::size_t dimension, const std::string& where = "model");
nlohmann::json normalize_model(const nlohmann::json& descriptor, std::size_t dimension, const std::string& where);

/// The initial state of trajectory `traj`: the explicit points, or a Poisson
/// sample drawn from the Initial channel of that trajectory.
Configuration initial_state(const InitialSpec& spec, std::size_t dimension, std::uint64_t master_seed,
                            std::uint64_t traj);

/// Root key of trajectory `traj`.
RngStreamKey trajectory_key(std::uint64_t master_seed, std::uint64_t traj);

nlohmann::json particles_json(const Configuration& eta);
nlohmann::json status_json(const TrajectoryStatus& status);

/// Header, one line per event, then a status line.
void write_trajectory_jsonl(std::ostream& os, const Trajectory& traj, std::uint64_t index);
/// One line per joint-chain event.
void write_audit_jsonl(std::ostream& os, const CoupledPair& pair);

/// Point lists for the metric command: a JSON array of points, a JSON object
/// with a "points" array, or whitespace-separated numbers one point per line.
std::vector<Point> read_point_list(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Fixed-format JSON dump used for every file we write (two-space indent, newline-terminated).
std::string dump_document(const nlohmann::json& j);

}  // namespace bdsim
