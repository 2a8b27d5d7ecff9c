#include "bdsim/runner.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bdsim/error.hpp"
#include "bdsim/parallel.hpp"

namespace bdsim {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kBatch = 64;

std::string numbered(const char* prefix, std::uint64_t i) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%06llu.jsonl", prefix, static_cast<unsigned long long>(i));
  return buf;
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::Io, "cannot create output directory " + dir.string());
}

struct StatusCounts {
  std::size_t completed = 0, absorbed = 0, cap_hit = 0;

  void add(const TrajectoryStatus& s) {
    if (s.kind == Termination::Completed) ++completed;
    else if (s.kind == Termination::Absorbed) ++absorbed;
    else ++cap_hit;
  }
  json to_json() const { return {{"completed", completed}, {"absorbed", absorbed}, {"cap_hit", cap_hit}}; }
};

json manifest_base(const char* command, const ExperimentConfig& cfg) {
  return {{"schema", kManifestSchema},
          {"command", command},
          {"config", to_json(cfg)},
          {"config_hash", config_hash(cfg)},
          {"master_seed", cfg.master_seed},
          {"n_traj", cfg.n_traj}};
}

std::string trajectory_text(const Trajectory& t, std::uint64_t i) {
  std::ostringstream os;
  write_trajectory_jsonl(os, t, i);
  return os.str();
}

const json& option(const ExperimentConfig& cfg, const char* key, const json& fallback) {
  return cfg.options.contains(key) ? cfg.options.at(key) : fallback;
}

}  // namespace

json run_simulate(const ExperimentConfig& cfg, const fs::path& out_dir, unsigned jobs) {
  if (cfg.model.is_null()) throw Error(ErrorCode::InvalidArgument, "model: missing (simulate needs a single model)");
  const auto model = build_model(cfg.model, cfg.dimension);
  prepare_dir(out_dir);
  StatusCounts counts;
  std::size_t total_events = 0;
  for (std::size_t start = 0; start < cfg.n_traj; start += kBatch) {
    const std::size_t n = std::min(kBatch, cfg.n_traj - start);
    std::vector<Trajectory> batch(n);
    parallel_for(n, jobs, [&](std::size_t k) {
      const auto i = start + k;
      const auto eta0 = initial_state(cfg.initial, cfg.dimension, cfg.master_seed, i);
      if (eta0.size() >= cfg.caps.max_population) {
        throw Error(ErrorCode::InvalidArgument, "caps.max_population: must exceed the initial population of trajectory " +
                                                    std::to_string(i));
      }
      batch[k] = simulate(model, eta0, cfg.horizon, cfg.caps, trajectory_key(cfg.master_seed, i));
    });
    for (std::size_t k = 0; k < n; ++k) {
      counts.add(batch[k].status);
      total_events += batch[k].events.size();
      write_text_file(out_dir / numbered("traj", start + k), trajectory_text(batch[k], start + k));
    }
  }
  json manifest = manifest_base("simulate", cfg);
  manifest["status_counts"] = counts.to_json();
  manifest["total_events"] = total_events;
  manifest["files"] = {{"trajectories", "traj_%06d.jsonl"}, {"count", cfg.n_traj}};
  write_text_file(out_dir / "manifest.json", dump_document(manifest));
  return manifest;
}

json run_couple(const ExperimentConfig& cfg, const fs::path& out_dir, unsigned jobs, bool check_premise) {
  json lower_desc = cfg.lower_model, upper_desc = cfg.upper_model;
  if (lower_desc.is_null()) {
    if (cfg.model.is_null()) throw Error(ErrorCode::InvalidArgument, "models: missing (couple needs models.lower/upper)");
    lower_desc = upper_desc = cfg.model;
  }
  const auto m1 = build_model(lower_desc, cfg.dimension, "models.lower");
  const auto m2 = build_model(upper_desc, cfg.dimension, "models.upper");

  if (check_premise) {
    const auto trials = option(cfg, "premise_trials", json(2000)).get<std::size_t>();
    const auto max_n = option(cfg, "premise_max_n", json(10)).get<std::size_t>();
    const Box box{Point(cfg.dimension, option(cfg, "premise_box_lo", json(-3.0)).get<double>()),
                  Point(cfg.dimension, option(cfg, "premise_box_hi", json(3.0)).get<double>())};
    const auto report = check_monotone_premise(m1, m2, trials, max_n, RngStreamKey{cfg.master_seed, 0, Channel::Auxiliary, 0}, box);
    if (!report.passed) {
      json refusal{{"schema", kManifestSchema},
                   {"command", "couple"},
                   {"refused", true},
                   {"reason", "monotone premise fails"},
                   {"failed_inequality", report.failed_inequality},
                   {"witness",
                    {{"lower", particles_json(*report.witness_lower)},
                     {"upper", particles_json(*report.witness_upper)},
                     {"x", report.witness_point},
                     {"lhs", report.lhs},
                     {"rhs", report.rhs}}},
                   {"message", report.describe()}};
      return refusal;
    }
  }

  prepare_dir(out_dir);
  StatusCounts lower_counts, upper_counts;
  std::size_t violations = 0, audited = 0;
  for (std::size_t start = 0; start < cfg.n_traj; start += kBatch) {
    const std::size_t n = std::min(kBatch, cfg.n_traj - start);
    std::vector<CoupledPair> batch(n);
    parallel_for(n, jobs, [&](std::size_t k) {
      const auto i = start + k;
      const auto upper0 = initial_state(cfg.initial, cfg.dimension, cfg.master_seed, i);
      const auto lower0 = cfg.initial_lower ? initial_state(*cfg.initial_lower, cfg.dimension, cfg.master_seed, i) : upper0;
      batch[k] = simulate_coupled(m1, m2, lower0, upper0, cfg.horizon, cfg.caps, trajectory_key(cfg.master_seed, i));
    });
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = start + k;
      const auto& p = batch[k];
      lower_counts.add(p.lower.status);
      upper_counts.add(p.upper.status);
      audited += p.audit.size();
      for (const auto& a : p.audit) violations += !a.inclusion;
      write_text_file(out_dir / numbered("lower", i), trajectory_text(p.lower, i));
      write_text_file(out_dir / numbered("upper", i), trajectory_text(p.upper, i));
      std::ostringstream audit;
      write_audit_jsonl(audit, p);
      write_text_file(out_dir / numbered("audit", i), audit.str());
    }
  }
  json manifest = manifest_base("couple", cfg);
  manifest["status_counts"] = {{"lower", lower_counts.to_json()}, {"upper", upper_counts.to_json()}};
  manifest["audited_events"] = audited;
  manifest["inclusion_violations"] = violations;
  manifest["premise_checked"] = check_premise;
  manifest["files"] = {{"lower", "lower_%06d.jsonl"}, {"upper", "upper_%06d.jsonl"}, {"audit", "audit_%06d.jsonl"},
                       {"count", cfg.n_traj}};
  write_text_file(out_dir / "manifest.json", dump_document(manifest));
  return manifest;
}

json run_metric(const fs::path& a, const fs::path& b) {
  const auto pa = read_point_list(a), pb = read_point_list(b);
  if (!pa.empty() && !pb.empty() && pa[0].size() != pb[0].size()) {
    throw Error(ErrorCode::DimensionMismatch, "point lists have dimensions " + std::to_string(pa[0].size()) + " and " +
                                                  std::to_string(pb[0].size()));
  }
  const std::size_t d = !pa.empty() ? pa[0].size() : (!pb.empty() ? pb[0].size() : 1);
  // Ids are file line numbers so the assignment refers to input order.
  auto labelled = [d](const std::vector<Point>& pts) {
    std::vector<Particle> ps;
    for (std::size_t i = 0; i < pts.size(); ++i) ps.push_back({static_cast<ParticleId>(i), pts[i]});
    return Configuration(d, std::move(ps));
  };
  const auto za = labelled(pa), zb = labelled(pb);
  json out{{"cardinality", {za.size(), zb.size()}}, {"dimension", d}};
  if (za.size() != zb.size()) {
    out["dist"] = 1.0;
    out["d_eucl"] = nullptr;
    out["assignment"] = json::array();
    out["note"] = "cardinality differs";
    return out;
  }
  const auto m = optimal_matching(za, zb);
  json pairs = json::array();
  for (std::size_t i = 0; i < m.assignment.size(); ++i) pairs.push_back({i, m.assignment[i]});
  out["d_eucl"] = m.distance;
  out["dist"] = std::min(1.0, m.distance);
  out["assignment"] = pairs;
  out["note"] = m.distance > 1.0 ? "capped at 1" : "";
  return out;
}

}  // namespace bdsim
