// bdsim command-line front end. Talks to the library only through bdsim.h.
//
// Exit codes: 0 success, 1 usage or input error, 2 verification failures.

#include <chrono>
#include <cstdio>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bdsim/bdsim.h"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailures = 2;

int fail(const char* what, bds_status s) {
  std::cerr << "bdsim: " << what << ": " << bds_status_name(s) << ": " << bds_last_error() << "\n";
  return kUsage;
}

// Prints and frees a library string.
void emit(char* s) {
  if (!s) return;
  std::fputs(s, stdout);
  std::fflush(stdout);
  bds_string_free(s);
}

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "bdsim-out";
  unsigned jobs = 1;
};

int load(const Globals& g, bds_experiment** e) {
  if (g.config.empty()) {
    std::cerr << "bdsim: --config is required for this command\n";
    return kUsage;
  }
  if (auto s = bds_experiment_load(g.config.c_str(), e); s != BDS_OK) return fail("config", s);
  if (g.seed) bds_experiment_set_seed(*e, *g.seed);
  return kOk;
}

class Timer {
 public:
  explicit Timer(const char* name) : name_(name), start_(std::chrono::steady_clock::now()) {}
  ~Timer() {
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    // Wall time stays on stderr so that output files are reproducible.
    std::fprintf(stderr, "bdsim: %s wall time %.3f s\n", name_, s);
  }

 private:
  const char* name_;
  std::chrono::steady_clock::time_point start_;
};

int cmd_simulate(const Globals& g) {
  bds_experiment* e = nullptr;
  if (int rc = load(g, &e)) return rc;
  Timer timer("simulate");
  char* summary = nullptr;
  const auto s = bds_run_simulate(e, g.out.c_str(), g.jobs, &summary);
  bds_experiment_free(e);
  if (s != BDS_OK) return fail("simulate", s);
  emit(summary);
  return kOk;
}

int cmd_couple(const Globals& g, bool check_premise) {
  bds_experiment* e = nullptr;
  if (int rc = load(g, &e)) return rc;
  Timer timer("couple");
  char* summary = nullptr;
  size_t violations = 0;
  int refused = 0;
  const auto s = bds_run_couple(e, g.out.c_str(), g.jobs, check_premise, &summary, &violations, &refused);
  bds_experiment_free(e);
  if (s == BDS_PREMISE_VIOLATION) {
    fail("couple", s);
    return kFailures;
  }
  if (s != BDS_OK) return fail("couple", s);
  emit(summary);
  if (refused) {
    std::cerr << "bdsim: couple refused: monotone premise fails (witness in output)\n";
    return kFailures;
  }
  if (violations > 0) {
    std::cerr << "bdsim: couple: " << violations << " inclusion flags false\n";
    return kFailures;
  }
  return kOk;
}

int cmd_verify(const Globals& g, const std::string& suite) {
  Timer timer("verify");
  char* report = nullptr;
  size_t failures = 0;
  const std::uint64_t* seed = g.seed ? &*g.seed : nullptr;
  const auto s = bds_run_verify(suite.c_str(), seed, g.jobs, &report, &failures);
  if (s != BDS_OK) return fail("verify", s);
  emit(report);
  if (failures > 0) {
    std::cerr << "bdsim: verify: " << failures << " check(s) failed\n";
    return kFailures;
  }
  return kOk;
}

int cmd_metric(const std::string& a, const std::string& b) {
  char* result = nullptr;
  const auto s = bds_metric_files(a.c_str(), b.c_str(), &result);
  if (s != BDS_OK) return fail("metric", s);
  emit(result);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial birth-and-death process simulator"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", bds_version());

  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config, "Experiment config or run manifest (JSON)");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed, overrides the config");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();

  auto* sim = app.add_subcommand("simulate", "Simulate trajectories and write JSON Lines event streams");
  auto* couple = app.add_subcommand("couple", "Simulate monotone coupled pairs with an inclusion audit");
  bool check_premise = false;
  couple->add_flag("--check-premise", check_premise, "Search for a premise violation first and refuse if found");
  auto* verify = app.add_subcommand("verify", "Run verification suites and print a JSON report");
  std::string suite = "all";
  verify->add_option("suite", suite, "Suite name or 'all'")->capture_default_str();
  auto* metric = app.add_subcommand("metric", "Distance between two point-list files");
  std::string file_a, file_b;
  metric->add_option("a", file_a, "First point list")->required()->check(CLI::ExistingFile);
  metric->add_option("b", file_b, "Second point list")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  if (sim->parsed()) return cmd_simulate(g);
  if (couple->parsed()) return cmd_couple(g, check_premise);
  if (verify->parsed()) return cmd_verify(g, suite);
  if (metric->parsed()) return cmd_metric(file_a, file_b);
  return kUsage;
}
