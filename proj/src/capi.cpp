#include "bdsim/bdsim.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "bdsim/error.hpp"
#include "bdsim/io.hpp"
#include "bdsim/runner.hpp"
#include "bdsim/verify.hpp"

using namespace bdsim;

struct bds_experiment {
  ExperimentConfig cfg;
};

struct bds_model {
  RateModel model;
  std::size_t dimension;
};

struct bds_configuration {
  Configuration eta;
};

struct bds_trajectory {
  Trajectory traj;
};

namespace {

thread_local std::string last_error;

bds_status code_of(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return BDS_INVALID_ARGUMENT;
    case ErrorCode::DimensionMismatch: return BDS_DIMENSION_MISMATCH;
    case ErrorCode::Precondition: return BDS_PRECONDITION;
    case ErrorCode::PremiseViolation: return BDS_PREMISE_VIOLATION;
    case ErrorCode::Parse: return BDS_PARSE_ERROR;
    case ErrorCode::Io: return BDS_IO_ERROR;
    case ErrorCode::Intractable: return BDS_INTRACTABLE;
  }
  return BDS_INTERNAL;
}

template <class Fn>
bds_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return BDS_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return code_of(e.code());
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return BDS_PARSE_ERROR;
  } catch (const std::exception& e) {
    last_error = e.what();
    return BDS_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return BDS_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* bds_version(void) { return "0.1.0"; }

const char* bds_last_error(void) { return last_error.c_str(); }

const char* bds_status_name(bds_status s) {
  switch (s) {
    case BDS_OK: return "ok";
    case BDS_INVALID_ARGUMENT: return "invalid argument";
    case BDS_DIMENSION_MISMATCH: return "dimension mismatch";
    case BDS_PRECONDITION: return "precondition violated";
    case BDS_PREMISE_VIOLATION: return "coupling premise violated";
    case BDS_PARSE_ERROR: return "parse error";
    case BDS_IO_ERROR: return "i/o error";
    case BDS_INTRACTABLE: return "intractable";
    case BDS_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void bds_string_free(char* s) { std::free(s); }

bds_status bds_experiment_parse(const char* json_text, bds_experiment** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    *out = new bds_experiment{parse_config_text(json_text)};
  });
}

bds_status bds_experiment_load(const char* path, bds_experiment** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new bds_experiment{load_config(path)};
  });
}

void bds_experiment_free(bds_experiment* e) { delete e; }

bds_status bds_experiment_set_seed(bds_experiment* e, uint64_t seed) {
  return guarded([&] {
    need(e, "experiment");
    e->cfg.master_seed = seed;
  });
}

bds_status bds_experiment_to_json(const bds_experiment* e, char** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = dup(dump_document(to_json(e->cfg)));
  });
}

bds_status bds_experiment_hash(const bds_experiment* e, char** out) {
  return guarded([&] {
    need(e, "experiment");
    need(out, "out");
    *out = dup(config_hash(e->cfg));
  });
}

bds_status bds_run_simulate(const bds_experiment* e, const char* out_dir, unsigned jobs, char** summary) {
  return guarded([&] {
    need(e, "experiment");
    need(out_dir, "out_dir");
    const auto j = run_simulate(e->cfg, out_dir, jobs);
    if (summary) *summary = dup(dump_document(j));
  });
}

bds_status bds_run_couple(const bds_experiment* e, const char* out_dir, unsigned jobs, int check_premise, char** summary,
                          size_t* violations, int* refused) {
  return guarded([&] {
    need(e, "experiment");
    need(out_dir, "out_dir");
    const auto j = run_couple(e->cfg, out_dir, jobs, check_premise != 0);
    const bool was_refused = j.value("refused", false);
    if (refused) *refused = was_refused ? 1 : 0;
    if (violations) *violations = was_refused ? 0 : j.at("inclusion_violations").get<size_t>();
    if (summary) *summary = dup(dump_document(j));
  });
}

bds_status bds_run_verify(const char* suite, const uint64_t* seed_or_null, unsigned jobs, char** report,
                          size_t* failures) {
  return guarded([&] {
    need(suite, "suite");
    VerifyOptions opts;
    if (seed_or_null) opts.seed = *seed_or_null;
    opts.jobs = jobs;
    const auto checks = run_suite(suite, opts);
    const auto j = verify_report(suite, opts, checks);
    if (failures) *failures = j.at("failures").get<size_t>();
    if (report) *report = dup(dump_document(j));
  });
}

bds_status bds_verify_suites(char** json_array) {
  return guarded([&] {
    need(json_array, "json_array");
    *json_array = dup(nlohmann::json(suite_names()).dump());
  });
}

bds_status bds_metric_files(const char* path_a, const char* path_b, char** result) {
  return guarded([&] {
    need(path_a, "path_a");
    need(path_b, "path_b");
    need(result, "result");
    *result = dup(dump_document(run_metric(path_a, path_b)));
  });
}

bds_status bds_configuration_create(size_t dimension, const double* coords, size_t n, bds_configuration** out) {
  return guarded([&] {
    need(out, "out");
    if (n > 0) need(coords, "coords");
    std::vector<Point> pts(n);
    for (size_t i = 0; i < n; ++i) pts[i].assign(coords + i * dimension, coords + (i + 1) * dimension);
    *out = new bds_configuration{Configuration::from_points(dimension, pts)};
  });
}

void bds_configuration_free(bds_configuration* c) { delete c; }

size_t bds_configuration_size(const bds_configuration* c) { return c ? c->eta.size() : 0; }

size_t bds_configuration_dimension(const bds_configuration* c) { return c ? c->eta.dimension() : 0; }

bds_status bds_configuration_point(const bds_configuration* c, size_t slot, int64_t* id, double* coords) {
  return guarded([&] {
    need(c, "configuration");
    if (slot >= c->eta.size()) throw Error(ErrorCode::InvalidArgument, "slot out of range");
    if (id) *id = c->eta.id(slot);
    if (coords) {
      const auto x = c->eta.position(slot);
      std::copy(x.begin(), x.end(), coords);
    }
  });
}

bds_status bds_dist(const bds_configuration* a, const bds_configuration* b, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    *out = dist(a->eta, b->eta);
  });
}

bds_status bds_model_parse(const char* json_text, size_t dimension, bds_model** out) {
  return guarded([&] {
    need(json_text, "json_text");
    need(out, "out");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::Parse, std::string("model: ") + e.what());
    }
    *out = new bds_model{build_model(j, dimension), dimension};
  });
}

void bds_model_free(bds_model* m) { delete m; }

bds_status bds_model_rates(const bds_model* m, const bds_configuration* eta, double* birth_total, double* death_total) {
  return guarded([&] {
    need(m, "model");
    need(eta, "configuration");
    if (birth_total) *birth_total = cumulative_birth_rate(m->model, eta->eta);
    if (death_total) *death_total = cumulative_death_rate(m->model, eta->eta);
  });
}

bds_status bds_model_birth_rate(const bds_model* m, const double* x, const bds_configuration* eta, double* out) {
  return guarded([&] {
    need(m, "model");
    need(x, "x");
    need(eta, "configuration");
    need(out, "out");
    *out = birth_rate(m->model, std::span<const double>(x, eta->eta.dimension()), eta->eta);
  });
}

bds_status bds_simulate(const bds_model* m, const bds_configuration* eta0, double horizon, size_t max_population,
                        size_t max_events, uint64_t seed, uint64_t trajectory, bds_trajectory** out) {
  return guarded([&] {
    need(m, "model");
    need(eta0, "configuration");
    need(out, "out");
    if (eta0->eta.dimension() != m->dimension) throw Error(ErrorCode::DimensionMismatch, "model and configuration dimensions differ");
    *out = new bds_trajectory{
        simulate(m->model, eta0->eta, horizon, Caps{max_population, max_events}, trajectory_key(seed, trajectory))};
  });
}

void bds_trajectory_free(bds_trajectory* t) { delete t; }

size_t bds_trajectory_event_count(const bds_trajectory* t) { return t ? t->traj.events.size() : 0; }

bds_status bds_trajectory_event(const bds_trajectory* t, size_t i, double* time, bds_event_kind* kind, int64_t* id,
                                double* coords) {
  return guarded([&] {
    need(t, "trajectory");
    if (i >= t->traj.events.size()) throw Error(ErrorCode::InvalidArgument, "event index out of range");
    const auto& e = t->traj.events[i];
    if (time) *time = e.time;
    if (kind) *kind = e.kind == EventKind::Birth ? BDS_BIRTH : BDS_DEATH;
    if (id) *id = e.id;
    if (coords) std::copy(e.position.begin(), e.position.end(), coords);
  });
}

bds_status bds_trajectory_status(const bds_trajectory* t, bds_termination* kind, double* time) {
  return guarded([&] {
    need(t, "trajectory");
    if (kind) {
      switch (t->traj.status.kind) {
        case Termination::Completed: *kind = BDS_COMPLETED; break;
        case Termination::Absorbed: *kind = BDS_ABSORBED; break;
        case Termination::CapHit: *kind = BDS_CAP_HIT; break;
      }
    }
    if (time) *time = t->traj.status.time;
  });
}

bds_status bds_trajectory_state_at(const bds_trajectory* t, double time, bds_configuration** out) {
  return guarded([&] {
    need(t, "trajectory");
    need(out, "out");
    *out = new bds_configuration{state_at(t->traj, time)};
  });
}

bds_status bds_trajectory_to_jsonl(const bds_trajectory* t, char** out) {
  return guarded([&] {
    need(t, "trajectory");
    need(out, "out");
    std::ostringstream os;
    write_trajectory_jsonl(os, t->traj, t->traj.key.trajectory);
    *out = dup(os.str());
  });
}

}  // extern "C"
