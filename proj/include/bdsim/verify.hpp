#pragma once

// Property and statistical suites run by `bdsim verify` and by the acceptance
// binary. Each check reports its statistic, the threshold it is held to and a
// verdict; nothing time-dependent goes into the report.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace bdsim {

struct CheckResult {
  std::string suite;
  std::string name;
  int criterion = 0;  // acceptance criterion number, 0 if none
  double statistic = 0.0;
  double threshold = 0.0;
  std::string relation;  // how statistic is compared with threshold: "<", "<=", ">=", "=="
  bool passed = false;
  nlohmann::json details = nlohmann::json::object();
};

struct VerifyOptions {
  std::uint64_t seed = 20240611;
  unsigned jobs = 1;
};

/// Suite names accepted by run_suite, "all" last.
const std::vector<std::string>& suite_names();

/// Throws InvalidArgument for an unknown suite.
std::vector<CheckResult> run_suite(const std::string& suite, const VerifyOptions& opts = {});

nlohmann::json check_json(const CheckResult& c);
/// {schema, suite, seed, checks, failures, passed}
nlohmann::json verify_report(const std::string& suite, const VerifyOptions& opts, const std::vector<CheckResult>& checks);

}  // namespace bdsim
