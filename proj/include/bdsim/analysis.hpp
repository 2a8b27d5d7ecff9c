#pragma once

// Generator evaluation, martingale residuals, semigroup estimates and the
// Kolmogorov-Smirnov utilities used to check simulation output against exact laws.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bdsim/simulator.hpp"

namespace bdsim {

/// A test function f on finite configurations.
struct TestFunction {
  enum class Kind { Size, CappedSize, SoftCount, IndicatorLeq, Custom };

  std::string id;
  Kind kind = Kind::Size;
  std::size_t k = 0;
  std::function<double(const Configuration&)> custom;
  std::optional<double> sup_bound;

  static TestFunction size();
  static TestFunction capped_size(std::size_t k);
  static TestFunction soft_count();
  static TestFunction indicator_leq(std::size_t k);
  static TestFunction from_function(std::string id, std::function<double(const Configuration&)> f,
                                    std::optional<double> sup_bound = std::nullopt);

  double operator()(const Configuration& eta) const;
  /// True when f(eta) depends on |eta| only.
  bool size_only() const noexcept;
  /// f at any configuration of size n; only for size_only() functions.
  double of_size(std::size_t n) const;
};

/// exp(-|x|^2), the per-point weight of soft_count.
double soft_weight(std::span<const double> x);

struct SimReport {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t n_samples = 0;
  std::map<std::string, double> test_statistics;
  std::size_t excluded = 0;  // capped trajectories left out
  std::vector<std::string> warnings;
};

struct QuadratureSpec {
  enum class Method { Auto, Adaptive, MonteCarlo };
  Method method = Method::Auto;
  double rel_tol = 1e-6;
  std::size_t mc_samples = 10'000;
  RngStreamKey key;
};

struct GeneratorValue {
  double value = 0.0;
  double standard_error = 0.0;  // nonzero only for Monte-Carlo birth integrals
};

/// Lf(eta) = int b(x, eta) [f(eta + x) - f(eta)] dx + sum_x d(x, eta) [f(eta - x) - f(eta)].
GeneratorValue generator_apply(const RateModel& model, const TestFunction& f, const Configuration& eta,
                               const QuadratureSpec& quad = {});

/// int_0^t Lf(eta_s) ds by summation over constancy intervals, each split into
/// `refinement` equal pieces. t must be within the valid range of traj.
double integrated_generator(const RateModel& model, const TestFunction& f, const Trajectory& traj, double t,
                            std::size_t refinement = 1, const QuadratureSpec& quad = {});

struct EstimatorOptions {
  Caps caps;
  unsigned jobs = 1;
  QuadratureSpec quad;
};

/// Mean over trajectories of f(eta_t) - f(eta_0) - int_0^t Lf(eta_s) ds.
/// test_statistics carries "z" (estimate / SE), "mean_increment" and "mean_integral".
SimReport martingale_residual(const RateModel& model, const TestFunction& f, const Configuration& eta0, double t,
                              std::size_t n_traj, const RngStreamKey& key, const EstimatorOptions& opts = {});

/// Monte-Carlo estimate of S_t f(alpha) = E f(eta(alpha, t)).
SimReport semigroup_estimate(const RateModel& model, const TestFunction& f, const Configuration& alpha, double t,
                             std::size_t n_traj, const RngStreamKey& key, const EstimatorOptions& opts = {});

struct GeneratorLimitRow {
  double t = 0.0;
  double quotient = 0.0;   // (S_t f(alpha) - f(alpha)) / t
  double generator = 0.0;  // Lf(alpha)
  double gap = 0.0;
  double standard_error = 0.0;
};

/// One set of trajectories (common random numbers) evaluated at every t.
std::vector<GeneratorLimitRow> generator_limit_check(const RateModel& model, const TestFunction& f,
                                                     const Configuration& alpha, const std::vector<double>& t_grid,
                                                     std::size_t n_traj, const RngStreamKey& key,
                                                     const EstimatorOptions& opts = {});

struct MeanSizePoint {
  double t = 0.0;
  SimReport report;
  double bound = 0.0;
  bool within_bound = false;  // estimate - 3 SE <= bound
};

std::vector<MeanSizePoint> mean_size_curve(const RateModel& model, const Configuration& eta0,
                                           const std::vector<double>& t_grid, std::size_t n_traj,
                                           const RngStreamKey& key, const EstimatorOptions& opts = {});

struct KsResult {
  double statistic = 0.0;
  double threshold_05 = 0.0;
  double threshold_001 = 0.0;

  bool passes_05() const noexcept { return statistic < threshold_05; }
  bool passes_001() const noexcept { return statistic < threshold_001; }
};

/// One-sample KS against Exp(rate). Needs at least 100 positive samples.
KsResult ks_exponential(std::vector<double> samples, double rate);

/// Two-sample KS. Needs at least 100 samples on each side.
KsResult two_sample_ks(std::vector<double> a, std::vector<double> b);

/// Mean and standard error with compensated summation in index order.
SimReport summarize(const std::vector<double>& values);

}  // namespace bdsim
