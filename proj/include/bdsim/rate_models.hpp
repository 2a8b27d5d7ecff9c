#pragma once

// Birth and death rate coefficients b(x, eta), d(x, eta), their cumulative
// rates, exact birth-location samplers and growth certificates.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "bdsim/config_space.hpp"
#include "bdsim/rng.hpp"

namespace bdsim {

/// Axis-aligned box [lo, hi].
struct Box {
  Point lo;
  Point hi;

  static Box unit(std::size_t dimension);
  std::size_t dimension() const noexcept { return lo.size(); }
  double volume() const;
  bool contains(std::span<const double> x) const;
};

/// A probability density a(z) on R^d, so that ||a||_1 = 1.
struct Kernel {
  enum class Shape { UniformBall, Gaussian };

  Shape shape = Shape::UniformBall;
  double scale = 1.0;  // ball radius or standard deviation

  static Kernel uniform_ball(double radius);
  static Kernel gaussian(double sigma);

  double density(std::span<const double> offset) const;
  void sample(RandomStream& rng, std::span<double> offset) const;
};

/// Sublinear growth bound: integral of b(x, eta) dx <= c1 |eta| + c2.
struct GrowthCertificate {
  double c1 = 0.0;
  double c2 = 0.0;
};

// b(x, eta) = lambda * sum_{y in eta} a(x - y)
struct ContactBirth {
  double lambda = 1.0;
  Kernel kernel;
};

// b(x, eta) = kappa / |region| on the region
struct ImmigrationBirth {
  double kappa = 1.0;
  Box region;
};

// b(x, eta) = theta |eta|^p / |region| on the region
struct SizePowerBirth {
  double theta = 1.0;
  double p = 1.0;
  Box region;
};

// User-supplied b. It must vanish outside `support`, and `envelope(eta)` must
// bound b(., eta) from above there; sampling is by rejection from the uniform
// proposal on the support.
struct CustomBirth {
  std::function<double(std::span<const double>, const Configuration&)> rate;
  Box support;
  std::function<double(const Configuration&)> envelope;
  bool monotone = false;
  std::optional<GrowthCertificate> certificate;
};

using BirthTerm = std::variant<ContactBirth, ImmigrationBirth, SizePowerBirth, CustomBirth>;

struct ConstantDeath {
  double mu = 1.0;
};

// d(x, eta) = m0 + amplitude * #{y in eta \ x : |x - y| <= radius}
struct PairwiseDeath {
  double m0 = 0.0;
  double amplitude = 1.0;
  double radius = 1.0;
};

// User-supplied d, evaluated at the particle stored in `slot`.
struct CustomDeath {
  std::function<double(std::size_t slot, const Configuration&)> rate;
};

using DeathTerm = std::variant<ConstantDeath, PairwiseDeath, CustomDeath>;

/// A birth/death rate pair. Births and deaths are sums of their terms.
class RateModel {
 public:
  RateModel() = default;
  RateModel(std::string name, std::vector<BirthTerm> births, std::vector<DeathTerm> deaths);

  static RateModel contact(double lambda, Kernel kernel);
  static RateModel immigration(double kappa, Box region);
  static RateModel constant_death(double mu);
  static RateModel pairwise_death(double m0, double amplitude, double radius);
  static RateModel size_power_birth(double theta, double p, Box region);
  /// theta |eta|^p with p >= 2; carries no certificate.
  static RateModel superlinear_birth(double theta, double p, Box region);

  /// Composite model: births and deaths are added.
  friend RateModel operator+(const RateModel& a, const RateModel& b);

  /// Replaces the derived certificate (used to state a deliberately wrong one).
  RateModel with_certificate(std::optional<GrowthCertificate> cert) const;

  const std::string& name() const noexcept { return name_; }
  const std::vector<BirthTerm>& births() const noexcept { return births_; }
  const std::vector<DeathTerm>& deaths() const noexcept { return deaths_; }
  const std::optional<GrowthCertificate>& certificate() const noexcept { return certificate_; }
  /// b(x, xi) <= b(x, eta) whenever xi is a subset of eta.
  bool birth_monotone() const;

 private:
  std::string name_;
  std::vector<BirthTerm> births_;
  std::vector<DeathTerm> deaths_;
  std::optional<GrowthCertificate> certificate_;
};

double birth_rate(const RateModel& model, std::span<const double> x, const Configuration& eta);

/// d(x, eta); x must be a point of eta.
double death_rate(const RateModel& model, std::span<const double> x, const Configuration& eta);
double death_rate_at(const RateModel& model, const Configuration& eta, std::size_t slot);
/// d(x_i, eta) for every slot i.
std::vector<double> death_rates(const RateModel& model, const Configuration& eta);

/// B(eta) for one term.
double birth_term_mass(const BirthTerm& term, const Configuration& eta);
double cumulative_birth_rate(const RateModel& model, const Configuration& eta);
double cumulative_death_rate(const RateModel& model, const Configuration& eta);

/// Draws x with density b(., eta) / B(eta).
Point sample_birth_location(const RateModel& model, const Configuration& eta, RandomStream& rng);

/// sup over subsets xi of eta of b(x, xi).
double majorant_birth_rate(const RateModel& model, std::span<const double> x, const Configuration& eta);

/// Integral of b(x, eta) g(x) dx. Closed-form pieces are not used here; this
/// is the quadrature route for arbitrary g.
double integrate_birth(const RateModel& model, const Configuration& eta,
                       const std::function<double(std::span<const double>)>& g, double rel_tol = 1e-8);

struct CertificateReport {
  bool passed = true;
  double max_ratio = 0.0;  // max of B(eta) / (c1 |eta| + c2) over probes
  std::optional<Configuration> witness;
};

/// Probes random configurations (uniform in `box`, cardinality 0..max_n).
CertificateReport growth_certificate_check(const RateModel& model, std::size_t trials, std::size_t max_n,
                                           const RngStreamKey& key, const Box& box);

/// Uniform random configuration of n points in `box`, labelled lexicographically.
Configuration random_configuration(std::size_t n, const Box& box, RandomStream& rng);

}  // namespace bdsim
