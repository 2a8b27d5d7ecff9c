#include "bdsim/rate_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "bdsim/error.hpp"
#include "quadrature.hpp"

namespace bdsim {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

namespace {

constexpr double kGaussianCutoff = 8.0;  // in standard deviations
constexpr std::size_t kMaxRejections = 10'000'000;
constexpr std::size_t kMajorantMaxSize = 20;

double unit_ball_volume(std::size_t d) {
  // Exact in low dimension; tgamma is off by an ulp for d = 1.
  if (d == 1) return 2.0;
  if (d == 2) return std::numbers::pi;
  if (d == 3) return 4.0 * std::numbers::pi / 3.0;
  const double h = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive");
}

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be nonnegative");
  }
}

void validate_box(const Box& b) {
  if (b.lo.empty() || b.lo.size() != b.hi.size()) throw Error(ErrorCode::InvalidArgument, "box: malformed corners");
  for (std::size_t k = 0; k < b.lo.size(); ++k) {
    if (!(b.lo[k] < b.hi[k])) throw Error(ErrorCode::InvalidArgument, "box: lo must be below hi");
  }
}

double uniform_box_density(const Box& b, std::span<const double> x) {
  return b.contains(x) ? 1.0 / b.volume() : 0.0;
}

void sample_in_box(const Box& b, RandomStream& rng, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = rng.uniform(b.lo[k], b.hi[k]);
}

double size_power(double theta, double p, std::size_t n) { return theta * std::pow(static_cast<double>(n), p); }

std::optional<GrowthCertificate> term_certificate(const BirthTerm& term) {
  return std::visit(
      overloaded{
          [](const ContactBirth& c) -> std::optional<GrowthCertificate> { return GrowthCertificate{c.lambda, 0.0}; },
          [](const ImmigrationBirth& c) -> std::optional<GrowthCertificate> { return GrowthCertificate{0.0, c.kappa}; },
          [](const SizePowerBirth& c) -> std::optional<GrowthCertificate> {
            if (c.p == 0.0) return GrowthCertificate{0.0, c.theta};
            if (c.p <= 1.0) return GrowthCertificate{c.theta, 0.0};  // n^p <= n for n >= 1, and 0 at n = 0
            return std::nullopt;
          },
          [](const CustomBirth& c) { return c.certificate; },
      },
      term);
}

// Integral of a(z) g(y + z) dz over the kernel support.
double integrate_kernel(const Kernel& a, std::span<const double> y,
                        const std::function<double(std::span<const double>)>& g, double rel_tol) {
  const std::size_t d = y.size();
  std::vector<double> x(d);
  if (a.shape == Kernel::Shape::UniformBall && d <= 2) {
    const double r = a.scale;
    if (d == 1) {
      return detail::integrate_interval(
          [&](double z) {
            x[0] = y[0] + z;
            return g(x);
          },
          -r, r, rel_tol) / (2.0 * r);
    }
    // Polar coordinates about y keep the integrand smooth.
    const double inner = detail::integrate_interval(
        [&](double rho) {
          return rho * detail::integrate_interval(
                           [&](double phi) {
                             x[0] = y[0] + rho * std::cos(phi);
                             x[1] = y[1] + rho * std::sin(phi);
                             return g(x);
                           },
                           0.0, 2.0 * std::numbers::pi, rel_tol);
        },
        0.0, r, rel_tol);
    return inner / (std::numbers::pi * r * r);
  }
  const double half = a.shape == Kernel::Shape::UniformBall ? a.scale : kGaussianCutoff * a.scale;
  std::vector<double> lo(d, -half), hi(d, half);
  std::vector<double> shifted(d);
  return detail::integrate_box(
      [&](std::span<const double> z) {
        const double w = a.density(z);
        if (w == 0.0) return 0.0;
        for (std::size_t k = 0; k < d; ++k) shifted[k] = y[k] + z[k];
        return w * g(shifted);
      },
      lo, hi, rel_tol);
}

}  // namespace

Box Box::unit(std::size_t dimension) { return Box{Point(dimension, 0.0), Point(dimension, 1.0)}; }

double Box::volume() const {
  double v = 1.0;
  for (std::size_t k = 0; k < lo.size(); ++k) v *= hi[k] - lo[k];
  return v;
}

bool Box::contains(std::span<const double> x) const {
  for (std::size_t k = 0; k < lo.size(); ++k) {
    if (x[k] < lo[k] || x[k] > hi[k]) return false;
  }
  return true;
}

Kernel Kernel::uniform_ball(double radius) {
  require_positive(radius, "kernel radius");
  return {Shape::UniformBall, radius};
}

Kernel Kernel::gaussian(double sigma) {
  require_positive(sigma, "kernel sigma");
  return {Shape::Gaussian, sigma};
}

double Kernel::density(std::span<const double> offset) const {
  const std::size_t d = offset.size();
  double r2 = 0.0;
  for (double c : offset) r2 += c * c;
  if (shape == Shape::UniformBall) {
    return r2 <= scale * scale ? 1.0 / (unit_ball_volume(d) * std::pow(scale, static_cast<double>(d))) : 0.0;
  }
  const double s2 = scale * scale;
  return std::exp(-r2 / (2.0 * s2)) / std::pow(2.0 * std::numbers::pi * s2, static_cast<double>(d) / 2.0);
}

void Kernel::sample(RandomStream& rng, std::span<double> offset) const {
  const std::size_t d = offset.size();
  if (shape == Shape::Gaussian) {
    for (auto& c : offset) c = scale * rng.standard_normal();
    return;
  }
  if (d == 1) {
    offset[0] = rng.uniform(-scale, scale);
    return;
  }
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (auto& c : offset) {
      c = rng.standard_normal();
      norm2 += c * c;
    }
  } while (norm2 == 0.0);
  const double radius = scale * std::pow(rng.uniform_open(), 1.0 / static_cast<double>(d));
  const double f = radius / std::sqrt(norm2);
  for (auto& c : offset) c *= f;
}

RateModel::RateModel(std::string name, std::vector<BirthTerm> births, std::vector<DeathTerm> deaths)
    : name_(std::move(name)), births_(std::move(births)), deaths_(std::move(deaths)) {
  GrowthCertificate total;
  bool certified = true;
  for (const auto& t : births_) {
    auto c = term_certificate(t);
    if (!c) {
      certified = false;
      break;
    }
    total.c1 += c->c1;
    total.c2 += c->c2;
  }
  if (certified) certificate_ = total;
}

RateModel RateModel::contact(double lambda, Kernel kernel) {
  require_nonnegative(lambda, "contact lambda");
  return RateModel("contact", {ContactBirth{lambda, kernel}}, {});
}

RateModel RateModel::immigration(double kappa, Box region) {
  require_nonnegative(kappa, "immigration kappa");
  validate_box(region);
  return RateModel("immigration", {ImmigrationBirth{kappa, std::move(region)}}, {});
}

RateModel RateModel::constant_death(double mu) {
  require_nonnegative(mu, "death mu");
  return RateModel("constant_death", {}, {ConstantDeath{mu}});
}

RateModel RateModel::pairwise_death(double m0, double amplitude, double radius) {
  require_nonnegative(m0, "pairwise m0");
  require_nonnegative(amplitude, "pairwise amplitude");
  require_positive(radius, "pairwise radius");
  return RateModel("pairwise_death", {}, {PairwiseDeath{m0, amplitude, radius}});
}

RateModel RateModel::size_power_birth(double theta, double p, Box region) {
  require_nonnegative(theta, "size-power theta");
  require_nonnegative(p, "size-power exponent");
  validate_box(region);
  return RateModel("size_power_birth", {SizePowerBirth{theta, p, std::move(region)}}, {});
}

RateModel RateModel::superlinear_birth(double theta, double p, Box region) {
  if (!(p >= 2.0)) throw Error(ErrorCode::InvalidArgument, "superlinear_birth requires p >= 2");
  auto m = size_power_birth(theta, p, std::move(region));
  m.name_ = "superlinear_birth";
  return m;
}

RateModel operator+(const RateModel& a, const RateModel& b) {
  std::vector<BirthTerm> births = a.births_;
  births.insert(births.end(), b.births_.begin(), b.births_.end());
  std::vector<DeathTerm> deaths = a.deaths_;
  deaths.insert(deaths.end(), b.deaths_.begin(), b.deaths_.end());
  RateModel m(a.name_ + "+" + b.name_, std::move(births), std::move(deaths));
  // An explicitly overridden certificate on either side does not survive composition.
  return m;
}

RateModel RateModel::with_certificate(std::optional<GrowthCertificate> cert) const {
  RateModel m = *this;
  m.certificate_ = cert;
  return m;
}

bool RateModel::birth_monotone() const {
  return std::all_of(births_.begin(), births_.end(), [](const BirthTerm& t) {
    if (const auto* c = std::get_if<CustomBirth>(&t)) return c->monotone;
    if (const auto* s = std::get_if<SizePowerBirth>(&t)) return s->p >= 0.0;
    return true;
  });
}

double birth_rate(const RateModel& model, std::span<const double> x, const Configuration& eta) {
  if (x.size() != eta.dimension()) throw Error(ErrorCode::DimensionMismatch, "birth_rate: dimension mismatch");
  double total = 0.0;
  std::vector<double> offset(x.size());
  for (const auto& term : model.births()) {
    total += std::visit(
        overloaded{
            [&](const ContactBirth& c) {
              double s = 0.0;
              for (std::size_t i = 0; i < eta.size(); ++i) {
                auto y = eta.position(i);
                for (std::size_t k = 0; k < x.size(); ++k) offset[k] = x[k] - y[k];
                s += c.kernel.density(offset);
              }
              return c.lambda * s;
            },
            [&](const ImmigrationBirth& c) { return c.kappa * uniform_box_density(c.region, x); },
            [&](const SizePowerBirth& c) { return size_power(c.theta, c.p, eta.size()) * uniform_box_density(c.region, x); },
            [&](const CustomBirth& c) { return c.support.contains(x) ? c.rate(x, eta) : 0.0; },
        },
        term);
  }
  return total;
}

double death_rate_at(const RateModel& model, const Configuration& eta, std::size_t slot) {
  if (slot >= eta.size()) throw Error(ErrorCode::Precondition, "death_rate: slot out of range");
  double total = 0.0;
  for (const auto& term : model.deaths()) {
    total += std::visit(overloaded{
                            [](const ConstantDeath& c) { return c.mu; },
                            [&](const PairwiseDeath& c) {
                              const double r2 = c.radius * c.radius;
                              auto x = eta.position(slot);
                              std::size_t neighbours = 0;
                              for (std::size_t j = 0; j < eta.size(); ++j) {
                                if (j != slot && squared_distance(x, eta.position(j)) <= r2) ++neighbours;
                              }
                              return c.m0 + c.amplitude * static_cast<double>(neighbours);
                            },
                            [&](const CustomDeath& c) { return c.rate(slot, eta); },
                        },
                        term);
  }
  return total;
}

double death_rate(const RateModel& model, std::span<const double> x, const Configuration& eta) {
  if (x.size() != eta.dimension()) throw Error(ErrorCode::DimensionMismatch, "death_rate: dimension mismatch");
  auto slot = eta.find_position(x);
  if (!slot) throw Error(ErrorCode::Precondition, "death_rate: point is not in the configuration");
  return death_rate_at(model, eta, *slot);
}

std::vector<double> death_rates(const RateModel& model, const Configuration& eta) {
  std::vector<double> out(eta.size(), 0.0);
  for (std::size_t i = 0; i < eta.size(); ++i) out[i] = death_rate_at(model, eta, i);
  return out;
}

double birth_term_mass(const BirthTerm& term, const Configuration& eta) {
  return std::visit(overloaded{
                        [&](const ContactBirth& c) { return c.lambda * static_cast<double>(eta.size()); },
                        [](const ImmigrationBirth& c) { return c.kappa; },
                        [&](const SizePowerBirth& c) { return size_power(c.theta, c.p, eta.size()); },
                        [&](const CustomBirth& c) {
                          return detail::integrate_box([&](std::span<const double> x) { return c.rate(x, eta); },
                                                       c.support.lo, c.support.hi, 1e-8);
                        },
                    },
                    term);
}

double cumulative_birth_rate(const RateModel& model, const Configuration& eta) {
  double total = 0.0;
  for (const auto& term : model.births()) total += birth_term_mass(term, eta);
  return total;
}

double cumulative_death_rate(const RateModel& model, const Configuration& eta) {
  double total = 0.0;
  for (const auto& term : model.deaths()) {
    if (const auto* c = std::get_if<ConstantDeath>(&term)) {
      total += c->mu * static_cast<double>(eta.size());
    } else {
      RateModel single("", {}, {term});
      for (std::size_t i = 0; i < eta.size(); ++i) total += death_rate_at(single, eta, i);
    }
  }
  return total;
}

Point sample_birth_location(const RateModel& model, const Configuration& eta, RandomStream& rng) {
  std::vector<double> masses;
  masses.reserve(model.births().size());
  double total = 0.0;
  for (const auto& term : model.births()) {
    masses.push_back(birth_term_mass(term, eta));
    total += masses.back();
  }
  if (!(total > 0.0)) throw Error(ErrorCode::Precondition, "sample_birth_location: cumulative birth rate is zero");

  std::size_t pick = 0;
  if (masses.size() > 1) {
    const double target = rng.uniform_open() * total;
    double acc = 0.0;
    pick = masses.size() - 1;
    for (std::size_t k = 0; k < masses.size(); ++k) {
      acc += masses[k];
      if (target < acc && masses[k] > 0.0) {
        pick = k;
        break;
      }
    }
    while (masses[pick] == 0.0) --pick;
  }

  Point x(eta.dimension());
  std::visit(overloaded{
                 [&](const ContactBirth& c) {
                   auto parent = eta.position(rng.index(eta.size()));
                   c.kernel.sample(rng, x);
                   for (std::size_t k = 0; k < x.size(); ++k) x[k] += parent[k];
                 },
                 [&](const ImmigrationBirth& c) { sample_in_box(c.region, rng, x); },
                 [&](const SizePowerBirth& c) { sample_in_box(c.region, rng, x); },
                 [&](const CustomBirth& c) {
                   const double envelope = c.envelope(eta);
                   for (std::size_t attempt = 0; attempt < kMaxRejections; ++attempt) {
                     sample_in_box(c.support, rng, x);
                     const double b = c.rate(x, eta);
                     if (b > envelope * (1.0 + 1e-12)) {
                       throw Error(ErrorCode::PremiseViolation, "custom birth rate exceeds its declared envelope");
                     }
                     if (rng.uniform_open() * envelope < b) return;
                   }
                   throw Error(ErrorCode::Intractable, "custom birth sampler: rejection budget exhausted");
                 },
             },
             model.births()[pick]);
  return x;
}

double majorant_birth_rate(const RateModel& model, std::span<const double> x, const Configuration& eta) {
  if (model.birth_monotone()) return birth_rate(model, x, eta);
  const std::size_t n = eta.size();
  if (n > kMajorantMaxSize) {
    throw Error(ErrorCode::Intractable, "majorant_birth_rate: subset enumeration needs |eta| <= 20");
  }
  double best = 0.0;
  const auto all = eta.particles();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<Particle> subset;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) subset.push_back(all[i]);
    }
    best = std::max(best, birth_rate(model, x, Configuration(eta.dimension(), std::move(subset))));
  }
  return best;
}

double integrate_birth(const RateModel& model, const Configuration& eta,
                       const std::function<double(std::span<const double>)>& g, double rel_tol) {
  double total = 0.0;
  for (const auto& term : model.births()) {
    total += std::visit(
        overloaded{
            [&](const ContactBirth& c) {
              double s = 0.0;
              for (std::size_t i = 0; i < eta.size(); ++i) s += integrate_kernel(c.kernel, eta.position(i), g, rel_tol);
              return c.lambda * s;
            },
            [&](const ImmigrationBirth& c) {
              return c.kappa / c.region.volume() * detail::integrate_box(g, c.region.lo, c.region.hi, rel_tol);
            },
            [&](const SizePowerBirth& c) {
              return size_power(c.theta, c.p, eta.size()) / c.region.volume() *
                     detail::integrate_box(g, c.region.lo, c.region.hi, rel_tol);
            },
            [&](const CustomBirth& c) {
              return detail::integrate_box([&](std::span<const double> x) { return c.rate(x, eta) * g(x); },
                                           c.support.lo, c.support.hi, rel_tol);
            },
        },
        term);
  }
  return total;
}

Configuration random_configuration(std::size_t n, const Box& box, RandomStream& rng) {
  std::vector<Point> pts(n, Point(box.dimension()));
  for (auto& p : pts) sample_in_box(box, rng, p);
  return Configuration::from_points(box.dimension(), pts);
}

CertificateReport growth_certificate_check(const RateModel& model, std::size_t trials, std::size_t max_n,
                                           const RngStreamKey& key, const Box& box) {
  if (!model.certificate()) throw Error(ErrorCode::Precondition, "growth_certificate_check: model has no certificate");
  const auto cert = *model.certificate();
  CertificateReport report;
  for (std::size_t t = 0; t < trials; ++t) {
    RandomStream rng(key.with(Channel::Auxiliary, t));
    const std::size_t n = rng.index(max_n + 1);
    auto eta = random_configuration(n, box, rng);
    const double b = cumulative_birth_rate(model, eta);
    const double bound = cert.c1 * static_cast<double>(n) + cert.c2;
    const double ratio = bound > 0.0 ? b / bound : (b > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    report.max_ratio = std::max(report.max_ratio, ratio);
    if (b > bound * (1.0 + 1e-6) && report.passed) {
      report.passed = false;
      report.witness = std::move(eta);
    }
  }
  return report;
}

}  // namespace bdsim
