#include "bdsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <variant>

#include "bdsim/error.hpp"
#include "bdsim/parallel.hpp"
#include "quadrature.hpp"

namespace bdsim {

namespace {

constexpr double kKs05 = 1.358;
constexpr double kKs001 = 1.949;

// Neumaier summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// exp(-z) I_0(z) for z >= 0.
double scaled_bessel_i0(double z) {
  if (z < 600.0) return std::exp(-z) * std::cyl_bessel_i(0.0, z);
  return (1.0 + 1.0 / (8.0 * z) + 9.0 / (128.0 * z * z)) / std::sqrt(2.0 * std::numbers::pi * z);
}

// Average of exp(-|x|^2) over x ~ a(. - y).
double kernel_soft_average(const Kernel& a, std::span<const double> y, double rel_tol) {
  const std::size_t d = y.size();
  if (a.shape == Kernel::Shape::Gaussian) {
    const double s = 1.0 + 2.0 * a.scale * a.scale;
    double y2 = 0.0;
    for (double c : y) y2 += c * c;
    return std::pow(s, -static_cast<double>(d) / 2.0) * std::exp(-y2 / s);
  }
  const double r = a.scale;
  if (d == 1) {
    return std::sqrt(std::numbers::pi) / (4.0 * r) * (std::erf(y[0] + r) - std::erf(y[0] - r));
  }
  if (d == 2) {
    const double s = euclidean_norm(y);
    const double integral = detail::integrate_interval(
        [&](double rho) { return rho * std::exp(-(s - rho) * (s - rho)) * scaled_bessel_i0(2.0 * s * rho); }, 0.0, r,
        rel_tol);
    return 2.0 * integral / (r * r);
  }
  return std::numeric_limits<double>::quiet_NaN();  // no closed form; caller falls back to quadrature
}

double box_soft_integral(const Box& b) {
  double v = 1.0;
  for (std::size_t k = 0; k < b.lo.size(); ++k) {
    v *= std::sqrt(std::numbers::pi) / 2.0 * (std::erf(b.hi[k]) - std::erf(b.lo[k]));
  }
  return v;
}

// int b(x, eta) exp(-|x|^2) dx from per-term closed forms where they exist.
double soft_birth_integral(const RateModel& model, const Configuration& eta, double rel_tol) {
  double total = 0.0;
  for (const auto& term : model.births()) {
    if (const auto* c = std::get_if<ContactBirth>(&term)) {
      double s = 0.0;
      bool closed = true;
      for (std::size_t i = 0; i < eta.size() && closed; ++i) {
        const double v = kernel_soft_average(c->kernel, eta.position(i), rel_tol);
        if (std::isnan(v)) closed = false;
        s += v;
      }
      if (closed) {
        total += c->lambda * s;
        continue;
      }
    } else if (const auto* im = std::get_if<ImmigrationBirth>(&term)) {
      total += im->kappa / im->region.volume() * box_soft_integral(im->region);
      continue;
    } else if (const auto* sp = std::get_if<SizePowerBirth>(&term)) {
      total += birth_term_mass(term, eta) / sp->region.volume() * box_soft_integral(sp->region);
      continue;
    }
    RateModel single("", {term}, {});
    total += integrate_birth(single, eta, soft_weight, rel_tol);
  }
  return total;
}

Configuration with_point(const Configuration& eta, std::span<const double> x) {
  Configuration out = eta;
  ParticleRegistry reg(eta);
  out.insert_unchecked(reg.issue(), x);
  return out;
}

Configuration without_slot(const Configuration& eta, std::size_t slot) {
  Configuration out = eta;
  out.erase_slot(slot);
  return out;
}

// Monte-Carlo estimate of int b(x, eta) g(x) dx = B(eta) E[g(X)], X ~ b / B.
GeneratorValue mc_birth_integral(const RateModel& model, const Configuration& eta,
                                 const std::function<double(std::span<const double>)>& g, const QuadratureSpec& quad) {
  const double mass = cumulative_birth_rate(model, eta);
  if (mass == 0.0) return {};
  RandomStream rng(quad.key.with(Channel::Auxiliary, quad.key.counter));
  std::vector<double> values(quad.mc_samples);
  for (auto& v : values) v = g(sample_birth_location(model, eta, rng));
  const auto s = summarize(values);
  return {mass * s.estimate, mass * s.standard_error};
}

template <class Fn>
std::vector<double> per_trajectory(std::size_t n, unsigned jobs, Fn&& fn) {
  std::vector<double> out(n);
  parallel_for(n, jobs, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace

double soft_weight(std::span<const double> x) {
  double r2 = 0.0;
  for (double c : x) r2 += c * c;
  return std::exp(-r2);
}

TestFunction TestFunction::size() { return {"size", Kind::Size, 0, {}, std::nullopt}; }

TestFunction TestFunction::capped_size(std::size_t k) {
  return {"capped_size_" + std::to_string(k), Kind::CappedSize, k, {}, static_cast<double>(k)};
}

TestFunction TestFunction::soft_count() { return {"soft_count", Kind::SoftCount, 0, {}, std::nullopt}; }

TestFunction TestFunction::indicator_leq(std::size_t k) {
  return {"indicator_leq_" + std::to_string(k), Kind::IndicatorLeq, k, {}, 1.0};
}

TestFunction TestFunction::from_function(std::string id, std::function<double(const Configuration&)> f,
                                         std::optional<double> sup_bound) {
  return {std::move(id), Kind::Custom, 0, std::move(f), sup_bound};
}

bool TestFunction::size_only() const noexcept {
  return kind == Kind::Size || kind == Kind::CappedSize || kind == Kind::IndicatorLeq;
}

double TestFunction::of_size(std::size_t n) const {
  switch (kind) {
    case Kind::Size:
      return static_cast<double>(n);
    case Kind::CappedSize:
      return static_cast<double>(std::min(n, k));
    case Kind::IndicatorLeq:
      return n <= k ? 1.0 : 0.0;
    default:
      throw Error(ErrorCode::InvalidArgument, "test function " + id + " is not a function of |eta|");
  }
}

double TestFunction::operator()(const Configuration& eta) const {
  if (size_only()) return of_size(eta.size());
  if (kind == Kind::SoftCount) {
    double s = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) s += soft_weight(eta.position(i));
    return s;
  }
  return custom(eta);
}

GeneratorValue generator_apply(const RateModel& model, const TestFunction& f, const Configuration& eta,
                               const QuadratureSpec& quad) {
  GeneratorValue out;
  const std::size_t n = eta.size();

  if (f.size_only()) {
    const double up = f.of_size(n + 1) - f.of_size(n);
    const double down = n > 0 ? f.of_size(n - 1) - f.of_size(n) : 0.0;
    const double b = up != 0.0 ? cumulative_birth_rate(model, eta) : 0.0;
    const double d = down != 0.0 ? cumulative_death_rate(model, eta) : 0.0;
    out.value = b * up + d * down;
    return out;
  }

  std::function<double(std::span<const double>)> increment;
  if (f.kind == TestFunction::Kind::SoftCount) {
    increment = soft_weight;
  } else {
    const double base = f(eta);
    increment = [&, base](std::span<const double> x) { return f(with_point(eta, x)) - base; };
  }

  switch (quad.method) {
    case QuadratureSpec::Method::Auto:
      out.value = f.kind == TestFunction::Kind::SoftCount ? soft_birth_integral(model, eta, quad.rel_tol)
                                                          : integrate_birth(model, eta, increment, quad.rel_tol);
      break;
    case QuadratureSpec::Method::Adaptive:
      out.value = integrate_birth(model, eta, increment, quad.rel_tol);
      break;
    case QuadratureSpec::Method::MonteCarlo:
      out = mc_birth_integral(model, eta, increment, quad);
      break;
  }

  if (!std::isfinite(out.value)) throw Error(ErrorCode::Intractable, "generator: birth integral diverges");

  const auto rates = death_rates(model, eta);
  const double base = f.kind == TestFunction::Kind::SoftCount ? 0.0 : f(eta);
  for (std::size_t i = 0; i < n; ++i) {
    if (rates[i] == 0.0) continue;
    const double delta = f.kind == TestFunction::Kind::SoftCount ? -soft_weight(eta.position(i))
                                                                 : f(without_slot(eta, i)) - base;
    out.value += rates[i] * delta;
  }
  return out;
}

double integrated_generator(const RateModel& model, const TestFunction& f, const Trajectory& traj, double t,
                            std::size_t refinement, const QuadratureSpec& quad) {
  if (refinement == 0) throw Error(ErrorCode::InvalidArgument, "refinement must be positive");
  if (t > traj.valid_until() || (traj.capped() && t >= traj.valid_until())) {
    throw Error(ErrorCode::Precondition, "integrated_generator: t beyond the valid range of the trajectory");
  }
  double total = 0.0;
  for_each_interval(traj, t, [&](const Configuration& state, double from, double to) {
    const double lf = generator_apply(model, f, state, quad).value;
    const double piece = (to - from) / static_cast<double>(refinement);
    for (std::size_t k = 0; k < refinement; ++k) total += lf * piece;
  });
  return total;
}

SimReport summarize(const std::vector<double>& values) {
  SimReport r;
  r.n_samples = values.size();
  if (values.empty()) return r;
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  const double mean = sum.value() / static_cast<double>(values.size());
  CompensatedSum sq;
  for (double v : values) sq.add((v - mean) * (v - mean));
  r.estimate = mean;
  if (values.size() > 1) {
    const double var = sq.value() / static_cast<double>(values.size() - 1);
    r.standard_error = std::sqrt(var / static_cast<double>(values.size()));
  }
  return r;
}

SimReport martingale_residual(const RateModel& model, const TestFunction& f, const Configuration& eta0, double t,
                              std::size_t n_traj, const RngStreamKey& key, const EstimatorOptions& opts) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "martingale_residual: t must be positive");
  const double f0 = f(eta0);
  std::vector<double> residual(n_traj), increment(n_traj), integral(n_traj);
  std::vector<char> capped(n_traj, 0);
  parallel_for(n_traj, opts.jobs, [&](std::size_t i) {
    const auto traj = simulate(model, eta0, t, opts.caps, key.for_trajectory(i));
    if (traj.capped()) {
      capped[i] = 1;
      return;
    }
    increment[i] = f(state_at(traj, t)) - f0;
    integral[i] = integrated_generator(model, f, traj, t, 1, opts.quad);
    residual[i] = increment[i] - integral[i];
  });

  std::vector<double> kept_res, kept_inc, kept_int;
  for (std::size_t i = 0; i < n_traj; ++i) {
    if (capped[i]) continue;
    kept_res.push_back(residual[i]);
    kept_inc.push_back(increment[i]);
    kept_int.push_back(integral[i]);
  }
  SimReport r = summarize(kept_res);
  r.excluded = n_traj - kept_res.size();
  if (r.excluded * 100 > n_traj) r.warnings.push_back("more than 1% of trajectories hit a cap and were excluded");
  r.test_statistics["z"] = r.standard_error > 0.0 ? r.estimate / r.standard_error : 0.0;
  r.test_statistics["mean_increment"] = summarize(kept_inc).estimate;
  r.test_statistics["mean_integral"] = summarize(kept_int).estimate;
  return r;
}

SimReport semigroup_estimate(const RateModel& model, const TestFunction& f, const Configuration& alpha, double t,
                             std::size_t n_traj, const RngStreamKey& key, const EstimatorOptions& opts) {
  if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "semigroup_estimate: t must be nonnegative");
  if (t == 0.0) {
    SimReport r;
    r.estimate = f(alpha);
    r.n_samples = n_traj;
    return r;
  }
  std::vector<double> values(n_traj);
  std::vector<char> capped(n_traj, 0);
  parallel_for(n_traj, opts.jobs, [&](std::size_t i) {
    const auto traj = simulate(model, alpha, t, opts.caps, key.for_trajectory(i));
    if (traj.capped()) {
      capped[i] = 1;
      return;
    }
    values[i] = f(state_at(traj, t));
  });
  std::vector<double> kept;
  for (std::size_t i = 0; i < n_traj; ++i) {
    if (!capped[i]) kept.push_back(values[i]);
  }
  SimReport r = summarize(kept);
  r.excluded = n_traj - kept.size();
  if (r.excluded * 100 > n_traj) r.warnings.push_back("more than 1% of trajectories hit a cap and were excluded");
  return r;
}

std::vector<GeneratorLimitRow> generator_limit_check(const RateModel& model, const TestFunction& f,
                                                     const Configuration& alpha, const std::vector<double>& t_grid,
                                                     std::size_t n_traj, const RngStreamKey& key,
                                                     const EstimatorOptions& opts) {
  if (t_grid.empty()) return {};
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    if (!(t_grid[k] > 0.0) || (k > 0 && !(t_grid[k] < t_grid[k - 1]))) {
      throw Error(ErrorCode::InvalidArgument, "generator_limit_check: t_grid must be positive and decreasing");
    }
  }
  const double t_max = t_grid.front();
  const double f_alpha = f(alpha);
  // values[k][i] = f(eta_{t_k}) - f(alpha) on trajectory i
  std::vector<std::vector<double>> values(t_grid.size(), std::vector<double>(n_traj));
  std::vector<char> capped(n_traj, 0);
  parallel_for(n_traj, opts.jobs, [&](std::size_t i) {
    const auto traj = simulate(model, alpha, t_max, opts.caps, key.for_trajectory(i));
    if (traj.capped()) {
      capped[i] = 1;
      return;
    }
    for (std::size_t k = 0; k < t_grid.size(); ++k) values[k][i] = f(state_at(traj, t_grid[k])) - f_alpha;
  });

  const double lf = generator_apply(model, f, alpha, opts.quad).value;
  std::vector<GeneratorLimitRow> rows;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    std::vector<double> kept;
    for (std::size_t i = 0; i < n_traj; ++i) {
      if (!capped[i]) kept.push_back(values[k][i]);
    }
    const auto s = summarize(kept);
    GeneratorLimitRow row;
    row.t = t_grid[k];
    row.quotient = s.estimate / row.t;
    row.standard_error = s.standard_error / row.t;
    row.generator = lf;
    row.gap = std::abs(row.quotient - lf);
    rows.push_back(row);
  }
  return rows;
}

std::vector<MeanSizePoint> mean_size_curve(const RateModel& model, const Configuration& eta0,
                                           const std::vector<double>& t_grid, std::size_t n_traj,
                                           const RngStreamKey& key, const EstimatorOptions& opts) {
  if (!model.certificate()) throw Error(ErrorCode::Precondition, "mean_size_curve: model has no growth certificate");
  if (t_grid.empty()) return {};
  const double t_max = *std::max_element(t_grid.begin(), t_grid.end());
  std::vector<std::vector<double>> sizes(t_grid.size(), std::vector<double>(n_traj));
  std::vector<char> capped(n_traj, 0);
  parallel_for(n_traj, opts.jobs, [&](std::size_t i) {
    const auto traj = simulate(model, eta0, t_max, opts.caps, key.for_trajectory(i));
    if (traj.capped()) {
      capped[i] = 1;
      return;
    }
    for (std::size_t k = 0; k < t_grid.size(); ++k) sizes[k][i] = static_cast<double>(state_at(traj, t_grid[k]).size());
  });

  std::vector<MeanSizePoint> out;
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    std::vector<double> kept;
    for (std::size_t i = 0; i < n_traj; ++i) {
      if (!capped[i]) kept.push_back(sizes[k][i]);
    }
    MeanSizePoint p;
    p.t = t_grid[k];
    p.report = summarize(kept);
    p.report.excluded = n_traj - kept.size();
    p.bound = expectation_bound(static_cast<double>(eta0.size()), *model.certificate(), p.t);
    p.within_bound = p.report.estimate - 3.0 * p.report.standard_error <= p.bound;
    out.push_back(std::move(p));
  }
  return out;
}

KsResult ks_exponential(std::vector<double> samples, double rate) {
  if (samples.size() < 100) throw Error(ErrorCode::InvalidArgument, "ks_exponential: need at least 100 samples");
  if (!(rate > 0.0)) throw Error(ErrorCode::InvalidArgument, "ks_exponential: rate must be positive");
  for (double s : samples) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "ks_exponential: samples must be positive");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = -std::expm1(-rate * samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - cdf, cdf - static_cast<double>(i) / n});
  }
  return {d, kKs05 / std::sqrt(n), kKs001 / std::sqrt(n)};
}

KsResult two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 100 || b.size() < 100) throw Error(ErrorCode::InvalidArgument, "two_sample_ks: need at least 100 samples per side");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double n = static_cast<double>(a.size()), m = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double scale = std::sqrt((n + m) / (n * m));
  return {d, kKs05 * scale, kKs001 * scale};
}

}  // namespace bdsim
