#include "quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <vector>

namespace bdsim::detail {

namespace {
constexpr unsigned kMaxDepth = 20;
}

double integrate_interval(const std::function<double(double)>& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, kMaxDepth, rel_tol);
}

double integrate_box(const std::function<double(std::span<const double>)>& f, std::span<const double> lo,
                     std::span<const double> hi, double rel_tol) {
  const std::size_t d = lo.size();
  std::vector<double> x(d, 0.0);
  // Integrates coordinate k with coordinates < k already fixed in x.
  std::function<double(std::size_t)> level = [&](std::size_t k) -> double {
    return integrate_interval(
        [&, k](double t) {
          x[k] = t;
          return k + 1 == d ? f(x) : level(k + 1);
        },
        lo[k], hi[k], rel_tol);
  };
  return level(0);
}

}  // namespace bdsim::detail
