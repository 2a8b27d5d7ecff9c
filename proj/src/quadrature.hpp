#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace bdsim::detail {

/// Adaptive Gauss-Kronrod (15-point) on [a, b].
double integrate_interval(const std::function<double(double)>& f, double a, double b, double rel_tol);

/// Iterated adaptive Gauss-Kronrod over the box [lo, hi].
double integrate_box(const std::function<double(std::span<const double>)>& f, std::span<const double> lo,
                     std::span<const double> hi, double rel_tol);

}  // namespace bdsim::detail
