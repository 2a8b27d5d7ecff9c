#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bdsim {

/// Hungarian method, O(n^3). `cost` is row-major n x n; returns the column
/// assigned to each row.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

}  // namespace bdsim
