#pragma once

#include <span>

namespace cfgen {

// Kendall tau-b with tie correction, O(n log n). Throws std::invalid_argument
// on a length mismatch or fewer than 2 items, MetricError when either side is
// constant (tau undefined).
double kendall_tau(std::span<const double> a, std::span<const double> b);

}  // namespace cfgen
