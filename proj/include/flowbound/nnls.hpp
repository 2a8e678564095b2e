#pragma once

#include <vector>

namespace flowbound {

// Nonnegative least squares: minimize |A x - b| over x >= 0 by the
// Lawson-Hanson active-set method.  a is row-major with rows x cols entries.
// tol < 0 picks a scale-aware default for the dual feasibility test.
std::vector<double> nnls(const std::vector<double>& a, int rows, int cols,
                         const std::vector<double>& b, double tol = -1.0);

}  // namespace flowbound
