#pragma once

#include <vector>

namespace cfx::linalg {

// Ridge solution of (X'X + l2*I) w = X'y for a dense column-major design
// matrix; rows x cols, x[r*cols + c]. Throws Error on a singular system
// (remedy: positive l2).
std::vector<double> ridge_solve(const std::vector<double>& x, std::size_t rows,
                                std::size_t cols, const std::vector<double>& y,
                                double l2);

}  // namespace cfx::linalg
