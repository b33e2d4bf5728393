#pragma once

#include <vector>

namespace netpulse {

// Penalized least squares smoother with a discrete second-difference penalty:
// minimize sum_i w_i (z_i - y_i)^2 + lambda * sum_i (z_{i-1} - 2 z_i + z_{i+1})^2.
// The normal equations (W + lambda D'D) z = W y form a pentadiagonal SPD
// system solved by banded Cholesky. Zero-weight points are interpolated by
// the penalty alone, which is how short gaps are filled.
std::vector<double> smooth_weighted(const std::vector<double>& y,
                                    const std::vector<double>& w, double lambda);

std::vector<double> smooth(const std::vector<double>& y, double lambda);

// Robust variant: iteratively reweighted least squares with bisquare weights
// on the residuals, guarding the fit against isolated outlier traces.
std::vector<double> smooth_robust(const std::vector<double>& y, double lambda,
                                  int iterations = 5);

} // namespace netpulse
