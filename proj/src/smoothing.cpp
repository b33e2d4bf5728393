#include "netpulse/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netpulse {

// Solve A z = b for symmetric positive definite A with bandwidth 2, stored by
// diagonals: d0[i] = A[i][i], d1[i] = A[i][i+1], d2[i] = A[i][i+2].
// In-place banded Cholesky (LDL'), then forward/back substitution.
static std::vector<double> solve_penta(std::vector<double> d0, std::vector<double> d1,
                                       std::vector<double> d2, std::vector<double> b) {
    const std::size_t n = d0.size();
    // factorization: L has unit diagonal, subdiagonals l1, l2; D = diag(d)
    std::vector<double> l1(n, 0.0), l2(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double di = d0[i];
        if (i >= 1) di -= l1[i - 1] * l1[i - 1] * d0[i - 1];
        if (i >= 2) di -= l2[i - 2] * l2[i - 2] * d0[i - 2];
        d0[i] = di;
        if (di <= 0.0) throw std::runtime_error("smoother system not positive definite");
        if (i + 1 < n) {
            double e = d1[i];
            if (i >= 1) e -= l1[i - 1] * d0[i - 1] * l2[i - 1];
            l1[i] = e / d0[i];
        }
        if (i + 2 < n) l2[i] = d2[i] / d0[i];
    }
    // L v = b
    for (std::size_t i = 0; i < n; ++i) {
        if (i >= 1) b[i] -= l1[i - 1] * b[i - 1];
        if (i >= 2) b[i] -= l2[i - 2] * b[i - 2];
    }
    // D w = v
    for (std::size_t i = 0; i < n; ++i) b[i] /= d0[i];
    // L' z = w
    for (std::size_t ii = n; ii-- > 0;) {
        if (ii + 1 < n) b[ii] -= l1[ii] * b[ii + 1];
        if (ii + 2 < n) b[ii] -= l2[ii] * b[ii + 2];
    }
    return b;
}

std::vector<double> smooth_weighted(const std::vector<double>& y,
                                    const std::vector<double>& w, double lambda) {
    const std::size_t n = y.size();
    if (w.size() != n) throw std::invalid_argument("smoother: weight length mismatch");
    if (lambda < 0.0) throw std::invalid_argument("smoother: negative lambda");
    if (n < 3) return y;
    double wsum = 0.0;
    for (double x : w) {
        if (x < 0.0) throw std::invalid_argument("smoother: negative weight");
        wsum += x;
    }
    if (wsum <= 0.0) throw std::invalid_argument("smoother: all weights zero");

    // assemble W + lambda D'D; D is the (n-2) x n second-difference operator
    std::vector<double> d0(n, 0.0), d1(n, 0.0), d2(n, 0.0), b(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        d0[i] = w[i];
        b[i] = w[i] * y[i];
    }
    for (std::size_t r = 0; r + 2 < n; ++r) {
        // row r of D: [1, -2, 1] at columns r, r+1, r+2
        d0[r] += lambda;
        d0[r + 1] += 4.0 * lambda;
        d0[r + 2] += lambda;
        d1[r] += -2.0 * lambda;
        d1[r + 1] += -2.0 * lambda;
        d2[r] += lambda;
    }
    return solve_penta(std::move(d0), std::move(d1), std::move(d2), std::move(b));
}

std::vector<double> smooth(const std::vector<double>& y, double lambda) {
    return smooth_weighted(y, std::vector<double>(y.size(), 1.0), lambda);
}

static double median_abs(std::vector<double> v) {
    for (double& x : v) x = std::fabs(x);
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 0) {
        double lo = *std::max_element(v.begin(), v.begin() + mid);
        return 0.5 * (lo + hi);
    }
    return hi;
}

std::vector<double> smooth_robust(const std::vector<double>& y, double lambda, int iterations) {
    const std::size_t n = y.size();
    std::vector<double> w(n, 1.0);
    std::vector<double> z = smooth_weighted(y, w, lambda);
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = y[i] - z[i];
        double sigma = 1.4826 * median_abs(r);
        if (sigma <= 1e-300) break; // interpolating fit, nothing to reweight
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            double u = r[i] / (4.685 * sigma);
            double wi = std::fabs(u) < 1.0 ? (1.0 - u * u) * (1.0 - u * u) : 0.0;
            if (std::fabs(wi - w[i]) > 1e-12) changed = true;
            w[i] = wi;
        }
        if (!changed) break;
        z = smooth_weighted(y, w, lambda);
    }
    return z;
}

} // namespace netpulse
