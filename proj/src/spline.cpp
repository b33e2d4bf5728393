#include "netpulse/spline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netpulse {

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("spline: need >= 2 matching knots");
    for (std::size_t i = 1; i < n; ++i)
        if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("spline: knots must increase");

    // tridiagonal system for interior second derivatives, natural ends
    m_.assign(n, 0.0);
    if (n == 2) return;
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double hl = x_[i] - x_[i - 1];
        const double hr = x_[i + 1] - x_[i];
        diag[i] = 2.0 * (hl + hr);
        upper[i] = hr;
        rhs[i] = 6.0 * ((y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl);
    }
    // Thomas algorithm over indices 1..n-2 (lower diagonal equals previous hr's hl)
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double hl = x_[i] - x_[i - 1];
        const double w = hl / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
        if (i == 1) break;
    }
}

std::size_t CubicSpline::interval(double x) const {
    // clamp to the knot range; index of left knot
    if (x <= x_.front()) return 0;
    if (x >= x_.back()) return x_.size() - 2;
    std::size_t i =
        static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
    return i - 1;
}

double CubicSpline::operator()(double x) const {
    const std::size_t i = interval(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return a * y_[i] + b * y_[i + 1] +
           ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

double CubicSpline::derivative(double x) const {
    const std::size_t i = interval(x);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return (y_[i + 1] - y_[i]) / h +
           h / 6.0 * ((3.0 * b * b - 1.0) * m_[i + 1] - (3.0 * a * a - 1.0) * m_[i]);
}

double CubicSpline::extremum(bool want_max) const {
    double best_x = x_.front();
    double best_v = (*this)(best_x);
    auto consider = [&](double xc) {
        const double v = (*this)(xc);
        const bool better = want_max ? v > best_v : v < best_v;
        if (better) {
            best_v = v;
            best_x = xc;
        } else if (v == best_v && xc < best_x) {
            best_x = xc;
        }
    };
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
        consider(x_[i + 1]);
        // critical points: derivative is quadratic in x on each interval
        const double h = x_[i + 1] - x_[i];
        // s(x) = a*y0 + b*y1 + ((a^3-a) m0 + (b^3-b) m1) h^2/6, b = (x-x0)/h
        // s'(b) = (y1-y0)/h + h/6 ((3b^2-1) m1 - (3(1-b)^2-1) m0)
        // quadratic in b: A b^2 + B b + C with
        const double A = 0.5 * h * (m_[i + 1] - m_[i]);
        const double B = h * m_[i];
        const double C = (y_[i + 1] - y_[i]) / h - h / 6.0 * (m_[i + 1] + 2.0 * m_[i]);
        auto check_root = [&](double b) {
            if (b > 0.0 && b < 1.0) consider(x_[i] + b * h);
        };
        if (std::fabs(A) < 1e-300) {
            if (std::fabs(B) > 1e-300) check_root(-C / B);
        } else {
            const double disc = B * B - 4.0 * A * C;
            if (disc >= 0.0) {
                const double sq = std::sqrt(disc);
                check_root((-B + sq) / (2.0 * A));
                check_root((-B - sq) / (2.0 * A));
            }
        }
    }
    return best_x;
}

double CubicSpline::argmin() const { return extremum(false); }
double CubicSpline::argmax() const { return extremum(true); }

} // namespace netpulse
