#pragma once

#include <cstddef>
#include <vector>

namespace netpulse {

// Interpolating natural cubic spline (second derivative zero at both ends).
// Knots must be strictly increasing.
class CubicSpline {
public:
    CubicSpline(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    double derivative(double x) const;

    double x_front() const { return x_.front(); }
    double x_back() const { return x_.back(); }

    // continuous argmin / argmax over the full knot range, found per interval
    // from the cubic's critical points; ties resolve to the smaller x
    double argmin() const;
    double argmax() const;

private:
    std::size_t interval(double x) const;
    double extremum(bool want_max) const;

    std::vector<double> x_, y_, m_; // m_ = second derivatives at knots
};

} // namespace netpulse
