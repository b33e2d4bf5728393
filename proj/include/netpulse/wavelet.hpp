#pragma once

#include <cstddef>
#include <vector>

namespace netpulse {

// Orthogonal wavelet filter bank. rec_lo is the scaling filter h with
// sum(h) = sqrt(2); the other three filters are derived from it.
struct WaveletFilter {
    std::vector<double> rec_lo, rec_hi, dec_lo, dec_hi;
    std::size_t length() const { return rec_lo.size(); }
};

// Least-asymmetric (Symlet) families used by the pipeline.
const WaveletFilter& sym3();
const WaveletFilter& sym8();

// Single-level DWT with symmetric (half-point) boundary extension.
// Output length for each band is floor((n + L - 1) / 2).
struct DwtResult {
    std::vector<double> approx;
    std::vector<double> detail;
};
DwtResult dwt(const std::vector<double>& x, const WaveletFilter& f);

// Inverse of dwt(); target_len restores the original signal length
// (2 * len(approx) - L + 2 or one less).
std::vector<double> idwt(const std::vector<double>& approx, const std::vector<double>& detail,
                         const WaveletFilter& f, std::size_t target_len);

// Approximation coefficients after `level` cascaded decompositions.
std::vector<double> wavedec_approx(const std::vector<double>& x, const WaveletFilter& f,
                                   int level);

// One-level wavelet shrinkage: soft-threshold the detail band at the
// universal threshold sigma * sqrt(2 ln n), sigma = MAD / 0.6745.
std::vector<double> denoise_level1(const std::vector<double>& x, const WaveletFilter& f);

} // namespace netpulse
