#include "netpulse/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace netpulse {

namespace {

// Scaling filters from the orthonormal least-asymmetric construction
// (spectral factorization of the Daubechies half-band polynomial, root set
// chosen to minimize phase nonlinearity). sum = sqrt(2), energy = 1.
constexpr double kSym3RecLo[6] = {
    0.33267055295008262, 0.80689150931109258,  0.45987750211849157,
    -0.13501102001025459, -0.085441273882026662, 0.035226291885709537,
};

constexpr double kSym8RecLo[16] = {
    -0.0033824159510050026, -0.00054213233180001069, 0.031695087811525991,
    0.0076074873249766082,  -0.14329423835127266,    -0.061273359067811078,
    0.48135965125905339,    0.77718575169962803,     0.36444189483617894,
    -0.051945838107881801,  -0.027219029917103486,   0.049137179673730287,
    0.0038087520138944895,  -0.014952258337062199,   -0.00030292051472413308,
    0.0018899503327676892,
};

WaveletFilter make_filter(const double* h, std::size_t len) {
    WaveletFilter f;
    f.rec_lo.assign(h, h + len);
    f.dec_lo.resize(len);
    f.rec_hi.resize(len);
    f.dec_hi.resize(len);
    for (std::size_t n = 0; n < len; ++n) {
        f.dec_lo[n] = f.rec_lo[len - 1 - n];
        f.rec_hi[n] = (n % 2 ? -1.0 : 1.0) * f.dec_lo[n];
    }
    for (std::size_t n = 0; n < len; ++n) f.dec_hi[n] = f.rec_hi[len - 1 - n];
    return f;
}

// half-point symmetric fold of an arbitrary index into [0, n)
std::size_t fold_index(long long j, std::size_t n) {
    const long long sn = static_cast<long long>(n);
    while (j < 0 || j >= sn) {
        if (j < 0) j = -j - 1;
        if (j >= sn) j = 2 * sn - 1 - j;
    }
    return static_cast<std::size_t>(j);
}

} // namespace

const WaveletFilter& sym3() {
    static const WaveletFilter f = make_filter(kSym3RecLo, 6);
    return f;
}

const WaveletFilter& sym8() {
    static const WaveletFilter f = make_filter(kSym8RecLo, 16);
    return f;
}

DwtResult dwt(const std::vector<double>& x, const WaveletFilter& f) {
    const std::size_t n = x.size();
    const std::size_t L = f.length();
    if (n < 2) throw std::invalid_argument("dwt: signal too short");
    const std::size_t K = (n + L - 1) / 2;
    DwtResult r;
    r.approx.resize(K);
    r.detail.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t j = 0; j < L; ++j) {
            const double v = x[fold_index(2 * static_cast<long long>(k) + 1 -
                                              static_cast<long long>(j),
                                          n)];
            a += f.dec_lo[j] * v;
            d += f.dec_hi[j] * v;
        }
        r.approx[k] = a;
        r.detail[k] = d;
    }
    return r;
}

std::vector<double> idwt(const std::vector<double>& approx, const std::vector<double>& detail,
                         const WaveletFilter& f, std::size_t target_len) {
    if (approx.size() != detail.size())
        throw std::invalid_argument("idwt: band length mismatch");
    const long long K = static_cast<long long>(approx.size());
    const long long L = static_cast<long long>(f.length());
    const long long full = 2 * K - L + 2;
    if (static_cast<long long>(target_len) > full)
        throw std::invalid_argument("idwt: target length exceeds reconstruction support");
    std::vector<double> out(target_len, 0.0);
    for (long long t = 0; t < static_cast<long long>(target_len); ++t) {
        // k range: t - 2k + L - 2 in [0, L-1]  =>  k in [ceil((t-1)/2), floor((t+L-2)/2)]
        const long long lo = t / 2;
        const long long hi = std::min(K - 1, (t + L - 2) / 2);
        double acc = 0.0;
        for (long long k = lo; k <= hi; ++k) {
            const long long j = t - 2 * k + L - 2;
            acc += approx[static_cast<std::size_t>(k)] * f.rec_lo[static_cast<std::size_t>(j)] +
                   detail[static_cast<std::size_t>(k)] * f.rec_hi[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(t)] = acc;
    }
    return out;
}

std::vector<double> wavedec_approx(const std::vector<double>& x, const WaveletFilter& f,
                                   int level) {
    if (level < 1) throw std::invalid_argument("wavedec: level must be >= 1");
    std::vector<double> cur = x;
    for (int l = 0; l < level; ++l) cur = dwt(cur, f).approx;
    return cur;
}

std::vector<double> denoise_level1(const std::vector<double>& x, const WaveletFilter& f) {
    DwtResult bands = dwt(x, f);
    std::vector<double> mags(bands.detail.size());
    for (std::size_t i = 0; i < mags.size(); ++i) mags[i] = std::fabs(bands.detail[i]);
    std::size_t mid = mags.size() / 2;
    std::nth_element(mags.begin(), mags.begin() + mid, mags.end());
    double med = mags[mid];
    if (mags.size() % 2 == 0) {
        double lo = *std::max_element(mags.begin(), mags.begin() + mid);
        med = 0.5 * (lo + med);
    }
    const double sigma = med / 0.6745;
    const double thresh = sigma * std::sqrt(2.0 * std::log(static_cast<double>(x.size())));
    for (double& d : bands.detail) {
        if (d > thresh)
            d -= thresh;
        else if (d < -thresh)
            d += thresh;
        else
            d = 0.0;
    }
    return idwt(bands.approx, bands.detail, f, x.size());
}

} // namespace netpulse
