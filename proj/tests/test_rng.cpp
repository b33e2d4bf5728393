#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "netpulse/rng.hpp"

using namespace netpulse;

TEST_CASE("splitmix64 matches the published reference sequence") {
    // Vigna's reference implementation, seed 0
    std::uint64_t s = 0;
    CHECK(splitmix64(s) == 0xe220a8397b1dcdafULL);
    CHECK(splitmix64(s) == 0x6e789e6aa1b965f4ULL);
    CHECK(splitmix64(s) == 0x06c45d188009454fULL);

    s = 1234567;
    CHECK(splitmix64(s) == 0x599ed017fb08fc85ULL);
    CHECK(splitmix64(s) == 0x2c73f08458540fa5ULL);
    CHECK(splitmix64(s) == 0x883ebce5a3f27c77ULL);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("hello", 5) == 0xa430d84680aabd0bULL);
}

TEST_CASE("derive_seed separates streams") {
    const std::uint64_t base = 42;
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 64; ++a) {
        seen.insert(derive_seed(base, a));
        for (std::uint64_t b = 0; b < 8; ++b) seen.insert(derive_seed(base, a, b));
    }
    // 64 one-level + 512 two-level children, all distinct
    CHECK(seen.size() == 64u + 512u);
    CHECK(derive_seed(base, 3) == derive_seed(base, 3));
    CHECK(derive_seed(base, 3, 0) != derive_seed(base, 3));
}

TEST_CASE("Rng is reproducible per seed") {
    Rng a(99), b(99), c(100);
    std::vector<std::uint64_t> va, vb;
    for (int i = 0; i < 100; ++i) {
        va.push_back(a.next_u64());
        vb.push_back(b.next_u64());
    }
    CHECK(va == vb);
    CHECK(c.next_u64() != va[0]);
}

TEST_CASE("uniform stays in [0,1) and fills the range") {
    Rng rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 20000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform(lo,hi) respects bounds") {
    Rng rng(8);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform(-3.0, 5.0);
        CHECK(u >= -3.0);
        CHECK(u < 5.0);
    }
}

TEST_CASE("uniform_int is unbiased across a small modulus") {
    Rng rng(21);
    const std::uint64_t n = 7;
    std::vector<int> counts(n, 0);
    const int draws = 70000;
    for (int i = 0; i < draws; ++i) ++counts[rng.uniform_int(n)];
    for (std::uint64_t k = 0; k < n; ++k) {
        CHECK(counts[k] > draws / static_cast<int>(n) - 600);
        CHECK(counts[k] < draws / static_cast<int>(n) + 600);
    }
    CHECK(rng.uniform_int(0) == 0);
    CHECK(rng.uniform_int(1) == 0);
}

TEST_CASE("normal has the right first two moments") {
    Rng rng(5);
    const int n = 200000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("normal(mean, sd) is an affine map of normal()") {
    Rng a(31), b(31);
    for (int i = 0; i < 50; ++i) {
        const double z = a.normal();
        CHECK(b.normal(2.0, 3.0) == doctest::Approx(2.0 + 3.0 * z).epsilon(1e-12));
    }
}
