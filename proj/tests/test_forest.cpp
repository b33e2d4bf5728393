#include <doctest.h>

#include <cstdio>
#include <stdexcept>
#include <vector>

#include "netpulse/forest.hpp"
#include "netpulse/rng.hpp"

using namespace netpulse;

namespace {

// two well-separated blobs in feature 0, three noise features
void blobs(Matrix& x, std::vector<int>& y, int n_per_class, std::uint64_t seed) {
    const std::size_t n = 2 * static_cast<std::size_t>(n_per_class);
    x = Matrix(n, 4);
    y.assign(n, 0);
    Rng rng(seed);
    for (std::size_t r = 0; r < n; ++r) {
        const int label = r % 2 == 0 ? 0 : 1;
        y[r] = label;
        x.at(r, 0) = (label == 0 ? -2.0 : 2.0) + 0.3 * rng.normal();
        for (std::size_t f = 1; f < 4; ++f) x.at(r, f) = rng.normal();
    }
}

bool same_trees(const TreeEnsemble& a, const TreeEnsemble& b) {
    if (a.trees.size() != b.trees.size()) return false;
    for (std::size_t t = 0; t < a.trees.size(); ++t) {
        if (a.trees[t].size() != b.trees[t].size()) return false;
        for (std::size_t i = 0; i < a.trees[t].size(); ++i) {
            const auto& p = a.trees[t][i];
            const auto& q = b.trees[t][i];
            if (p.feature != q.feature || p.threshold != q.threshold || p.left != q.left ||
                p.right != q.right || p.value != q.value)
                return false;
        }
    }
    return true;
}

} // namespace

TEST_CASE("separable blobs are classified perfectly") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 100, 5);
    ForestConfig cfg;
    cfg.n_trees = 100;
    cfg.seed = 9;
    const TreeEnsemble ens = train_forest(x, y, cfg);

    CHECK(ens.oob_accuracy >= 0.98);
    const auto p = ens.predict(x);
    REQUIRE(p.size() == y.size());
    for (std::size_t r = 0; r < y.size(); ++r) {
        CHECK(p[r] >= 0.0);
        CHECK(p[r] <= 1.0);
        CHECK((p[r] >= 0.5 ? 1 : 0) == y[r]);
    }
}

TEST_CASE("noise features cannot beat coin-flip accuracy") {
    const std::size_t n = 400;
    Matrix x(n, 3);
    std::vector<int> y(n);
    Rng rng(77);
    for (std::size_t r = 0; r < n; ++r) {
        y[r] = rng.uniform() < 0.5 ? 1 : 0;
        for (std::size_t f = 0; f < 3; ++f) x.at(r, f) = rng.normal();
    }
    ForestConfig cfg;
    cfg.n_trees = 60;
    cfg.seed = 3;
    const TreeEnsemble ens = train_forest(x, y, cfg);
    // labels are independent of the features: nothing real to learn
    CHECK(ens.oob_accuracy > 0.3);
    CHECK(ens.oob_accuracy < 0.7);
}

TEST_CASE("training is reproducible per seed") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 60, 11);
    ForestConfig cfg;
    cfg.n_trees = 40;
    cfg.seed = 123;
    const TreeEnsemble a = train_forest(x, y, cfg);
    const TreeEnsemble b = train_forest(x, y, cfg);
    CHECK(same_trees(a, b));
    CHECK(a.oob_accuracy == b.oob_accuracy);

    cfg.seed = 124;
    const TreeEnsemble c = train_forest(x, y, cfg);
    CHECK_FALSE(same_trees(a, c));
}

TEST_CASE("worker count does not change the model") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 80, 19);
    ForestConfig cfg;
    cfg.n_trees = 50;
    cfg.seed = 31;
    cfg.workers = 1;
    const TreeEnsemble a = train_forest(x, y, cfg);
    cfg.workers = 4;
    const TreeEnsemble b = train_forest(x, y, cfg);
    cfg.workers = 7;
    const TreeEnsemble c = train_forest(x, y, cfg);
    CHECK(same_trees(a, b));
    CHECK(same_trees(a, c));
    CHECK(a.oob_accuracy == b.oob_accuracy);
    CHECK(a.oob_accuracy == c.oob_accuracy);
}

TEST_CASE("model save / load round trip") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 50, 23);
    ForestConfig cfg;
    cfg.n_trees = 25;
    cfg.seed = 8;
    const TreeEnsemble ens = train_forest(x, y, cfg);

    const std::string path = "forest_test_model.tmp";
    ens.save(path);
    const TreeEnsemble back = TreeEnsemble::load(path);
    CHECK(back.n_features == ens.n_features);
    CHECK(back.config.seed == ens.config.seed);
    CHECK(back.config.n_trees == ens.config.n_trees);
    CHECK(back.oob_accuracy == ens.oob_accuracy);
    CHECK(same_trees(ens, back));
    const auto pa = ens.predict(x);
    const auto pb = back.predict(x);
    for (std::size_t r = 0; r < pa.size(); ++r) CHECK(pa[r] == pb[r]);
    std::remove(path.c_str());
}

TEST_CASE("corrupt model files are rejected") {
    const std::string path = "forest_test_bad.tmp";

    FILE* f = std::fopen(path.c_str(), "wb");
    std::fputs("NPFE", f); // magic only, then EOF
    std::fclose(f);
    CHECK_THROWS_WITH_AS((void)TreeEnsemble::load(path), "model file truncated",
                         std::runtime_error);

    f = std::fopen(path.c_str(), "wb");
    std::fputs("JUNKJUNKJUNKJUNK", f);
    std::fclose(f);
    CHECK_THROWS_AS((void)TreeEnsemble::load(path), std::runtime_error);
    std::remove(path.c_str());

    CHECK_THROWS_AS((void)TreeEnsemble::load("no/such/model.bin"), std::runtime_error);
}

TEST_CASE("training input validation") {
    Matrix x(4, 2);
    std::vector<int> y = {0, 1, 0, 1};
    ForestConfig cfg;
    cfg.n_trees = 3;

    std::vector<int> short_y = {0, 1};
    CHECK_THROWS_AS((void)train_forest(x, short_y, cfg), std::runtime_error);
    std::vector<int> bad = {0, 1, 2, 1};
    CHECK_THROWS_AS((void)train_forest(x, bad, cfg), std::runtime_error);
    std::vector<int> ones = {1, 1, 1, 1};
    CHECK_THROWS_AS((void)train_forest(x, ones, cfg), std::runtime_error);
    CHECK_THROWS_AS((void)train_forest(Matrix(), {}, cfg), std::runtime_error);

    const TreeEnsemble ens = train_forest(x, y, cfg);
    CHECK_THROWS_AS((void)ens.predict(Matrix(2, 5)), std::runtime_error);
}

TEST_CASE("permutation importance singles out the informative feature") {
    const std::size_t n = 300;
    Matrix x(n, 4);
    std::vector<int> y(n);
    Rng rng(15);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t f = 0; f < 4; ++f) x.at(r, f) = rng.normal();
        y[r] = x.at(r, 2) > 0.0 ? 1 : 0; // only feature 2 matters
    }
    ForestConfig cfg;
    cfg.n_trees = 80;
    cfg.seed = 41;
    const TreeEnsemble ens = train_forest(x, y, cfg);
    const auto imp = permutation_importance(ens, x, y);

    REQUIRE(imp.size() == 4);
    double total = 0.0;
    for (double v : imp) {
        CHECK(v >= 0.0);
        total += v;
    }
    CHECK(total == doctest::Approx(100.0).epsilon(1e-9));
    CHECK(imp[2] > 60.0);
    for (std::size_t f : {0u, 1u, 3u}) CHECK(imp[f] < imp[2]);

    Matrix wrong(n, 3);
    CHECK_THROWS_AS((void)permutation_importance(ens, wrong, y), std::runtime_error);
}

TEST_CASE("importance is reproducible and worker-invariant") {
    Matrix x;
    std::vector<int> y;
    blobs(x, y, 60, 29);
    ForestConfig cfg;
    cfg.n_trees = 30;
    cfg.seed = 2;
    cfg.workers = 1;
    const TreeEnsemble a = train_forest(x, y, cfg);
    cfg.workers = 5;
    const TreeEnsemble b = train_forest(x, y, cfg);
    const auto ia = permutation_importance(a, x, y);
    const auto ib = permutation_importance(b, x, y);
    REQUIRE(ia.size() == ib.size());
    for (std::size_t f = 0; f < ia.size(); ++f) CHECK(ia[f] == ib[f]);
}
