#include "netpulse/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "netpulse/rng.hpp"

namespace netpulse {

namespace {

struct TreeBuilder {
    const Matrix& x;
    const std::vector<int>& labels;
    const ForestConfig& cfg;
    int mtry;
    Rng rng;
    std::vector<std::uint32_t> idx; // bootstrap sample, partitioned in place
    std::vector<std::uint32_t> feats;
    std::vector<TreeEnsemble::Node> nodes;
    std::vector<std::pair<double, int>> scratch;

    TreeBuilder(const Matrix& x_, const std::vector<int>& labels_, const ForestConfig& cfg_,
                int mtry_, std::uint64_t tree_seed)
        : x(x_), labels(labels_), cfg(cfg_), mtry(mtry_), rng(tree_seed) {
        feats.resize(x.n_cols);
        for (std::size_t f = 0; f < x.n_cols; ++f) feats[f] = static_cast<std::uint32_t>(f);
    }

    // grows one node over idx[lo,hi); returns its index in nodes
    std::int32_t grow(std::size_t lo, std::size_t hi, int depth) {
        const std::size_t m = hi - lo;
        std::size_t n1 = 0;
        for (std::size_t i = lo; i < hi; ++i) n1 += static_cast<std::size_t>(labels[idx[i]]);
        const double frac = static_cast<double>(n1) / static_cast<double>(m);

        const bool pure = (n1 == 0 || n1 == m);
        const bool too_small = m < 2 * static_cast<std::size_t>(cfg.min_leaf);
        const bool too_deep = cfg.max_depth > 0 && depth >= cfg.max_depth;
        if (!pure && !too_small && !too_deep) {
            // random feature subset without replacement
            for (int k = 0; k < mtry; ++k) {
                std::size_t j = k + rng.uniform_int(feats.size() - k);
                std::swap(feats[k], feats[j]);
            }
            double best_score = 2.0; // any real split scores <= 1
            std::uint32_t best_f = 0;
            double best_thr = 0.0;
            for (int k = 0; k < mtry; ++k) {
                const std::uint32_t f = feats[k];
                scratch.clear();
                for (std::size_t i = lo; i < hi; ++i)
                    scratch.emplace_back(x.at(idx[i], f), labels[idx[i]]);
                std::sort(scratch.begin(), scratch.end());
                std::size_t c1 = 0;
                for (std::size_t i = 0; i + 1 < m; ++i) {
                    c1 += static_cast<std::size_t>(scratch[i].second);
                    if (scratch[i].first == scratch[i + 1].first) continue;
                    const std::size_t l = i + 1, r = m - l;
                    if (l < static_cast<std::size_t>(cfg.min_leaf) ||
                        r < static_cast<std::size_t>(cfg.min_leaf))
                        continue;
                    const double pl = static_cast<double>(c1) / static_cast<double>(l);
                    const double pr = static_cast<double>(n1 - c1) / static_cast<double>(r);
                    const double gini = (static_cast<double>(l) * 2.0 * pl * (1.0 - pl) +
                                         static_cast<double>(r) * 2.0 * pr * (1.0 - pr)) /
                                        static_cast<double>(m);
                    if (gini < best_score) {
                        best_score = gini;
                        best_f = f;
                        best_thr = 0.5 * (scratch[i].first + scratch[i + 1].first);
                    }
                }
            }
            if (best_score <= 1.0) {
                auto mid = std::stable_partition(
                    idx.begin() + static_cast<std::ptrdiff_t>(lo),
                    idx.begin() + static_cast<std::ptrdiff_t>(hi),
                    [&](std::uint32_t r) { return x.at(r, best_f) <= best_thr; });
                const std::size_t cut = static_cast<std::size_t>(mid - idx.begin());
                const std::int32_t self = static_cast<std::int32_t>(nodes.size());
                nodes.emplace_back();
                nodes[self].feature = static_cast<std::int32_t>(best_f);
                nodes[self].threshold = best_thr;
                nodes[self].value = frac;
                const std::int32_t left = grow(lo, cut, depth + 1);
                nodes[self].left = left;
                nodes[self].right = grow(cut, hi, depth + 1);
                return self;
            }
        }
        const std::int32_t self = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        nodes[self].value = frac;
        return self;
    }
};

double tree_predict(const std::vector<TreeEnsemble::Node>& nodes, const double* x) {
    std::int32_t i = 0;
    while (nodes[i].feature >= 0)
        i = (x[nodes[i].feature] <= nodes[i].threshold) ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
}

// bootstrap draws come first in the tree's RNG stream, so in-bag membership
// can be reproduced without storing it in the model
std::vector<std::uint8_t> in_bag_mask(std::uint64_t tree_seed, std::size_t n) {
    Rng rng(tree_seed);
    std::vector<std::uint8_t> in_bag(n, 0);
    for (std::size_t i = 0; i < n; ++i) in_bag[rng.uniform_int(n)] = 1;
    return in_bag;
}

template <typename Fn>
void run_sharded(int workers, int n_items, Fn fn) {
    if (workers <= 1) {
        for (int i = 0; i < n_items; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (int i = w; i < n_items; i += workers) fn(i);
        });
    for (auto& t : pool) t.join();
}

void put_bytes(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void get_bytes(std::istream& in, void* p, std::size_t n) {
    if (!in.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
        throw std::runtime_error("model file truncated");
}

template <typename T>
void put(std::ostream& out, T v) {
    put_bytes(out, &v, sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v;
    get_bytes(in, &v, sizeof v);
    return v;
}

} // namespace

double TreeEnsemble::predict_row(const double* x) const {
    double sum = 0.0;
    for (const auto& t : trees) sum += tree_predict(t, x);
    return sum / static_cast<double>(trees.size());
}

std::vector<double> TreeEnsemble::predict(const Matrix& m) const {
    if (m.n_cols != n_features) throw std::runtime_error("feature count mismatch");
    std::vector<double> out(m.n_rows);
    for (std::size_t r = 0; r < m.n_rows; ++r) out[r] = predict_row(m.row(r));
    return out;
}

TreeEnsemble train_forest(const Matrix& x, const std::vector<int>& labels,
                          const ForestConfig& cfg) {
    if (x.n_rows == 0 || x.n_rows != labels.size())
        throw std::runtime_error("training matrix/label size mismatch");
    std::size_t n1 = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw std::runtime_error("labels must be 0 or 1");
        n1 += static_cast<std::size_t>(l);
    }
    if (n1 == 0 || n1 == labels.size())
        throw std::runtime_error("training labels contain a single class");

    TreeEnsemble ens;
    ens.config = cfg;
    ens.n_features = x.n_cols;
    ens.trees.resize(static_cast<std::size_t>(cfg.n_trees));
    const int mtry = cfg.mtry > 0
                         ? cfg.mtry
                         : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(x.n_cols))));

    const std::size_t n = x.n_rows;
    run_sharded(cfg.workers, cfg.n_trees, [&](int t) {
        const std::uint64_t ts = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
        TreeBuilder b(x, labels, cfg, mtry, ts);
        b.idx.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            b.idx[i] = static_cast<std::uint32_t>(b.rng.uniform_int(n));
        std::sort(b.idx.begin(), b.idx.end());
        b.grow(0, n, 0);
        ens.trees[static_cast<std::size_t>(t)] = std::move(b.nodes);
    });

    // out-of-bag vote: rows never drawn by a tree are scored by that tree
    std::vector<double> oob_sum(n, 0.0);
    std::vector<std::uint32_t> oob_cnt(n, 0);
    for (int t = 0; t < cfg.n_trees; ++t) {
        const std::uint64_t ts = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
        auto in_bag = in_bag_mask(ts, n);
        for (std::size_t r = 0; r < n; ++r)
            if (!in_bag[r]) {
                oob_sum[r] += tree_predict(ens.trees[static_cast<std::size_t>(t)], x.row(r));
                ++oob_cnt[r];
            }
    }
    std::size_t hits = 0, scored = 0;
    for (std::size_t r = 0; r < n; ++r)
        if (oob_cnt[r] > 0) {
            ++scored;
            const int pred = oob_sum[r] / oob_cnt[r] >= 0.5 ? 1 : 0;
            if (pred == labels[r]) ++hits;
        }
    ens.oob_accuracy = scored ? static_cast<double>(hits) / static_cast<double>(scored) : 0.0;
    return ens;
}

std::vector<double> permutation_importance(const TreeEnsemble& ens, const Matrix& x,
                                           const std::vector<int>& labels) {
    if (x.n_cols != ens.n_features || x.n_rows != labels.size())
        throw std::runtime_error("importance data does not match model");
    const std::size_t n = x.n_rows, nf = x.n_cols;
    std::vector<double> drop(nf, 0.0);
    std::vector<std::uint32_t> oob;
    std::vector<double> row;
    std::vector<double> perm;

    for (std::size_t t = 0; t < ens.trees.size(); ++t) {
        const std::uint64_t ts = derive_seed(ens.config.seed, static_cast<std::uint64_t>(t));
        auto in_bag = in_bag_mask(ts, n);
        oob.clear();
        for (std::size_t r = 0; r < n; ++r)
            if (!in_bag[r]) oob.push_back(static_cast<std::uint32_t>(r));
        if (oob.empty()) continue;
        std::size_t base_hits = 0;
        for (auto r : oob) {
            const int pred = tree_predict(ens.trees[t], x.row(r)) >= 0.5 ? 1 : 0;
            base_hits += pred == labels[r];
        }
        const double base = static_cast<double>(base_hits) / static_cast<double>(oob.size());
        for (std::size_t f = 0; f < nf; ++f) {
            // third stream index keeps permutation draws apart from tree growth
            Rng prng(derive_seed(ens.config.seed, static_cast<std::uint64_t>(t),
                                 1000 + static_cast<std::uint64_t>(f)));
            perm.resize(oob.size());
            for (std::size_t i = 0; i < oob.size(); ++i) perm[i] = x.at(oob[i], f);
            for (std::size_t i = perm.size(); i > 1; --i)
                std::swap(perm[i - 1], perm[prng.uniform_int(i)]);
            std::size_t hits = 0;
            row.resize(nf);
            for (std::size_t i = 0; i < oob.size(); ++i) {
                const double* src = x.row(oob[i]);
                std::copy(src, src + nf, row.begin());
                row[f] = perm[i];
                const int pred = tree_predict(ens.trees[t], row.data()) >= 0.5 ? 1 : 0;
                hits += pred == labels[oob[i]];
            }
            drop[f] += base - static_cast<double>(hits) / static_cast<double>(oob.size());
        }
    }
    double total = 0.0;
    for (auto& d : drop) {
        d /= static_cast<double>(ens.trees.size());
        if (d > 0) total += d;
    }
    std::vector<double> pct(nf, 0.0);
    if (total > 0)
        for (std::size_t f = 0; f < nf; ++f) pct[f] = drop[f] > 0 ? 100.0 * drop[f] / total : 0.0;
    return pct;
}

void TreeEnsemble::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    put_bytes(out, "NPFE", 4);
    put<std::uint32_t>(out, 1); // format version
    put<std::uint64_t>(out, config.seed);
    put<std::int32_t>(out, config.n_trees);
    put<std::int32_t>(out, config.mtry);
    put<std::int32_t>(out, config.min_leaf);
    put<std::int32_t>(out, config.max_depth);
    put<std::uint64_t>(out, n_features);
    put<double>(out, oob_accuracy);
    put<std::uint64_t>(out, trees.size());
    for (const auto& t : trees) {
        put<std::uint64_t>(out, t.size());
        for (const auto& nd : t) {
            put<std::int32_t>(out, nd.feature);
            put<double>(out, nd.threshold);
            put<std::int32_t>(out, nd.left);
            put<std::int32_t>(out, nd.right);
            put<double>(out, nd.value);
        }
    }
    if (!out) throw std::runtime_error("short write to model file: " + path);
}

TreeEnsemble TreeEnsemble::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    char magic[4];
    get_bytes(in, magic, 4);
    if (std::memcmp(magic, "NPFE", 4) != 0)
        throw std::runtime_error("not a model file: " + path);
    const auto version = get<std::uint32_t>(in);
    if (version != 1) throw std::runtime_error("unsupported model version");
    TreeEnsemble ens;
    ens.config.seed = get<std::uint64_t>(in);
    ens.config.n_trees = get<std::int32_t>(in);
    ens.config.mtry = get<std::int32_t>(in);
    ens.config.min_leaf = get<std::int32_t>(in);
    ens.config.max_depth = get<std::int32_t>(in);
    ens.n_features = get<std::uint64_t>(in);
    ens.oob_accuracy = get<double>(in);
    const auto count = get<std::uint64_t>(in);
    ens.trees.resize(count);
    for (auto& t : ens.trees) {
        t.resize(get<std::uint64_t>(in));
        for (auto& nd : t) {
            nd.feature = get<std::int32_t>(in);
            nd.threshold = get<double>(in);
            nd.left = get<std::int32_t>(in);
            nd.right = get<std::int32_t>(in);
            nd.value = get<double>(in);
        }
    }
    return ens;
}

} // namespace netpulse
