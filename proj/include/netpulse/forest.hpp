#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace netpulse {

// dense row-major feature matrix
struct Matrix {
    std::size_t n_rows = 0, n_cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : n_rows(r), n_cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * n_cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * n_cols; }
};

struct ForestConfig {
    int n_trees = 200;
    int mtry = 0;      // 0 = ceil(sqrt(n_features))
    int min_leaf = 1;
    int max_depth = 0; // 0 = unlimited
    std::uint64_t seed = 1;
    int workers = 1;
};

// Bagged binary decision trees with the Gini split criterion and a random
// feature subset per split. Leaf value is the fraction of positive labels,
// ensemble prediction the mean over trees (always in [0,1]).
class TreeEnsemble {
public:
    struct Node {
        std::int32_t feature = -1; // -1 marks a leaf
        double threshold = 0.0;
        std::int32_t left = -1, right = -1;
        double value = 0.0;
    };

    ForestConfig config;
    std::size_t n_features = 0;
    std::vector<std::vector<Node>> trees;
    double oob_accuracy = 0.0;

    double predict_row(const double* x) const;
    std::vector<double> predict(const Matrix& m) const;

    void save(const std::string& path) const;
    static TreeEnsemble load(const std::string& path);
};

// labels are 0/1; training requires both classes present
TreeEnsemble train_forest(const Matrix& x, const std::vector<int>& labels,
                          const ForestConfig& cfg);

// Out-of-bag permutation importance, normalized to percentages that sum to
// 100 over features with positive accuracy drop.
std::vector<double> permutation_importance(const TreeEnsemble& ens, const Matrix& x,
                                           const std::vector<int>& labels);

} // namespace netpulse
