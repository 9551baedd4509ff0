#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "costgate/dataset.hpp"

namespace costgate {

struct MatrixView {
    const double* data = nullptr;
    std::size_t n = 0;
    std::size_t k = 0;

    std::span<const double> row(std::size_t i) const { return {data + i * k, k}; }
    double at(std::size_t i, std::size_t j) const { return data[i * k + j]; }

    static MatrixView of(const Dataset& ds) { return {ds.features.data(), ds.n, ds.k}; }
};

struct TreeNode {
    bool is_leaf = true;
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // preorder, root first
    int max_depth = 0;

    double predict(std::span<const double> x) const;
    std::vector<std::size_t> used_features() const;
    bool is_stump_leaf() const { return nodes.size() == 1; }
};

struct TreeEnsemble {
    std::vector<RegressionTree> trees;
    double shrinkage = 1.0;
    double base_score = 0.0;

    double predict(std::span<const double> x) const;
    void scores(const MatrixView& x, std::vector<double>& out) const;
    std::vector<std::size_t> used_features() const;

    static TreeEnsemble empty(double shrink) { return {{}, shrink, 0.0}; }
};

// u_alpha = 1 while feature alpha has not been acquired by any earlier tree.
// Entries only ever transition 1 -> 0.
struct FeatureUsage {
    std::vector<std::uint8_t> u;

    static FeatureUsage fresh(std::size_t k) { return {std::vector<std::uint8_t>(k, 1)}; }
    void consume(const RegressionTree& t) {
        for (std::size_t a : t.used_features()) u[a] = 0;
    }
};

// Greedy least-squares CART where each candidate split pays
// gamma * c_alpha once per tree for a feature that is still unacquired
// (usage.u == 1 and not already split on in this tree).  Splits whose
// error reduction does not beat the charge become leaves.  Gain ties break
// toward the lower feature index, then the lower threshold.
RegressionTree fit_cart(const MatrixView& x, std::span<const double> targets, int depth,
                        double gamma, std::span<const double> costs,
                        const FeatureUsage& usage);

// Cost-blind gradient boosting on logistic loss (used for reference models).
TreeEnsemble train_gbrt(const Dataset& ds, int t, int depth, double shrinkage);

// Cost-aware boosting: every tree is grown with the acquisition charge
// lambda and the usage vector is consumed after each round.
TreeEnsemble greedy_miser(const Dataset& ds, int t, int depth, double shrinkage,
                          double lambda);

}  // namespace costgate
