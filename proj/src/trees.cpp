#include "costgate/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "costgate/common.hpp"
#include "costgate/kernels.hpp"

namespace costgate {

namespace k = kernels;

double RegressionTree::predict(std::span<const double> x) const {
    int idx = 0;
    while (!nodes[idx].is_leaf) {
        const TreeNode& nd = nodes[idx];
        idx = x[nd.feature] <= nd.threshold ? nd.left : nd.right;
    }
    return nodes[idx].value;
}

std::vector<std::size_t> RegressionTree::used_features() const {
    std::vector<bool> seen;
    for (const TreeNode& nd : nodes)
        if (!nd.is_leaf) {
            if (seen.size() <= static_cast<std::size_t>(nd.feature))
                seen.resize(nd.feature + 1, false);
            seen[nd.feature] = true;
        }
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < seen.size(); ++a)
        if (seen[a]) out.push_back(a);
    return out;
}

double TreeEnsemble::predict(std::span<const double> x) const {
    double s = 0.0;
    for (const RegressionTree& t : trees) s += t.predict(x);
    return base_score + shrinkage * s;
}

void TreeEnsemble::scores(const MatrixView& x, std::vector<double>& out) const {
    out.resize(x.n);
    for (std::size_t i = 0; i < x.n; ++i) out[i] = predict(x.row(i));
}

std::vector<std::size_t> TreeEnsemble::used_features() const {
    std::vector<bool> seen;
    for (const RegressionTree& t : trees)
        for (std::size_t a : t.used_features()) {
            if (seen.size() <= a) seen.resize(a + 1, false);
            seen[a] = true;
        }
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < seen.size(); ++a)
        if (seen[a]) out.push_back(a);
    return out;
}

// ===========================================================================
// CART
// ===========================================================================

namespace {

// accept floor well above the fp noise of the prefix-sum gain formula
constexpr double kMinGain = 1e-9;

struct CartBuilder {
    const MatrixView& x;
    std::span<const double> targets;
    int max_depth;
    double gamma;
    std::span<const double> costs;
    const FeatureUsage& usage;

    std::vector<TreeNode> nodes;
    std::vector<std::uint8_t> used_in_tree;  // features split on so far (DFS order)

    struct Best {
        double gain = kMinGain;
        int feature = -1;
        double threshold = 0.0;
    };

    int build(std::vector<std::size_t>& rows, int level) {
        const std::size_t n = rows.size();
        double sum = 0.0;
        for (std::size_t r : rows) sum += targets[r];
        const double mean = sum / static_cast<double>(n);

        const int self = static_cast<int>(nodes.size());
        nodes.push_back({});
        nodes[self].value = mean;
        if (level >= max_depth || n < 2) return self;

        Best best = find_split(rows, sum);
        if (best.feature < 0) return self;

        used_in_tree[best.feature] = 1;
        std::vector<std::size_t> left_rows, right_rows;
        left_rows.reserve(n);
        right_rows.reserve(n);
        for (std::size_t r : rows)
            (x.at(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        nodes[self].is_leaf = false;
        nodes[self].feature = best.feature;
        nodes[self].threshold = best.threshold;
        const int l = build(left_rows, level + 1);
        nodes[self].left = l;
        const int r = build(right_rows, level + 1);
        nodes[self].right = r;
        return self;
    }

    Best find_split(const std::vector<std::size_t>& rows, double total_sum) {
        const std::size_t n = rows.size();
        Best best;
        // Mathematically tied gains (e.g. two features isolating the same
        // row) must resolve identically however the arithmetic rounds, so a
        // candidate only displaces the incumbent when it wins by a margin;
        // the ascending (feature, threshold) scan then keeps the lowest.
        double parent_sse = -total_sum * total_sum / static_cast<double>(n);
        for (std::size_t r : rows) parent_sse += targets[r] * targets[r];
        const double tie_eps = 1e-9 * (1.0 + std::fabs(parent_sse));

        std::vector<std::pair<double, double>> vals(n);  // (feature value, target)
        for (int a = 0; a < static_cast<int>(x.k); ++a) {
            for (std::size_t j = 0; j < n; ++j)
                vals[j] = {x.at(rows[j], a), targets[rows[j]]};
            std::sort(vals.begin(), vals.end(),
                      [](const auto& p, const auto& q) { return p.first < q.first; });

            const double charge =
                (usage.u[a] != 0 && used_in_tree[a] == 0) ? gamma * costs[a] : 0.0;

            double left_sum = 0.0;
            for (std::size_t j = 0; j + 1 < n; ++j) {
                left_sum += vals[j].second;
                if (vals[j].first == vals[j + 1].first) continue;
                const double nl = static_cast<double>(j + 1);
                const double nr = static_cast<double>(n - j - 1);
                const double right_sum = total_sum - left_sum;
                const double reduction = left_sum * left_sum / nl +
                                         right_sum * right_sum / nr -
                                         total_sum * total_sum / static_cast<double>(n);
                const double gain = reduction - charge;
                if (gain > best.gain + tie_eps) {
                    best.gain = gain;
                    best.feature = a;
                    best.threshold = 0.5 * (vals[j].first + vals[j + 1].first);
                }
            }
        }
        return best;
    }
};

}  // namespace

RegressionTree fit_cart(const MatrixView& x, std::span<const double> targets, int depth,
                        double gamma, std::span<const double> costs,
                        const FeatureUsage& usage) {
    require(depth >= 1, "fit_cart: depth must be >= 1");
    require(targets.size() == x.n, "fit_cart: target length mismatch");
    require(usage.u.size() == x.k && costs.size() == x.k,
            "fit_cart: usage/cost length mismatch");
    for (double t : targets)
        require(std::isfinite(t), "fit_cart: non-finite target");

    CartBuilder b{x, targets, depth, gamma, costs, usage, {}, {}};
    b.used_in_tree.assign(x.k, 0);
    std::vector<std::size_t> rows(x.n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    b.build(rows, 0);

    RegressionTree t;
    t.nodes = std::move(b.nodes);
    t.max_depth = depth;
    return t;
}

// ===========================================================================
// Stage-wise boosting on logistic loss
// ===========================================================================

namespace {

// Shared by the cost-blind and cost-aware trainers so that lambda = 0
// reproduces plain boosting exactly.
TreeEnsemble boost_logistic(const Dataset& ds, int t, int depth, double shrinkage,
                            double lambda, FeatureUsage& usage) {
    require(t >= 1, "boosting needs at least one round");
    TreeEnsemble ens = TreeEnsemble::empty(shrinkage);
    const MatrixView x = MatrixView::of(ds);
    std::vector<double> f(ds.n, 0.0), neg_margin(ds.n), sig(ds.n), resid(ds.n);
    for (int round = 0; round < t; ++round) {
        for (std::size_t i = 0; i < ds.n; ++i) neg_margin[i] = -ds.labels[i] * f[i];
        k::sigmoid(neg_margin, sig);
        for (std::size_t i = 0; i < ds.n; ++i) resid[i] = ds.labels[i] * sig[i];
        RegressionTree tree = fit_cart(x, resid, depth, lambda, ds.costs, usage);
        usage.consume(tree);
        for (std::size_t i = 0; i < ds.n; ++i) f[i] += shrinkage * tree.predict(x.row(i));
        ens.trees.push_back(std::move(tree));
    }
    return ens;
}

}  // namespace

TreeEnsemble train_gbrt(const Dataset& ds, int t, int depth, double shrinkage) {
    FeatureUsage usage = FeatureUsage::fresh(ds.k);
    return boost_logistic(ds, t, depth, shrinkage, 0.0, usage);
}

TreeEnsemble greedy_miser(const Dataset& ds, int t, int depth, double shrinkage,
                          double lambda) {
    require(lambda >= 0.0, "greedy_miser: lambda must be non-negative");
    FeatureUsage usage = FeatureUsage::fresh(ds.k);
    return boost_logistic(ds, t, depth, shrinkage, lambda, usage);
}

}  // namespace costgate
