#pragma once

// Independent oracles used to pin down solver results.  Everything here is
// deliberately written against plain libm (no shared kernels) and brute
// force where feasible, so a defect in the library cannot hide in its own
// reference.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "costgate/dataset.hpp"
#include "costgate/gating.hpp"
#include "costgate/trees.hpp"

namespace oracles {

inline double softplus_ref(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline double sigmoid_ref(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double t = std::exp(x);
    return t / (1.0 + t);
}

inline double entropy_ref(double q) {
    double h = 0.0;
    if (q > 0.0) h -= q * std::log(q);
    if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
    return h;
}

// ---------------------------------------------------------------------------
// Gate-assignment objective over a uniform grid
// ---------------------------------------------------------------------------

inline double opt1_term(const costgate::LossTerms& t, std::size_t i, double q) {
    return (1.0 - q) * t.a[i] + q * t.b[i] - entropy_ref(q);
}

// Exact minimum of the separable objective over {0, 1/res, ..., 1}^n subject
// to sum(q) <= n * p_full, by dynamic programming over the integer capacity.
// Identical by construction to filtered enumeration of the full grid.
inline double opt1_grid_oracle(const costgate::LossTerms& terms, double p_full, int res) {
    const std::size_t n = terms.a.size();
    const long cap = static_cast<long>(std::floor(
        static_cast<double>(n) * p_full * static_cast<double>(res) + 1e-9));

    // fast path: unconstrained per-coordinate minimum, if feasible
    {
        double total = 0.0;
        long units = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            int best_j = 0;
            for (int j = 0; j <= res; ++j) {
                const double v = opt1_term(terms, i, static_cast<double>(j) / res);
                if (v < best) {
                    best = v;
                    best_j = j;
                }
            }
            total += best;
            units += best_j;
        }
        if (units <= cap) return total / static_cast<double>(n);
    }

    const double inf = std::numeric_limits<double>::infinity();
    const long width = std::min<long>(cap, static_cast<long>(n) * res) + 1;
    std::vector<double> dp(width, inf), next(width, inf);
    dp[0] = 0.0;
    std::vector<double> h(res + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j <= res; ++j) h[j] = opt1_term(terms, i, static_cast<double>(j) / res);
        std::fill(next.begin(), next.end(), inf);
        for (long s = 0; s < width; ++s) {
            if (dp[s] == inf) continue;
            const long jmax = std::min<long>(res, width - 1 - s);
            for (long j = 0; j <= jmax; ++j) {
                const double v = dp[s] + h[j];
                if (v < next[s + j]) next[s + j] = v;
            }
        }
        dp.swap(next);
    }
    double best = inf;
    for (long s = 0; s < width; ++s) best = std::min(best, dp[s]);
    return best / static_cast<double>(n);
}

// Plain filtered enumeration (small n / coarse grids); validates the DP.
inline double opt1_grid_naive(const costgate::LossTerms& terms, double p_full, int res) {
    const std::size_t n = terms.a.size();
    std::vector<int> idx(n, 0);
    double best = std::numeric_limits<double>::infinity();
    for (;;) {
        long units = 0;
        for (std::size_t i = 0; i < n; ++i) units += idx[i];
        if (static_cast<double>(units) <=
            static_cast<double>(n) * p_full * static_cast<double>(res) + 1e-9) {
            double v = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                v += opt1_term(terms, i, static_cast<double>(idx[i]) / res);
            best = std::min(best, v / static_cast<double>(n));
        }
        std::size_t pos = 0;
        while (pos < n && ++idx[pos] > res) idx[pos++] = 0;
        if (pos == n) break;
    }
    return best;
}

// ---------------------------------------------------------------------------
// Joint group-sparse objective: blockwise coordinate descent
// ---------------------------------------------------------------------------

struct Opt2Oracle {
    const costgate::Dataset& ds;
    std::vector<double> q;
    double gamma;
    std::vector<double> gw, fw;
    double gb = 0.0, fb = 0.0;

    double margin_g(std::size_t i) const {
        double s = gb;
        for (std::size_t a = 0; a < ds.k; ++a) s += gw[a] * ds.at(i, a);
        return s;
    }
    double margin_f(std::size_t i) const {
        double s = fb;
        for (std::size_t a = 0; a < ds.k; ++a) s += fw[a] * ds.at(i, a);
        return s;
    }

    double objective() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double mg = margin_g(i), mf = margin_f(i);
            acc += (1.0 - q[i]) * (softplus_ref(-ds.labels[i] * mf) + softplus_ref(mg)) +
                   q[i] * softplus_ref(-mg);
        }
        acc /= static_cast<double>(ds.n);
        for (std::size_t a = 0; a < ds.k; ++a)
            acc += gamma * ds.costs[a] * std::sqrt(gw[a] * gw[a] + fw[a] * fw[a]);
        return acc;
    }

    // partial derivatives w.r.t. (g_a, f_a) or the intercepts (a == k)
    std::pair<double, double> partials(std::size_t a) const {
        double dg = 0.0, df = 0.0;
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double x = a < ds.k ? ds.at(i, a) : 1.0;
            const double mg = margin_g(i), mf = margin_f(i);
            dg += ((1.0 - q[i]) * sigmoid_ref(mg) - q[i] * sigmoid_ref(-mg)) * x;
            df += (1.0 - q[i]) * (-ds.labels[i]) * sigmoid_ref(-ds.labels[i] * mf) * x;
        }
        const double inv_n = 1.0 / static_cast<double>(ds.n);
        return {dg * inv_n, df * inv_n};
    }

    double run(int max_sweeps = 20000, double tol = 1e-12) {
        gw.assign(ds.k, 0.0);
        fw.assign(ds.k, 0.0);
        gb = fb = 0.0;
        double lips = 0.0;  // per-coordinate curvature bound
        for (std::size_t a = 0; a <= ds.k; ++a) {
            double s = 0.0;
            for (std::size_t i = 0; i < ds.n; ++i) {
                const double x = a < ds.k ? ds.at(i, a) : 1.0;
                s += x * x;
            }
            lips = std::max(lips, 0.25 * s / static_cast<double>(ds.n));
        }
        const double step = 1.0 / std::max(lips, 1e-12);
        double obj = objective();
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            for (std::size_t a = 0; a < ds.k; ++a) {
                for (int inner = 0; inner < 400; ++inner) {
                    const auto [dg, df] = partials(a);
                    double zg = gw[a] - step * dg;
                    double zf = fw[a] - step * df;
                    const double th = step * gamma * ds.costs[a];
                    const double norm = std::sqrt(zg * zg + zf * zf);
                    if (norm <= th) {
                        zg = zf = 0.0;
                    } else {
                        const double sc = 1.0 - th / norm;
                        zg *= sc;
                        zf *= sc;
                    }
                    const double move = std::fabs(zg - gw[a]) + std::fabs(zf - fw[a]);
                    gw[a] = zg;
                    fw[a] = zf;
                    if (move < 1e-14) break;
                }
            }
            for (int inner = 0; inner < 400; ++inner) {  // unpenalized intercepts
                const auto [dg, df] = partials(ds.k);
                gb -= step * dg;
                fb -= step * df;
                if (std::fabs(dg) + std::fabs(df) < 1e-14) break;
            }
            const double nobj = objective();
            if (obj - nobj < tol && sweep > 2) return nobj;
            obj = nobj;
        }
        return obj;
    }
};

// ---------------------------------------------------------------------------
// L1 logistic: projected subgradient with best-iterate tracking
// ---------------------------------------------------------------------------

inline double l1_subgradient_oracle(const costgate::Dataset& ds, double c, int iters) {
    const double lambda = 1.0 / c;
    std::vector<double> theta(ds.k + 1, 0.0);
    auto objective = [&](const std::vector<double>& th) {
        double s = 0.0;
        for (std::size_t i = 0; i < ds.n; ++i) {
            double m = th[ds.k];
            for (std::size_t a = 0; a < ds.k; ++a) m += th[a] * ds.at(i, a);
            s += softplus_ref(-ds.labels[i] * m);
        }
        s /= static_cast<double>(ds.n);
        for (std::size_t a = 0; a < ds.k; ++a) s += lambda * std::fabs(th[a]);
        return s;
    };
    double best = objective(theta);
    std::vector<double> sub(ds.k + 1);
    for (int t = 0; t < iters; ++t) {
        std::fill(sub.begin(), sub.end(), 0.0);
        for (std::size_t i = 0; i < ds.n; ++i) {
            double m = theta[ds.k];
            for (std::size_t a = 0; a < ds.k; ++a) m += theta[a] * ds.at(i, a);
            const double coef = -ds.labels[i] * sigmoid_ref(-ds.labels[i] * m) /
                                static_cast<double>(ds.n);
            for (std::size_t a = 0; a < ds.k; ++a) sub[a] += coef * ds.at(i, a);
            sub[ds.k] += coef;
        }
        for (std::size_t a = 0; a < ds.k; ++a)
            sub[a] += lambda * (theta[a] > 0.0 ? 1.0 : (theta[a] < 0.0 ? -1.0 : 0.0));
        const double step = 0.5 / std::sqrt(static_cast<double>(t) + 1.0);
        for (std::size_t j = 0; j <= ds.k; ++j) theta[j] -= step * sub[j];
        best = std::min(best, objective(theta));
    }
    return best;
}

// ---------------------------------------------------------------------------
// Exhaustive CART (direct SSE evaluation at every candidate split)
// ---------------------------------------------------------------------------

inline double sse_of(const std::vector<double>& t) {
    if (t.empty()) return 0.0;
    double mean = 0.0;
    for (double v : t) mean += v;
    mean /= static_cast<double>(t.size());
    double s = 0.0;
    for (double v : t) s += (v - mean) * (v - mean);
    return s;
}

inline int cart_exhaustive_node(const costgate::MatrixView& x,
                                const std::vector<double>& targets,
                                std::vector<std::size_t> rows, int level, int max_depth,
                                std::vector<costgate::TreeNode>& nodes) {
    std::vector<double> sub;
    sub.reserve(rows.size());
    for (std::size_t r : rows) sub.push_back(targets[r]);
    double mean = 0.0;
    for (double v : sub) mean += v;
    mean /= static_cast<double>(sub.size());

    const int self = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes[self].value = mean;
    if (level >= max_depth || rows.size() < 2) return self;

    const double parent_sse = sse_of(sub);
    // accept floor and tie margin identical to the library's split search
    double best_gain = 1e-9;
    const double tie_eps = 1e-9 * (1.0 + std::fabs(parent_sse));
    int best_feature = -1;
    double best_thr = 0.0;
    for (std::size_t a = 0; a < x.k; ++a) {
        std::vector<double> vals;
        for (std::size_t r : rows) vals.push_back(x.at(r, a));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t j = 0; j + 1 < vals.size(); ++j) {
            const double thr = 0.5 * (vals[j] + vals[j + 1]);
            std::vector<double> lt, rt;
            for (std::size_t r : rows)
                (x.at(r, a) <= thr ? lt : rt).push_back(targets[r]);
            const double gain = parent_sse - sse_of(lt) - sse_of(rt);
            if (gain > best_gain + tie_eps) {
                best_gain = gain;
                best_feature = static_cast<int>(a);
                best_thr = thr;
            }
        }
    }
    if (best_feature < 0) return self;

    std::vector<std::size_t> lrows, rrows;
    for (std::size_t r : rows)
        (x.at(r, static_cast<std::size_t>(best_feature)) <= best_thr ? lrows : rrows)
            .push_back(r);
    nodes[self].is_leaf = false;
    nodes[self].feature = best_feature;
    nodes[self].threshold = best_thr;
    nodes[self].left = cart_exhaustive_node(x, targets, std::move(lrows), level + 1,
                                            max_depth, nodes);
    nodes[self].right = cart_exhaustive_node(x, targets, std::move(rrows), level + 1,
                                             max_depth, nodes);
    return self;
}

inline costgate::RegressionTree cart_exhaustive(const costgate::MatrixView& x,
                                                const std::vector<double>& targets,
                                                int max_depth) {
    costgate::RegressionTree t;
    t.max_depth = max_depth;
    std::vector<std::size_t> rows(x.n);
    for (std::size_t i = 0; i < x.n; ++i) rows[i] = i;
    cart_exhaustive_node(x, targets, std::move(rows), 0, max_depth, t.nodes);
    return t;
}

// ---------------------------------------------------------------------------
// Misc helpers
// ---------------------------------------------------------------------------

template <typename F>
std::vector<double> fd_gradient(F&& f, std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double keep = x[j];
        x[j] = keep + h;
        const double up = f(x);
        x[j] = keep - h;
        const double dn = f(x);
        x[j] = keep;
        g[j] = (up - dn) / (2.0 * h);
    }
    return g;
}

inline costgate::ScoreTable perfect_scores(const costgate::Dataset& ds, double margin = 10.0) {
    costgate::ScoreTable t;
    t.values.reserve(ds.n);
    for (double y : ds.labels) t.values.push_back(y * margin);
    return t;
}

}  // namespace oracles
