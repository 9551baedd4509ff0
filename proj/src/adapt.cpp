#include "costgate/adapt.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "costgate/common.hpp"
#include "costgate/kernels.hpp"
#include "costgate/linalg.hpp"

namespace costgate {

namespace k = kernels;

namespace {

constexpr double kQClamp = 1e-6;      // log-odds transforms diverge at {0,1}
constexpr double kInitL2 = 1.0;       // ridge for the logistic initializers
constexpr double kOpt1Tol = 1e-10;    // tight so gate steps cannot raise the trace

double logit(double q) { return std::log(q / (1.0 - q)); }

std::vector<double> logistic_losses(std::span<const double> labels,
                                    std::span<const double> scores) {
    const std::size_t n = labels.size();
    std::vector<double> neg(n), out(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -labels[i] * scores[i];
    k::softplus(neg, out);
    return out;
}

double entropy(double q) {
    double h = 0.0;
    if (q > 0.0) h -= q * std::log(q);
    if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
    return h;
}

double relative_change(double prev, double cur) {
    return std::fabs(prev - cur) / std::max(1.0, std::fabs(prev));
}

std::pair<LinearModel, LinearModel> linear_init(const Dataset& ds, const AdaptConfig& cfg) {
    if (cfg.init == LinearInit::ones) {
        LinearModel ones{std::vector<double>(ds.k, 1.0), 0.0};
        return {ones, ones};
    }
    return {LinearModel::zeros(ds.k), train_logistic(ds, kInitL2)};
}

}  // namespace

void AdaptConfig::validate() const {
    require(gamma >= 0.0, "config: gamma must be non-negative");
    require(p_full >= 0.0 && p_full <= 1.0, "config: p_full outside [0,1]");
    require(outer_iters >= 1, "config: outer_iters must be >= 1");
    require(trees_per_round >= 1, "config: trees_per_round must be >= 1");
    require(depth >= 1, "config: depth must be >= 1");
    require(shrinkage > 0.0 && shrinkage <= 1.0, "config: shrinkage outside (0,1]");
    require(tolerance > 0.0, "config: tolerance must be positive");
}

// ===========================================================================
// Full objective
// ===========================================================================

double full_objective(const Dataset& ds, std::span<const double> q, const Model& g,
                      const Model& f1, const ScoreTable& f0_scores, double gamma,
                      Metric metric) {
    require(q.size() == ds.n && f0_scores.size() == ds.n, "full_objective: length mismatch");
    std::vector<double> gs, f1s;
    model_scores(g, ds, gs);
    model_scores(f1, ds, f1s);
    const std::vector<double> l1 = logistic_losses(ds.labels, f1s);
    const std::vector<double> l0 = logistic_losses(ds.labels, f0_scores.values);

    double acc = 0.0;
    if (metric == Metric::kl) {
        // E_q loss + KL(q || gate posterior), written through the loss terms
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double a = l1[i] + k::softplus1(gs[i]);
            const double b = l0[i] + k::softplus1(-gs[i]);
            acc += (1.0 - q[i]) * a + q[i] * b - entropy(q[i]);
        }
    } else {
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double qc = std::clamp(q[i], kQClamp, 1.0 - kQClamp);
            const double d = logit(qc) - gs[i];
            acc += q[i] * l0[i] + (1.0 - q[i]) * l1[i] + d * d;
        }
    }
    acc /= static_cast<double>(ds.n);

    if (gamma > 0.0) {
        const auto* glin = std::get_if<LinearModel>(&g);
        if (glin != nullptr) {
            const auto& f1lin = std::get<LinearModel>(f1);
            for (std::size_t a = 0; a < ds.k; ++a) {
                const double wg = glin->weights[a], wf = f1lin.weights[a];
                acc += gamma * ds.costs[a] * std::sqrt(wg * wg + wf * wf);
            }
        } else {
            std::vector<std::uint8_t> used(ds.k, 0);
            for (std::size_t a : model_used_features(g)) used[a] = 1;
            for (std::size_t a : model_used_features(f1)) used[a] = 1;
            for (std::size_t a = 0; a < ds.k; ++a)
                if (used[a]) acc += gamma * ds.costs[a];
        }
    }
    return acc;
}

// ===========================================================================
// Linear trainer: closed-form gate step + group-sparse joint solve
// ===========================================================================

AdaptResult adapt_lin(const Dataset& ds, const ScoreTable& f0_scores,
                      const AdaptConfig& cfg) {
    cfg.validate();
    require(f0_scores.size() == ds.n, "adapt_lin: score table length mismatch");

    JointLinearPair pair;
    std::tie(pair.g, pair.f1) = linear_init(ds, cfg);

    AdaptResult out;
    std::vector<double> gs, f1s;
    double prev = 0.0;
    bool have_prev = false;
    for (int round = 0; round < cfg.outer_iters; ++round) {
        pair.g.scores(ds, gs);
        pair.f1.scores(ds, f1s);
        const LossTerms terms =
            compute_loss_terms(ds.labels, ScoreTable{f1s}, ScoreTable{gs}, f0_scores);
        GateAssignment gate = solve_opt1(terms, cfg.p_full, kOpt1Tol);
        out.trace.push_back(
            full_objective(ds, gate.q, pair.g, pair.f1, f0_scores, cfg.gamma, Metric::kl));

        try {
            pair = solve_opt2(ds, gate.q, cfg.gamma, pair);
        } catch (const Error& e) {
            fail("adapt_lin: round " + std::to_string(round) + ": " + e.what());
        }
        const double obj =
            full_objective(ds, gate.q, pair.g, pair.f1, f0_scores, cfg.gamma, Metric::kl);
        out.trace.push_back(obj);
        if (have_prev && relative_change(prev, obj) < cfg.tolerance) break;
        prev = obj;
        have_prev = true;
    }

    out.system = AdaptiveSystem::make(pair.g, pair.f1, ds.k);
    return out;
}

// ===========================================================================
// Tree trainer: stage-wise boosted models under the acquisition charge
// ===========================================================================

AdaptResult adapt_gbrt(const Dataset& ds, const ScoreTable& f0_scores,
                       const AdaptConfig& cfg) {
    cfg.validate();
    require(f0_scores.size() == ds.n, "adapt_gbrt: score table length mismatch");
    const MatrixView x = MatrixView::of(ds);

    FeatureUsage usage = FeatureUsage::fresh(ds.k);
    TreeEnsemble f1 = TreeEnsemble::empty(cfg.shrinkage);
    TreeEnsemble g = TreeEnsemble::empty(cfg.shrinkage);

    std::vector<double> f1s(ds.n, 0.0), gs(ds.n, 0.0);
    std::vector<double> neg_margin(ds.n), sig(ds.n), resid(ds.n), neg_g(ds.n), sig_g(ds.n),
        sig_ng(ds.n);

    auto add_f1_tree = [&](std::span<const double> q) {
        for (std::size_t i = 0; i < ds.n; ++i) neg_margin[i] = -ds.labels[i] * f1s[i];
        k::sigmoid(neg_margin, sig);
        for (std::size_t i = 0; i < ds.n; ++i) {
            const double w = q.empty() ? 1.0 : 1.0 - q[i];
            resid[i] = w * ds.labels[i] * sig[i];
        }
        RegressionTree tree = fit_cart(x, resid, cfg.depth, cfg.gamma, ds.costs, usage);
        usage.consume(tree);
        for (std::size_t i = 0; i < ds.n; ++i)
            f1s[i] += cfg.shrinkage * tree.predict(x.row(i));
        f1.trees.push_back(std::move(tree));
    };

    auto add_g_tree = [&](std::span<const double> q) {
        k::sigmoid(gs, sig_g);
        for (std::size_t i = 0; i < ds.n; ++i) neg_g[i] = -gs[i];
        k::sigmoid(neg_g, sig_ng);
        for (std::size_t i = 0; i < ds.n; ++i)
            resid[i] = q[i] * sig_ng[i] - (1.0 - q[i]) * sig_g[i];
        RegressionTree tree = fit_cart(x, resid, cfg.depth, cfg.gamma, ds.costs, usage);
        usage.consume(tree);
        for (std::size_t i = 0; i < ds.n; ++i)
            gs[i] += cfg.shrinkage * tree.predict(x.row(i));
        g.trees.push_back(std::move(tree));
    };

    // cost-aware boosting warm start for the prediction model
    for (int t = 0; t < cfg.trees_per_round; ++t) add_f1_tree({});

    AdaptResult out;
    double prev = 0.0;
    bool have_prev = false;
    for (int round = 0; round < cfg.outer_iters; ++round) {
        const LossTerms terms = compute_loss_terms(ds.labels, ScoreTable{f1s},
                                                   ScoreTable{gs}, f0_scores);
        GateAssignment gate = solve_opt1(terms, cfg.p_full, kOpt1Tol);
        out.trace.push_back(full_objective(ds, gate.q, Model{g}, Model{f1}, f0_scores,
                                           cfg.gamma, Metric::kl));
        for (int t = 0; t < cfg.trees_per_round; ++t) {
            add_f1_tree(gate.q);
            add_g_tree(gate.q);
        }
        const double obj = full_objective(ds, gate.q, Model{g}, Model{f1}, f0_scores,
                                          cfg.gamma, Metric::kl);
        out.trace.push_back(obj);
        if (have_prev && relative_change(prev, obj) < cfg.tolerance) break;
        prev = obj;
        have_prev = true;
    }

    out.system = AdaptiveSystem::make(std::move(g), std::move(f1), ds.k);
    return out;
}

// ===========================================================================
// Symmetrized-metric subproblems
// ===========================================================================

double opt5_objective(std::span<const double> a, const ScoreTable& g_scores,
                      std::span<const double> q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        const double qc = std::clamp(q[i], kQClamp, 1.0 - kQClamp);
        const double d = logit(qc) - g_scores[i];
        s += (1.0 - q[i]) * a[i] + d * d;
    }
    return s / static_cast<double>(q.size());
}

namespace {

// minimize (1-q)a + (logit q - s)^2 + lam*q over the clamped interval:
// dense grid then a few projected Newton polish steps
double opt5_scalar_min(double a, double s, double lam, std::span<const double> grid_logits) {
    const std::size_t m = grid_logits.size();
    double best_q = 0.5, best_v = 1e300;
    for (std::size_t j = 0; j < m; ++j) {
        const double q = kQClamp + static_cast<double>(j) * (1.0 - 2.0 * kQClamp) /
                                       static_cast<double>(m - 1);
        const double d = grid_logits[j] - s;
        const double v = (1.0 - q) * a + d * d + lam * q;
        if (v < best_v) {
            best_v = v;
            best_q = q;
        }
    }
    double q = best_q;
    for (int it = 0; it < 4; ++it) {
        const double lg = logit(q);
        const double inv = 1.0 / (q * (1.0 - q));
        const double g1 = -a + lam + 2.0 * (lg - s) * inv;
        const double g2 = 2.0 * inv * inv +
                          2.0 * (lg - s) * inv * inv * (2.0 * q - 1.0);
        if (!(g2 > 0.0)) break;
        double qn = q - g1 / g2;
        qn = std::clamp(qn, kQClamp, 1.0 - kQClamp);
        const double dv = (logit(qn) - s);
        const double vn = (1.0 - qn) * a + dv * dv + lam * qn;
        if (vn <= best_v) {
            best_v = vn;
            q = qn;
        } else {
            break;
        }
    }
    return q;
}

}  // namespace

GateAssignment solve_opt5(std::span<const double> a, const ScoreTable& g_scores,
                          double p_full, double penalty) {
    const std::size_t n = a.size();
    require(g_scores.size() == n && n > 0, "solve_opt5: length mismatch");
    require(p_full >= 0.0 && p_full <= 1.0, "solve_opt5: p_full outside [0,1]");
    require(penalty > 0.0, "solve_opt5: penalty must be positive");
    for (double v : a) require(std::isfinite(v), "solve_opt5: non-finite loss term");

    // grid of logit values shared across examples and dual iterations
    constexpr std::size_t kGrid = 10001;  // resolution 1e-4 over [clamp, 1-clamp]
    static thread_local std::vector<double> grid_logits;
    if (grid_logits.size() != kGrid) {
        grid_logits.resize(kGrid);
        for (std::size_t j = 0; j < kGrid; ++j) {
            const double q = kQClamp + static_cast<double>(j) * (1.0 - 2.0 * kQClamp) /
                                           static_cast<double>(kGrid - 1);
            grid_logits[j] = logit(q);
        }
    }

    constexpr double kFeasSlack = 1e-4;
    constexpr int kMaxOuter = 500;
    double lam = 0.0;
    double rho = penalty;
    std::vector<double> q(n);
    std::vector<double> best_q;
    double best_obj = 1e300, best_lam = 0.0;
    double prev_violation = 1e300;

    for (int outer = 0; outer < kMaxOuter; ++outer) {
        for (std::size_t i = 0; i < n; ++i)
            q[i] = opt5_scalar_min(a[i], g_scores[i], lam, grid_logits);
        const double mean = k::sum(q) / static_cast<double>(n);
        if (mean <= p_full + kFeasSlack) {
            const double obj = opt5_objective(a, g_scores, q);
            if (obj < best_obj) {
                best_obj = obj;
                best_q = q;
                best_lam = lam;
            }
            if (lam == 0.0) break;                    // constraint slack at the optimum
            if (mean >= p_full - kFeasSlack) break;   // constraint met tightly
        }
        // multiplier step with penalty escalation when the violation stalls
        const double violation = mean - p_full;
        if (violation > kFeasSlack && violation > 0.9 * prev_violation) rho *= 2.0;
        prev_violation = violation;
        lam = std::max(0.0, lam + rho * violation);
        if (outer == kMaxOuter - 1 && best_q.empty())
            fail("solve_opt5: no feasible assignment after " + std::to_string(kMaxOuter) +
                 " dual updates");
    }

    // never return anything worse than the uniform feasible assignment
    const double uq = std::min(p_full, 0.5);
    if (uq >= kQClamp) {
        std::vector<double> uniform(n, uq);
        const double uobj = opt5_objective(a, g_scores, uniform);
        if (best_q.empty() || uobj < best_obj) {
            best_q = std::move(uniform);
            best_obj = uobj;
            best_lam = 0.0;
        }
    }
    require(!best_q.empty(), "solve_opt5: no feasible assignment found");
    return {std::move(best_q), best_lam};
}

LinearModel solve_opt6(const Dataset& ds, const GateAssignment& gate) {
    require(gate.q.size() == ds.n, "solve_opt6: q length mismatch");
    const std::size_t dim = ds.k + 1;
    std::vector<double> ata(dim * dim, 0.0), atb(dim, 0.0);
    for (std::size_t i = 0; i < ds.n; ++i) {
        const double qc = std::clamp(gate.q[i], kQClamp, 1.0 - kQClamp);
        const double t = logit(qc);
        const auto x = ds.row(i);
        for (std::size_t p = 0; p < ds.k; ++p) {
            for (std::size_t r = p; r < ds.k; ++r) ata[p * dim + r] += x[p] * x[r];
            ata[p * dim + ds.k] += x[p];
            atb[p] += x[p] * t;
        }
        ata[ds.k * dim + ds.k] += 1.0;
        atb[ds.k] += t;
    }
    for (std::size_t p = 0; p < dim; ++p) {
        for (std::size_t r = 0; r < p; ++r) ata[p * dim + r] = ata[r * dim + p];
        ata[p * dim + p] += 1e-10;  // rank safety
    }
    std::vector<double> sol(dim);
    linalg::spd_solve(ata, dim, atb, sol);
    LinearModel m;
    m.weights.assign(sol.begin(), sol.begin() + ds.k);
    m.intercept = sol[ds.k];
    return m;
}

LinearModel solve_opt7(const Dataset& ds, const GateAssignment& gate) {
    require(gate.q.size() == ds.n, "solve_opt7: q length mismatch");
    std::vector<double> w(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) w[i] = 1.0 - gate.q[i];
    return train_logistic(ds, 1e-8, w);
}

// ===========================================================================
// Symmetrized-metric trainer
// ===========================================================================

AdaptResult adapt_lstsq(const Dataset& ds, const ScoreTable& f0_scores,
                        const AdaptConfig& cfg) {
    cfg.validate();
    require(f0_scores.size() == ds.n, "adapt_lstsq: score table length mismatch");

    auto [g, f1] = linear_init(ds, cfg);
    const std::vector<double> l0 = logistic_losses(ds.labels, f0_scores.values);

    AdaptResult out;
    std::vector<double> gs, f1s;
    double prev = 0.0;
    bool have_prev = false;
    for (int round = 0; round < cfg.outer_iters; ++round) {
        g.scores(ds, gs);
        f1.scores(ds, f1s);
        const std::vector<double> l1 = logistic_losses(ds.labels, f1s);
        std::vector<double> excess(ds.n);
        for (std::size_t i = 0; i < ds.n; ++i) excess[i] = l1[i] - l0[i];

        GateAssignment gate;
        try {
            gate = solve_opt5(excess, ScoreTable{gs}, cfg.p_full, 1.0);
        } catch (const Error& e) {
            fail("adapt_lstsq: round " + std::to_string(round) + ": " + e.what());
        }
        out.trace.push_back(
            full_objective(ds, gate.q, Model{g}, Model{f1}, f0_scores, cfg.gamma, Metric::lstsq));

        g = solve_opt6(ds, gate);
        f1 = solve_opt7(ds, gate);
        const double obj =
            full_objective(ds, gate.q, Model{g}, Model{f1}, f0_scores, cfg.gamma, Metric::lstsq);
        out.trace.push_back(obj);
        if (have_prev && relative_change(prev, obj) < cfg.tolerance) break;
        prev = obj;
        have_prev = true;
    }

    out.system = AdaptiveSystem::make(std::move(g), std::move(f1), ds.k);
    return out;
}

// ===========================================================================
// L1 baseline
// ===========================================================================

std::vector<AdaptiveSystem> l1_baseline(const Dataset& ds_train, const Dataset& ds_val,
                                        const ScoreTable& f0_scores,
                                        std::span<const double> c_grid,
                                        std::span<const double> class_weight_grid) {
    require(ds_val.k == ds_train.k, "l1_baseline: split feature mismatch");
    require(f0_scores.size() == ds_train.n, "l1_baseline: score table length mismatch");
    require(!c_grid.empty() && !class_weight_grid.empty(), "l1_baseline: empty grid");

    // supports of every size reachable by thresholding |weights| along the c path
    std::set<std::vector<std::size_t>> supports;
    for (double c : c_grid) {
        const LinearModel m = train_l1_logistic(ds_train, c);
        std::vector<std::size_t> order(ds_train.k);
        for (std::size_t a = 0; a < ds_train.k; ++a) order[a] = a;
        std::stable_sort(order.begin(), order.end(), [&](std::size_t p, std::size_t r) {
            return std::fabs(m.weights[p]) > std::fabs(m.weights[r]);
        });
        for (std::size_t size = 1; size <= ds_train.k; ++size) {
            std::vector<std::size_t> s(order.begin(), order.begin() + size);
            std::sort(s.begin(), s.end());
            supports.insert(std::move(s));
        }
    }

    std::vector<AdaptiveSystem> systems;
    for (const auto& support : supports) {
        const LinearModel f1 = train_logistic_subset(ds_train, support, kInitL2);
        // pseudo label: +1 when the cheap model is wrong and the gate should
        // hand the example to the full model
        Dataset gate_ds = ds_train;
        std::vector<std::uint8_t> wrong(ds_train.n, 0);
        for (std::size_t i = 0; i < ds_train.n; ++i) {
            const double pred = f1.score(ds_train.row(i)) >= 0.0 ? 1.0 : -1.0;
            wrong[i] = pred != ds_train.labels[i] ? 1 : 0;
            gate_ds.labels[i] = wrong[i] ? 1.0 : -1.0;
        }
        for (double cw : class_weight_grid) {
            require(cw > 0.0 && cw < 1.0, "l1_baseline: class weights must be in (0,1)");
            std::vector<double> w(ds_train.n);
            for (std::size_t i = 0; i < ds_train.n; ++i) w[i] = wrong[i] ? cw : 1.0 - cw;
            AdaptiveSystem sys;
            try {
                sys = AdaptiveSystem::make(
                    train_logistic_subset(gate_ds, support, kInitL2, w), f1, ds_train.k);
            } catch (const Error&) {
                continue;  // degenerate weighting; skip the cell
            }
            systems.push_back(std::move(sys));
        }
    }
    return systems;
}

}  // namespace costgate
