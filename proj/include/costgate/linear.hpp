#pragma once

#include <span>
#include <utility>
#include <vector>

#include "costgate/dataset.hpp"

namespace costgate {

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;

    double score(std::span<const double> x) const;
    void scores(const Dataset& ds, std::vector<double>& out) const;

    // exact nonzero support; proximal steps produce exact zeros
    std::vector<std::size_t> used_features() const;

    static LinearModel zeros(std::size_t k) { return {std::vector<double>(k, 0.0), 0.0}; }
};

// Joint (gating, prediction) pair produced by the group-sparse solver,
// with the objective value after every accepted proximal step.
struct JointLinearPair {
    LinearModel g;
    LinearModel f1;
    std::vector<double> objective_trace;
};

struct LogisticOptions {
    double grad_tol = 1e-6;
    int max_iter = 200;
};

// Weighted L2-regularized logistic regression, intercept unregularized,
// solved by damped Newton to the gradient-norm tolerance.
LinearModel train_logistic(const Dataset& ds, double l2,
                           std::span<const double> sample_weights = {},
                           const LogisticOptions& opts = {});

// Same, restricted to a feature subset; the returned model lives in the full
// feature space with zeros elsewhere.
LinearModel train_logistic_subset(const Dataset& ds,
                                  const std::vector<std::size_t>& support, double l2,
                                  std::span<const double> sample_weights = {},
                                  const LogisticOptions& opts = {});

struct L1Options {
    int max_iter = 50000;
    double rel_tol = 1e-12;
};

// L1-penalized logistic regression, penalty weight 1/c, solved by
// accelerated proximal gradient with adaptive restart.
LinearModel train_l1_logistic(const Dataset& ds, double c, const L1Options& opts = {});

// prox of threshold * ||.||_2 over a 2-vector
std::pair<double, double> group_prox(std::pair<double, double> v, double threshold);

struct Opt2Options {
    int max_iter = 5000;
    double rel_tol = 1e-8;
};

// Joint minimization over (g, f1): smooth routed logistic losses weighted by
// q plus a per-feature group penalty gamma * c_alpha * ||(g_a, f1_a)||_2.
// Intercepts are unpenalized.  Proximal gradient with halving line search
// from step 1; the recorded objective trace never increases.
JointLinearPair solve_opt2(const Dataset& ds, std::span<const double> q, double gamma,
                           const JointLinearPair& init, const Opt2Options& opts = {});

// Smooth part of the OPT2 objective and its gradient, exposed for
// finite-difference verification.  Layout: [g weights..., g intercept,
// f1 weights..., f1 intercept].
struct Opt2Smooth {
    double value = 0.0;
    std::vector<double> grad;
};
Opt2Smooth opt2_smooth_eval(const Dataset& ds, std::span<const double> q,
                            std::span<const double> theta);

double opt2_objective(const Dataset& ds, std::span<const double> q, double gamma,
                      const LinearModel& g, const LinearModel& f1);

}  // namespace costgate
