#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "costgate/dataset.hpp"
#include "costgate/gating.hpp"

namespace costgate {

// Starting point for the linear trainers.  `logistic` fits the prediction
// model by ridge logistic regression on all features with a zero gate;
// `ones` starts both models at unit weights, which on tightly clustered
// data can steer the alternation into the budget-optimal basin.
enum class LinearInit { logistic, ones };

struct AdaptConfig {
    double gamma = 0.1;
    double p_full = 0.5;
    int outer_iters = 20;
    int trees_per_round = 10;  // tree trainers only
    int depth = 4;
    double shrinkage = 0.1;
    std::uint64_t seed = 0;
    double tolerance = 1e-6;
    LinearInit init = LinearInit::logistic;

    void validate() const;
};

struct AdaptResult {
    AdaptiveSystem system;
    // full objective after each accepted half-step (gate step, model step)
    std::vector<double> trace;
};

// Alternating minimization with linear gating/prediction models: the
// closed-form gate assignment alternates with the group-sparse joint solve.
// The recorded objective never increases.
AdaptResult adapt_lin(const Dataset& ds, const ScoreTable& f0_scores,
                      const AdaptConfig& cfg);

// Non-parametric variant: boosted-tree gating/prediction models grown
// stage-wise under the acquisition charge, gate assignment re-solved once
// per outer round.  With p_full = 0 this is exactly cost-aware boosting.
AdaptResult adapt_gbrt(const Dataset& ds, const ScoreTable& f0_scores,
                       const AdaptConfig& cfg);

// Symmetrized-metric variant (linear models only): gate fitting becomes a
// least-squares regression on the log odds of q; the q-subproblem is
// non-convex and solved by the penalized splitting scheme below.
AdaptResult adapt_lstsq(const Dataset& ds, const ScoreTable& f0_scores,
                        const AdaptConfig& cfg);

// q-subproblem of the symmetrized metric: per-example grid + Newton solves
// coordinated with the budget constraint through a dual/penalty update.
// a[i] is the excess loss of the cheap branch.
GateAssignment solve_opt5(std::span<const double> a, const ScoreTable& g_scores,
                          double p_full, double penalty);

double opt5_objective(std::span<const double> a, const ScoreTable& g_scores,
                      std::span<const double> q);

// Least-squares fit of the gate to the log odds of q (ridge 1e-10).
LinearModel solve_opt6(const Dataset& ds, const GateAssignment& gate);

// Prediction-model refit: weighted logistic regression with weights 1 - q.
LinearModel solve_opt7(const Dataset& ds, const GateAssignment& gate);

enum class Metric { kl, lstsq };

// Loss + gate-approximation distance + gamma-weighted acquisition penalty;
// used for trace recording and the monotonicity checks.
double full_objective(const Dataset& ds, std::span<const double> q, const Model& g,
                      const Model& f1, const ScoreTable& f0_scores, double gamma,
                      Metric metric);

// Sparse-then-gate baseline: every support size reachable from the L1 path,
// a cheap model per support, and a gate trained on its correctness pseudo
// labels across the class-weight grid.
std::vector<AdaptiveSystem> l1_baseline(const Dataset& ds_train, const Dataset& ds_val,
                                        const ScoreTable& f0_scores,
                                        std::span<const double> c_grid,
                                        std::span<const double> class_weight_grid);

}  // namespace costgate
