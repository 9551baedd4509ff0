#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "costgate/dataset.hpp"
#include "costgate/linear.hpp"
#include "costgate/trees.hpp"

namespace costgate {

using Model = std::variant<LinearModel, TreeEnsemble>;

double model_score(const Model& m, std::span<const double> x);
void model_scores(const Model& m, const Dataset& ds, std::vector<double>& out);
std::vector<std::size_t> model_used_features(const Model& m);

// Soft routing distribution: q[i] = probability of sending example i to the
// full model, plus the dual value of the budget constraint.
struct GateAssignment {
    std::vector<double> q;
    double beta = 0.0;

    double mean() const;
};

// Per-example loss terms of the q-subproblem:
//   a[i] = loss if routed to the cheap pair  (f1 loss + gate-positive loss)
//   b[i] = loss if routed to the full model  (f0 loss + gate-negative loss)
struct LossTerms {
    std::vector<double> a;
    std::vector<double> b;
};

LossTerms compute_loss_terms(std::span<const double> labels, const ScoreTable& f1_scores,
                             const ScoreTable& g_scores, const ScoreTable& f0_scores);

// Entropy-regularized assignment under the budget mean(q) <= p_full:
// q[i] = sigmoid(a[i] - b[i] - beta) with beta found by bisection when the
// constraint binds.  p_full = 0 short-circuits to q identically zero.
GateAssignment solve_opt1(const LossTerms& terms, double p_full, double tol = 1e-8);

// (1/N) sum (1-q)a + q b - H(q); the quantity solve_opt1 minimizes.
double opt1_objective(const LossTerms& terms, std::span<const double> q);

struct OracleGateConfig {
    double eta = 0.0;
};

// Idealized routing rule (diagnostic only): cheap model iff the excess loss
// does not exceed eta times the cost reduction; ties go cheap.
int oracle_gate(double excess_loss, double cost_reduction, const OracleGateConfig& cfg);

// --------------------------------------------------------------------------
// Composite system
// --------------------------------------------------------------------------

struct AdaptiveSystem {
    Model g;
    Model f1;
    std::optional<TreeEnsemble> f0_model;   // when the full model was trained here
    std::vector<std::uint8_t> f0_used;      // per-feature flags; defaults to all
    double route_threshold = 0.0;
    std::string f0_reference;               // provenance of external scores, if any

    static AdaptiveSystem make(Model g, Model f1, std::size_t k);
};

struct RouteDecision {
    int z = 1;            // 0 = full model, 1 = cheap model
    double label = 1.0;   // sign prediction of the routed model
};

// z = 0 iff the gate score exceeds the threshold; 0-scores predict +1.
// f0_score is required only when the example routes to an external full model.
RouteDecision route(const AdaptiveSystem& sys, std::span<const double> x,
                    std::optional<double> f0_score = std::nullopt);

// Sets the routing threshold to the empirical gate-score quantile on a
// calibration set so that hard routing realizes the requested full-model
// fraction.  A target of zero keeps everything on the cheap path.
void calibrate_route_threshold(AdaptiveSystem& sys, const Dataset& calib,
                               double target_f0_fraction);

struct CostReport {
    double avg_cost = 0.0;
    double f0_fraction = 0.0;
    std::vector<double> per_example;
};

// Per-example acquisition cost of the unique features touched by the gate
// plus the routed model; the full model defaults to every feature.
CostReport system_cost(const AdaptiveSystem& sys, const Dataset& ds);

struct EvalRow {
    std::size_t id = 0;
    int z = 1;
    double cost = 0.0;
    bool correct = false;
};

struct EvalReport {
    double accuracy = 0.0;
    double avg_cost = 0.0;
    double f0_fraction = 0.0;
    std::vector<EvalRow> rows;
};

EvalReport evaluate(const AdaptiveSystem& sys, const Dataset& ds,
                    const ScoreTable* f0_scores);

// Per-example slack of the latent-variable bound: expected routed loss plus
// KL(q || gate posterior) minus the composite negative log-likelihood.
// Non-negative up to rounding for every q; zero at the exact posterior.
std::vector<double> jensen_gap(const GateAssignment& gate, const ScoreTable& g_scores,
                               const ScoreTable& f1_scores, const ScoreTable& f0_scores,
                               std::span<const double> labels);

// (1/N) sum log(1 + exp(-y s))
double mean_logistic_loss(std::span<const double> scores, std::span<const double> labels);

}  // namespace costgate
