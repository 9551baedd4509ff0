#include "costgate/gating.hpp"

#include <algorithm>
#include <cmath>

#include "costgate/common.hpp"
#include "costgate/kernels.hpp"

namespace costgate {

namespace k = kernels;

double model_score(const Model& m, std::span<const double> x) {
    if (const auto* lin = std::get_if<LinearModel>(&m)) return lin->score(x);
    return std::get<TreeEnsemble>(m).predict(x);
}

void model_scores(const Model& m, const Dataset& ds, std::vector<double>& out) {
    out.resize(ds.n);
    if (const auto* lin = std::get_if<LinearModel>(&m)) {
        lin->scores(ds, out);
        return;
    }
    std::get<TreeEnsemble>(m).scores(MatrixView::of(ds), out);
}

std::vector<std::size_t> model_used_features(const Model& m) {
    if (const auto* lin = std::get_if<LinearModel>(&m)) return lin->used_features();
    return std::get<TreeEnsemble>(m).used_features();
}

double GateAssignment::mean() const {
    if (q.empty()) return 0.0;
    return k::sum(q) / static_cast<double>(q.size());
}

namespace {

double entropy(double q) {
    double h = 0.0;
    if (q > 0.0) h -= q * std::log(q);
    if (q < 1.0) h -= (1.0 - q) * std::log(1.0 - q);
    return h;
}

}  // namespace

LossTerms compute_loss_terms(std::span<const double> labels, const ScoreTable& f1_scores,
                             const ScoreTable& g_scores, const ScoreTable& f0_scores) {
    const std::size_t n = labels.size();
    require(f1_scores.size() == n && g_scores.size() == n && f0_scores.size() == n,
            "compute_loss_terms: length mismatch");
    std::vector<double> neg_yf1(n), neg_yf0(n);
    for (std::size_t i = 0; i < n; ++i) {
        neg_yf1[i] = -labels[i] * f1_scores[i];
        neg_yf0[i] = -labels[i] * f0_scores[i];
    }
    std::vector<double> l1(n), l0(n), spg(n), spng(n), neg_g(n);
    k::softplus(neg_yf1, l1);
    k::softplus(neg_yf0, l0);
    k::softplus(g_scores.values, spg);
    for (std::size_t i = 0; i < n; ++i) neg_g[i] = -g_scores[i];
    k::softplus(neg_g, spng);

    LossTerms t;
    t.a.resize(n);
    t.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.a[i] = l1[i] + spg[i];
        t.b[i] = l0[i] + spng[i];
    }
    return t;
}

GateAssignment solve_opt1(const LossTerms& terms, double p_full, double tol) {
    require(p_full >= 0.0 && p_full <= 1.0, "solve_opt1: p_full outside [0,1]");
    require(tol > 0.0, "solve_opt1: tol must be positive");
    const std::size_t n = terms.a.size();
    require(terms.b.size() == n && n > 0, "solve_opt1: empty or mismatched terms");

    std::vector<double> d(n);  // q = sigmoid(d - beta)
    double d_max = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = terms.a[i] - terms.b[i];
        d_max = std::max(d_max, d[i]);
    }

    if (p_full == 0.0) {
        // the constraint admits only the all-to-cheap assignment
        return {std::vector<double>(n, 0.0), std::max(0.0, d_max) + 50.0};
    }

    std::vector<double> shifted(n), q(n);
    auto q_at = [&](double beta) {
        for (std::size_t i = 0; i < n; ++i) shifted[i] = d[i] - beta;
        k::sigmoid(shifted, q);
        return k::sum(q) / static_cast<double>(n);
    };

    double mean0 = q_at(0.0);
    if (mean0 <= p_full) return {q, 0.0};

    double lo = 0.0, hi = std::max(0.0, d_max) + 50.0;
    double mean = mean0;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        mean = q_at(mid);
        if (std::fabs(mean - p_full) <= tol) return {q, mid};
        (mean > p_full ? lo : hi) = mid;
    }
    // interval exhausted; the midpoint is within bisection precision
    const double mid = 0.5 * (lo + hi);
    q_at(mid);
    return {q, mid};
}

double opt1_objective(const LossTerms& terms, std::span<const double> q) {
    const std::size_t n = q.size();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        s += (1.0 - q[i]) * terms.a[i] + q[i] * terms.b[i] - entropy(q[i]);
    return s / static_cast<double>(n);
}

int oracle_gate(double excess_loss, double cost_reduction, const OracleGateConfig& cfg) {
    return excess_loss <= cfg.eta * cost_reduction ? 1 : 0;
}

// ===========================================================================
// Composite system
// ===========================================================================

AdaptiveSystem AdaptiveSystem::make(Model g, Model f1, std::size_t k) {
    AdaptiveSystem s;
    s.g = std::move(g);
    s.f1 = std::move(f1);
    s.f0_used.assign(k, 1);
    return s;
}

RouteDecision route(const AdaptiveSystem& sys, std::span<const double> x,
                    std::optional<double> f0_score) {
    RouteDecision r;
    const double gs = model_score(sys.g, x);
    r.z = gs > sys.route_threshold ? 0 : 1;
    double s = 0.0;
    if (r.z == 1) {
        s = model_score(sys.f1, x);
    } else if (sys.f0_model.has_value()) {
        s = sys.f0_model->predict(x);
    } else {
        require(f0_score.has_value(), "route: example sent to the full model but no score given");
        s = *f0_score;
    }
    r.label = s >= 0.0 ? 1.0 : -1.0;
    return r;
}

void calibrate_route_threshold(AdaptiveSystem& sys, const Dataset& calib,
                               double target_f0_fraction) {
    require(target_f0_fraction >= 0.0 && target_f0_fraction <= 1.0,
            "calibrate_route_threshold: fraction outside [0,1]");
    require(calib.n > 0, "calibrate_route_threshold: empty calibration set");
    std::vector<double> scores;
    model_scores(sys.g, calib, scores);
    std::sort(scores.begin(), scores.end());
    const std::size_t idx = std::min<std::size_t>(
        static_cast<std::size_t>((1.0 - target_f0_fraction) *
                                 static_cast<double>(calib.n)),
        calib.n - 1);
    sys.route_threshold = scores[idx];
}

namespace {

double union_cost(const Dataset& ds, const std::vector<std::size_t>& a,
                  const std::vector<std::size_t>& b) {
    std::vector<std::uint8_t> used(ds.k, 0);
    for (std::size_t f : a) used[f] = 1;
    for (std::size_t f : b) used[f] = 1;
    double c = 0.0;
    for (std::size_t f = 0; f < ds.k; ++f)
        if (used[f]) c += ds.costs[f];
    return c;
}

std::vector<std::size_t> f0_feature_set(const AdaptiveSystem& sys) {
    std::vector<std::size_t> s;
    for (std::size_t f = 0; f < sys.f0_used.size(); ++f)
        if (sys.f0_used[f]) s.push_back(f);
    return s;
}

}  // namespace

CostReport system_cost(const AdaptiveSystem& sys, const Dataset& ds) {
    const auto used_g = model_used_features(sys.g);
    const double cost_cheap = union_cost(ds, used_g, model_used_features(sys.f1));
    const double cost_full = union_cost(ds, used_g, f0_feature_set(sys));

    CostReport r;
    r.per_example.resize(ds.n);
    std::size_t full = 0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        const bool to_full = model_score(sys.g, ds.row(i)) > sys.route_threshold;
        full += to_full ? 1 : 0;
        r.per_example[i] = to_full ? cost_full : cost_cheap;
    }
    r.avg_cost = k::sum(r.per_example) / static_cast<double>(ds.n);
    r.f0_fraction = static_cast<double>(full) / static_cast<double>(ds.n);
    return r;
}

EvalReport evaluate(const AdaptiveSystem& sys, const Dataset& ds,
                    const ScoreTable* f0_scores) {
    if (!sys.f0_model.has_value())
        require(f0_scores != nullptr && f0_scores->size() == ds.n,
                "evaluate: external full-model scores required");
    CostReport costs = system_cost(sys, ds);
    EvalReport rep;
    rep.avg_cost = costs.avg_cost;
    rep.f0_fraction = costs.f0_fraction;
    rep.rows.resize(ds.n);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.n; ++i) {
        std::optional<double> f0s;
        if (f0_scores != nullptr) f0s = (*f0_scores)[i];
        const RouteDecision rd = route(sys, ds.row(i), f0s);
        EvalRow& row = rep.rows[i];
        row.id = i;
        row.z = rd.z;
        row.cost = costs.per_example[i];
        row.correct = rd.label == ds.labels[i];
        correct += row.correct ? 1 : 0;
    }
    rep.accuracy = static_cast<double>(correct) / static_cast<double>(ds.n);
    return rep;
}

// ===========================================================================
// Jensen surrogate bound
// ===========================================================================

std::vector<double> jensen_gap(const GateAssignment& gate, const ScoreTable& g_scores,
                               const ScoreTable& f1_scores, const ScoreTable& f0_scores,
                               std::span<const double> labels) {
    const std::size_t n = labels.size();
    require(gate.q.size() == n && g_scores.size() == n && f1_scores.size() == n &&
                f0_scores.size() == n,
            "jensen_gap: length mismatch");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = labels[i];
        const double lsg = -k::softplus1(-g_scores[i]);   // log sigma(g)
        const double lsng = -k::softplus1(g_scores[i]);   // log sigma(-g)
        const double l0 = k::softplus1(-y * f0_scores[i]);
        const double l1 = k::softplus1(-y * f1_scores[i]);
        const double t0 = lsg - l0, t1 = lsng - l1;
        const double m = std::max(t0, t1);
        const double log_pr = m + std::log(std::exp(t0 - m) + std::exp(t1 - m));

        const double q = gate.q[i];
        const double qc = std::clamp(q, 1e-12, 1.0 - 1e-12);
        const double kl = qc * (std::log(qc) - lsg) + (1.0 - qc) * (std::log(1.0 - qc) - lsng);
        out[i] = q * l0 + (1.0 - q) * l1 + kl + log_pr;
    }
    return out;
}

double mean_logistic_loss(std::span<const double> scores, std::span<const double> labels) {
    const std::size_t n = labels.size();
    require(scores.size() == n, "mean_logistic_loss: length mismatch");
    std::vector<double> neg(n), sp(n);
    for (std::size_t i = 0; i < n; ++i) neg[i] = -labels[i] * scores[i];
    k::softplus(neg, sp);
    return k::sum(sp) / static_cast<double>(n);
}

}  // namespace costgate
