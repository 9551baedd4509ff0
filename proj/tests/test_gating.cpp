#include <doctest.h>

#include <cmath>

#include "costgate/common.hpp"
#include "costgate/gating.hpp"
#include "oracles.hpp"

using namespace costgate;

namespace {

LossTerms random_terms(Rng& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
    LossTerms t;
    t.a.resize(n);
    t.b.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        t.a[i] = rng.uniform(lo, hi);
        t.b[i] = rng.uniform(lo, hi);
    }
    return t;
}

AdaptiveSystem small_system(std::vector<double> gw, double gb, std::vector<double> fw,
                            double fb, std::size_t k) {
    LinearModel g{std::move(gw), gb};
    LinearModel f1{std::move(fw), fb};
    return AdaptiveSystem::make(std::move(g), std::move(f1), k);
}

}  // namespace

TEST_CASE("compute_loss_terms: zero scores give the symmetric 2log2 value") {
    const std::vector<double> y{1.0};
    const ScoreTable z{{0.0}};
    const LossTerms t = compute_loss_terms(y, z, z, z);
    CHECK(t.a[0] == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(t.b[0] == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("compute_loss_terms: confident full model and overflow safety") {
    const std::vector<double> y{1.0};
    const LossTerms t = compute_loss_terms(y, ScoreTable{{0.0}}, ScoreTable{{0.0}},
                                           ScoreTable{{10.0}});
    // b = softplus(-10) + softplus(0)
    CHECK(t.b[0] - std::log(2.0) == doctest::Approx(std::log1p(std::exp(-10.0))).epsilon(1e-9));
    CHECK(t.b[0] - std::log(2.0) == doctest::Approx(4.5398e-5).epsilon(1e-3));

    const LossTerms big = compute_loss_terms(y, ScoreTable{{0.0}}, ScoreTable{{1000.0}},
                                             ScoreTable{{0.0}});
    CHECK(std::isfinite(big.a[0]));
    CHECK(std::isfinite(big.b[0]));
}

TEST_CASE("solve_opt1: symmetric terms sit at one half with a slack constraint") {
    LossTerms t;
    t.a = {0.3, 1.2, 0.7};
    t.b = t.a;
    const GateAssignment gate = solve_opt1(t, 0.5);
    CHECK(gate.beta == 0.0);
    for (double q : gate.q) CHECK(q == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_opt1: the two-example binding case has dual value one") {
    LossTerms t;
    t.a = {1.0, 1.0};
    t.b = {0.0, 0.0};
    const GateAssignment gate = solve_opt1(t, 0.5, 1e-10);
    CHECK(gate.beta == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(gate.q[0] == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(gate.q[1] == doctest::Approx(0.5).epsilon(1e-8));

    // grid oracle agrees
    const double oracle = oracles::opt1_grid_oracle(t, 0.5, 1000);
    CHECK(std::fabs(opt1_objective(t, gate.q) - oracle) < 1e-6);
}

TEST_CASE("solve_opt1: objective matches the constrained grid oracle") {
    Rng rng(31);
    // budgets on the grid lattice so the oracle can meet the boundary exactly
    const double budgets[] = {0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    for (int t = 0; t < 25; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 3));
        const LossTerms terms = random_terms(rng, n);
        const double p_full = budgets[rng.uniform_int(0, 6)];
        const GateAssignment gate = solve_opt1(terms, p_full, 1e-10);
        const double obj = opt1_objective(terms, gate.q);
        const double oracle = oracles::opt1_grid_oracle(terms, p_full, 1000);
        CHECK(std::fabs(obj - oracle) < 1e-6);
    }
}

TEST_CASE("grid-oracle DP equals naive filtered enumeration at coarse resolution") {
    Rng rng(32);
    for (int t = 0; t < 10; ++t) {
        const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 1));
        const LossTerms terms = random_terms(rng, n);
        const double p_full = rng.uniform(0.2, 0.9);
        CHECK(oracles::opt1_grid_oracle(terms, p_full, 50) ==
              doctest::Approx(oracles::opt1_grid_naive(terms, p_full, 50)).epsilon(1e-12));
    }
}

TEST_CASE("solve_opt1: complementary slackness and feasibility") {
    Rng rng(33);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 5));
        const LossTerms terms = random_terms(rng, n, -2.0, 2.0);
        const double p_full = rng.uniform(0.05, 1.0);
        const GateAssignment gate = solve_opt1(terms, p_full, 1e-8);
        CHECK(gate.beta >= 0.0);
        CHECK(gate.mean() <= p_full + 1e-6);
        if (gate.beta > 0.0) CHECK(std::fabs(gate.mean() - p_full) <= 1e-6);
    }
}

TEST_CASE("solve_opt1: p_full of zero forces the all-cheap assignment") {
    Rng rng(34);
    const LossTerms terms = random_terms(rng, 6);
    const GateAssignment gate = solve_opt1(terms, 0.0);
    for (double q : gate.q) CHECK(q == 0.0);
    CHECK(gate.beta > 0.0);
}

TEST_CASE("solve_opt1: raising the budget never raises the optimum") {
    Rng rng(35);
    const LossTerms terms = random_terms(rng, 5, -1.0, 2.0);
    double prev = 1e300;
    for (double p : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
        const GateAssignment gate = solve_opt1(terms, p, 1e-10);
        const double obj = opt1_objective(terms, gate.q);
        CHECK(obj <= prev + 1e-9);
        prev = obj;
    }
}

TEST_CASE("solve_opt1: rejects a budget outside the unit interval") {
    LossTerms t;
    t.a = {1.0};
    t.b = {0.0};
    CHECK_THROWS_AS(solve_opt1(t, -0.1), Error);
    CHECK_THROWS_AS(solve_opt1(t, 1.5), Error);
}

TEST_CASE("oracle_gate: rule direction and tie-break") {
    const OracleGateConfig cfg{0.1};
    CHECK(oracle_gate(0.2, 1.0, cfg) == 0);
    CHECK(oracle_gate(0.05, 1.0, cfg) == 1);
    CHECK(oracle_gate(0.1, 1.0, cfg) == 1);
}

TEST_CASE("route: sign convention, tie-break, degenerate gate") {
    AdaptiveSystem sys = small_system({1.0}, 0.0, {-1.0}, 0.0, 1);
    // gate score +2 routes to the full model
    const RouteDecision full = route(sys, std::vector<double>{2.0}, 3.0);
    CHECK(full.z == 0);
    CHECK(full.label == 1.0);

    // gate score exactly at the threshold stays cheap
    const RouteDecision cheap = route(sys, std::vector<double>{0.0});
    CHECK(cheap.z == 1);
    CHECK(cheap.label == 1.0);  // f1 score 0 predicts +1

    AdaptiveSystem negative = small_system({0.0}, -5.0, {1.0}, 0.0, 1);
    Dataset ds;
    ds.n = 8;
    ds.k = 1;
    ds.costs = {1.0};
    Rng rng(36);
    for (std::size_t i = 0; i < ds.n; ++i) {
        ds.features.push_back(rng.uniform(-1.0, 1.0));
        ds.labels.push_back(1.0);
    }
    CHECK(system_cost(negative, ds).f0_fraction == 0.0);
}

TEST_CASE("route: scaling the gate leaves decisions unchanged") {
    Rng rng(37);
    Dataset ds;
    ds.n = 50;
    ds.k = 2;
    ds.costs = {1.0, 1.0};
    for (std::size_t i = 0; i < ds.n * ds.k; ++i) ds.features.push_back(rng.uniform(-2.0, 2.0));
    for (std::size_t i = 0; i < ds.n; ++i) ds.labels.push_back(1.0);

    AdaptiveSystem a = small_system({0.7, -0.2}, 0.1, {1.0, 0.0}, 0.0, 2);
    AdaptiveSystem b = small_system({7.0, -2.0}, 1.0, {1.0, 0.0}, 0.0, 2);
    for (std::size_t i = 0; i < ds.n; ++i)
        CHECK(route(a, ds.row(i), 1.0).z == route(b, ds.row(i), 1.0).z);
}

TEST_CASE("system_cost: unique-feature union per branch") {
    Dataset ds;
    ds.n = 2;
    ds.k = 5;
    ds.costs.assign(5, 1.0);
    ds.features = {5.0, 0, 0, 0, 0,   // routes to full (gate weight on f0 > 0)
                   -5.0, 0, 0, 0, 0}; // routes to cheap
    ds.labels = {1.0, 1.0};
    AdaptiveSystem sys = small_system({1.0, 0, 0, 0, 0}, 0.0, {1.0, 1.0, 0, 0, 0}, 0.0, 5);

    const CostReport rep = system_cost(sys, ds);
    CHECK(rep.per_example[0] == doctest::Approx(5.0));  // gate {0} + all five
    CHECK(rep.per_example[1] == doctest::Approx(2.0));  // gate {0} + f1 {0,1}
    CHECK(rep.f0_fraction == doctest::Approx(0.5));

    // all-cheap variant: avg equals the cheap-branch cost
    AdaptiveSystem cheap = small_system({0.0, 0, 0, 0, 0}, -1.0, {1.0, 1.0, 0, 0, 0}, 0.0, 5);
    const CostReport rep2 = system_cost(cheap, ds);
    CHECK(rep2.f0_fraction == 0.0);
    CHECK(rep2.avg_cost == doctest::Approx(2.0));
}

TEST_CASE("system_cost: decomposition identity holds exactly") {
    Rng rng(38);
    for (int t = 0; t < 20; ++t) {
        Dataset ds;
        ds.n = 30;
        ds.k = 4;
        for (std::size_t a = 0; a < ds.k; ++a) ds.costs.push_back(rng.uniform(0.0, 3.0));
        for (std::size_t i = 0; i < ds.n * ds.k; ++i)
            ds.features.push_back(rng.uniform(-2.0, 2.0));
        for (std::size_t i = 0; i < ds.n; ++i) ds.labels.push_back(1.0);

        std::vector<double> gw(ds.k), fw(ds.k);
        for (std::size_t a = 0; a < ds.k; ++a) {
            gw[a] = rng.uniform() < 0.5 ? 0.0 : rng.uniform(-1.0, 1.0);
            fw[a] = rng.uniform() < 0.5 ? 0.0 : rng.uniform(-1.0, 1.0);
        }
        AdaptiveSystem sys = small_system(gw, rng.uniform(-0.5, 0.5), fw, 0.0, ds.k);

        const CostReport rep = system_cost(sys, ds);
        std::vector<bool> cheap_set(ds.k, false);
        for (auto a : model_used_features(sys.g)) cheap_set[a] = true;
        for (auto a : model_used_features(sys.f1)) cheap_set[a] = true;
        double c_cheap = 0.0, c_full = 0.0;
        for (std::size_t a = 0; a < ds.k; ++a) {
            if (cheap_set[a]) c_cheap += ds.costs[a];
            c_full += ds.costs[a];  // default full-model set is every feature
        }
        const double reconstructed = c_cheap + rep.f0_fraction * (c_full - c_cheap);
        CHECK(rep.avg_cost == doctest::Approx(reconstructed).epsilon(1e-12));
    }
}

TEST_CASE("calibrate_route_threshold realizes the requested fraction") {
    Rng rng(40);
    Dataset ds;
    ds.n = 200;
    ds.k = 2;
    ds.costs = {1.0, 1.0};
    for (std::size_t i = 0; i < ds.n * ds.k; ++i) ds.features.push_back(rng.uniform(-2.0, 2.0));
    for (std::size_t i = 0; i < ds.n; ++i) ds.labels.push_back(1.0);
    AdaptiveSystem sys = small_system({0.9, -0.4}, 0.2, {1.0, 0.0}, 0.0, 2);

    for (double target : {0.0, 0.25, 0.5, 0.75}) {
        calibrate_route_threshold(sys, ds, target);
        const double got = system_cost(sys, ds).f0_fraction;
        CHECK(std::fabs(got - target) <= 1.0 / static_cast<double>(ds.n) + 1e-12);
    }
    calibrate_route_threshold(sys, ds, 0.0);
    CHECK(system_cost(sys, ds).f0_fraction == 0.0);
}

TEST_CASE("system_cost: the optimal synthetic-2 system") {
    // gate and cheap model on feature 2 only; clusters 1,2 go to the full model.
    // With cluster sizes 20/20/15/15 the exact optimum is (40*2 + 30*1)/70 = 11/7.
    const Dataset ds = gen_synthetic2();
    AdaptiveSystem sys = small_system({0.0, 5.0}, 0.0, {0.0, 5.0}, 10.0, 2);
    const CostReport rep = system_cost(sys, ds);
    CHECK(rep.f0_fraction == doctest::Approx(40.0 / 70.0));
    CHECK(rep.avg_cost == doctest::Approx(11.0 / 7.0).epsilon(1e-12));

    const ScoreTable f0 = oracles::perfect_scores(ds);
    const EvalReport ev = evaluate(sys, ds, &f0);
    CHECK(ev.accuracy == 1.0);
}

TEST_CASE("jensen_gap: zero at the posterior, non-negative elsewhere") {
    Rng rng(39);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(0, 5));
        std::vector<double> y(n);
        ScoreTable g, f1, f0;
        g.values.resize(n);
        f1.values.resize(n);
        f0.values.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform() < 0.5 ? -1.0 : 1.0;
            g.values[i] = rng.uniform(-4.0, 4.0);
            f1.values[i] = rng.uniform(-4.0, 4.0);
            f0.values[i] = rng.uniform(-4.0, 4.0);
        }

        GateAssignment posterior;
        posterior.q.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double p0 = oracles::sigmoid_ref(y[i] * f0.values[i]);
            const double p1 = oracles::sigmoid_ref(y[i] * f1.values[i]);
            const double sg = oracles::sigmoid_ref(g.values[i]);
            posterior.q[i] = sg * p0 / (sg * p0 + (1.0 - sg) * p1);
        }
        for (double v : jensen_gap(posterior, g, f1, f0, y))
            CHECK(std::fabs(v) <= 1e-9);

        GateAssignment arbitrary;
        arbitrary.q.resize(n);
        for (double& v : arbitrary.q) v = rng.uniform();
        for (double v : jensen_gap(arbitrary, g, f1, f0, y)) CHECK(v >= -1e-9);
    }
}

TEST_CASE("jensen_gap: hard assignments equal the negative log branch share") {
    const std::vector<double> y{1.0, -1.0, 1.0};
    const ScoreTable g{{0.5, -1.0, 2.0}};
    const ScoreTable f1{{1.0, 0.3, -0.7}};
    const ScoreTable f0{{3.0, -2.5, 1.4}};
    GateAssignment hard;
    hard.q = {1.0, 0.0, 1.0};
    const std::vector<double> gap = jensen_gap(hard, g, f1, f0, y);
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double p0 = oracles::sigmoid_ref(y[i] * f0.values[i]);
        const double p1 = oracles::sigmoid_ref(y[i] * f1.values[i]);
        const double sg = oracles::sigmoid_ref(g.values[i]);
        const double pr = sg * p0 + (1.0 - sg) * p1;
        const double share = hard.q[i] == 1.0 ? sg * p0 / pr : (1.0 - sg) * p1 / pr;
        CHECK(gap[i] == doctest::Approx(-std::log(share)).epsilon(1e-7));
        CHECK(gap[i] >= 0.0);
    }
}
