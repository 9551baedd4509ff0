#pragma once

#include <memory>
#include <string>
#include <vector>

#include "costgate/adapt.hpp"

namespace costgate {

enum class Trainer { adapt_lin, adapt_gbrt, adapt_lstsq, l1_baseline, greedy_miser };

const char* trainer_name(Trainer t);
Trainer trainer_from_name(const std::string& name);

struct SweepGrid {
    std::vector<double> gammas{0.1};
    std::vector<double> p_fulls{0.5};
    std::vector<double> shrinkages{0.1};

    void validate() const;
    std::size_t cells() const { return gammas.size() * p_fulls.size() * shrinkages.size(); }
};

struct TradeoffPoint {
    double avg_cost = 0.0;
    double accuracy = 0.0;
    double f0_fraction = 0.0;
    AdaptConfig config;
    Trainer trainer = Trainer::adapt_lin;
    int config_index = 0;
    std::string split_name = "validation";
    std::shared_ptr<const AdaptiveSystem> system;  // null for points read from disk
};

struct SweepData {
    const Splits& splits;
    const ScoreTable& f0_train;
    const ScoreTable& f0_validation;
    const ScoreTable& f0_test;
};

// One trained system per grid cell (per produced system for the baseline),
// evaluated on the validation split.  Cells run concurrently with seeds
// derived from (base seed, cell index); individual failures are skipped,
// an entirely failed sweep is an error.
std::vector<TradeoffPoint> sweep(Trainer trainer, const SweepData& data,
                                 const SweepGrid& grid, const AdaptConfig& base);

// Undominated points sorted by cost ascending; accuracy is then
// non-decreasing.  Duplicates keep the lowest config index.
std::vector<TradeoffPoint> pareto_frontier(const std::vector<TradeoffPoint>& points);

// Highest-accuracy frontier point within the budget.
TradeoffPoint pick_budget(const std::vector<TradeoffPoint>& frontier, double budget);

void export_curve(const std::vector<TradeoffPoint>& points, const std::string& path,
                  bool gnuplot_script = false);
std::vector<TradeoffPoint> load_curve(const std::string& path);

}  // namespace costgate
