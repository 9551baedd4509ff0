#include "costgate/harness.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <thread>

#include "costgate/common.hpp"
#include "costgate/io.hpp"

namespace costgate {

const char* trainer_name(Trainer t) {
    switch (t) {
        case Trainer::adapt_lin: return "adapt_lin";
        case Trainer::adapt_gbrt: return "adapt_gbrt";
        case Trainer::adapt_lstsq: return "adapt_lstsq";
        case Trainer::l1_baseline: return "l1_baseline";
        case Trainer::greedy_miser: return "greedy_miser";
    }
    return "?";
}

Trainer trainer_from_name(const std::string& name) {
    for (Trainer t : {Trainer::adapt_lin, Trainer::adapt_gbrt, Trainer::adapt_lstsq,
                      Trainer::l1_baseline, Trainer::greedy_miser})
        if (name == trainer_name(t)) return t;
    fail("unknown trainer: " + name);
}

void SweepGrid::validate() const {
    require(!gammas.empty() && !p_fulls.empty() && !shrinkages.empty(),
            "sweep grid must be non-empty in every dimension");
}

namespace {

TradeoffPoint evaluate_point(const SweepData& data, AdaptiveSystem sys, Trainer trainer,
                             const AdaptConfig& cfg, int index) {
    auto shared = std::make_shared<AdaptiveSystem>(std::move(sys));
    const EvalReport rep = evaluate(*shared, data.splits.validation, &data.f0_validation);
    TradeoffPoint p;
    p.avg_cost = rep.avg_cost;
    p.accuracy = rep.accuracy;
    p.f0_fraction = rep.f0_fraction;
    p.config = cfg;
    p.trainer = trainer;
    p.config_index = index;
    p.split_name = "validation";
    p.system = std::move(shared);
    return p;
}

}  // namespace

std::vector<TradeoffPoint> sweep(Trainer trainer, const SweepData& data,
                                 const SweepGrid& grid, const AdaptConfig& base) {
    grid.validate();
    require(data.f0_train.size() == data.splits.train.n &&
                data.f0_validation.size() == data.splits.validation.n,
            "sweep: score tables misaligned with splits");

    if (trainer == Trainer::l1_baseline) {
        for (double cw : grid.p_fulls)
            require(cw > 0.0 && cw < 1.0,
                    "l1_baseline sweep: p_fulls double as class weights and must be in (0,1)");
        auto systems = l1_baseline(data.splits.train, data.splits.validation, data.f0_train,
                                   grid.gammas, grid.p_fulls);
        require(!systems.empty(), "sweep: baseline produced no systems");
        std::vector<TradeoffPoint> points;
        points.reserve(systems.size());
        for (std::size_t i = 0; i < systems.size(); ++i) {
            AdaptConfig cfg = base;
            // systems come out supports-major, class-weight-minor
            cfg.p_full = grid.p_fulls[i % grid.p_fulls.size()];
            points.push_back(evaluate_point(data, std::move(systems[i]), trainer, cfg,
                                            static_cast<int>(i)));
        }
        return points;
    }

    struct Cell {
        AdaptConfig cfg;
        int index;
    };
    std::vector<Cell> cells;
    int index = 0;
    for (double gamma : grid.gammas)
        for (double p_full : grid.p_fulls)
            for (double shrink : grid.shrinkages) {
                AdaptConfig cfg = base;
                cfg.gamma = gamma;
                cfg.p_full = p_full;
                cfg.shrinkage = shrink;
                cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(index));
                cells.push_back({cfg, index});
                ++index;
            }

    std::vector<std::optional<TradeoffPoint>> slots(cells.size());
    std::vector<std::string> errors(cells.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& cell = cells[i];
            try {
                AdaptResult res;
                switch (trainer) {
                    case Trainer::adapt_lin:
                        res = adapt_lin(data.splits.train, data.f0_train, cell.cfg);
                        break;
                    case Trainer::adapt_gbrt:
                        res = adapt_gbrt(data.splits.train, data.f0_train, cell.cfg);
                        break;
                    case Trainer::adapt_lstsq:
                        res = adapt_lstsq(data.splits.train, data.f0_train, cell.cfg);
                        break;
                    case Trainer::greedy_miser: {
                        const int total = cell.cfg.trees_per_round * cell.cfg.outer_iters;
                        TreeEnsemble f1 = greedy_miser(data.splits.train, total,
                                                       cell.cfg.depth, cell.cfg.shrinkage,
                                                       cell.cfg.gamma);
                        res.system = AdaptiveSystem::make(
                            TreeEnsemble::empty(cell.cfg.shrinkage), std::move(f1),
                            data.splits.train.k);
                        break;
                    }
                    default:
                        fail("unreachable trainer");
                }
                slots[i] = evaluate_point(data, std::move(res.system), trainer, cell.cfg,
                                          cell.index);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    const std::size_t nthreads =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), cells.size());
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::vector<TradeoffPoint> points;
    for (auto& s : slots)
        if (s.has_value()) points.push_back(std::move(*s));
    if (points.empty()) {
        std::string detail;
        for (const auto& e : errors)
            if (!e.empty()) {
                detail = e;
                break;
            }
        fail("sweep: every cell failed; first error: " + detail);
    }
    return points;
}

std::vector<TradeoffPoint> pareto_frontier(const std::vector<TradeoffPoint>& points) {
    require(!points.empty(), "pareto_frontier: no points");
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].avg_cost != points[b].avg_cost)
            return points[a].avg_cost < points[b].avg_cost;
        if (points[a].accuracy != points[b].accuracy)
            return points[a].accuracy > points[b].accuracy;
        return points[a].config_index < points[b].config_index;
    });
    std::vector<TradeoffPoint> frontier;
    double best_acc = -1.0;
    for (std::size_t idx : order) {
        if (points[idx].accuracy > best_acc) {
            frontier.push_back(points[idx]);
            best_acc = points[idx].accuracy;
        }
    }
    return frontier;
}

TradeoffPoint pick_budget(const std::vector<TradeoffPoint>& frontier, double budget) {
    require(!frontier.empty(), "pick_budget: empty frontier");
    const TradeoffPoint* best = nullptr;
    for (const TradeoffPoint& p : frontier) {
        if (p.avg_cost > budget) continue;
        if (best == nullptr || p.accuracy > best->accuracy ||
            (p.accuracy == best->accuracy && p.avg_cost < best->avg_cost))
            best = &p;
    }
    require(best != nullptr, "pick_budget: no frontier point within budget " +
                                 format_double(budget));
    return *best;
}

void export_curve(const std::vector<TradeoffPoint>& points, const std::string& path,
                  bool gnuplot_script) {
    require(!points.empty(), "export_curve: no points");
    std::ofstream out(path);
    require(out.good(), "cannot write file: " + path);
    out << "cost,accuracy,f0_fraction,gamma,p_full,shrinkage,trainer\n";
    for (const TradeoffPoint& p : points)
        out << format_double(p.avg_cost) << ',' << format_double(p.accuracy) << ','
            << format_double(p.f0_fraction) << ',' << format_double(p.config.gamma) << ','
            << format_double(p.config.p_full) << ',' << format_double(p.config.shrinkage)
            << ',' << trainer_name(p.trainer) << '\n';
    if (gnuplot_script) {
        std::ofstream gp(path + ".gp");
        require(gp.good(), "cannot write file: " + path + ".gp");
        gp << "set datafile separator ','\n"
           << "set xlabel 'average cost'\n"
           << "set ylabel 'accuracy'\n"
           << "set key bottom right\n"
           << "plot '" << path << "' using 1:2 skip 1 with linespoints title 'tradeoff'\n";
    }
}

std::vector<TradeoffPoint> load_curve(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), path + ": empty file");
    std::vector<TradeoffPoint> points;
    int index = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<std::string> fields;
        while (std::getline(ss, tok, ',')) fields.push_back(tok);
        require(fields.size() == 7, path + ": expected 7 columns");
        TradeoffPoint p;
        p.avg_cost = std::stod(fields[0]);
        p.accuracy = std::stod(fields[1]);
        p.f0_fraction = std::stod(fields[2]);
        p.config.gamma = std::stod(fields[3]);
        p.config.p_full = std::stod(fields[4]);
        p.config.shrinkage = std::stod(fields[5]);
        p.trainer = trainer_from_name(fields[6]);
        p.config_index = index++;
        points.push_back(std::move(p));
    }
    require(!points.empty(), path + ": no points");
    return points;
}

}  // namespace costgate
