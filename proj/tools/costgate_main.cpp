// Command-line front end: synthetic data emission, reference-model training,
// single adaptive runs, grid sweeps, evaluation, and frontier extraction.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "costgate/adapt.hpp"
#include "costgate/common.hpp"
#include "costgate/harness.hpp"
#include "costgate/io.hpp"

using namespace costgate;

namespace {

struct DataArgs {
    std::string data, labels, costs;
    std::string train, validation, test;
    std::string split_fracs = "0.6,0.2,0.2";
    std::uint64_t split_seed = 0;

    void attach(CLI::App* cmd, bool with_splits) {
        cmd->add_option("--data", data, "feature CSV (labels in the trailing column "
                                        "unless --labels is given)");
        cmd->add_option("--labels", labels, "label file, one label per line");
        cmd->add_option("--costs", costs, "per-feature cost file, one cost per line");
        if (with_splits) {
            cmd->add_option("--train", train, "training feature CSV (alternative to --data)");
            cmd->add_option("--validation", validation, "validation feature CSV");
            cmd->add_option("--test", test, "test feature CSV");
            cmd->add_option("--split", split_fracs, "train,validation,test fractions for --data");
            cmd->add_option("--split-seed", split_seed, "seed for the row shuffle");
        }
    }

    Dataset load_one(const std::string& path) const {
        const LabelSource src =
            labels.empty() ? LabelSource::last_column() : LabelSource::from_file(labels);
        return load_dataset(path, src,
                            costs.empty() ? std::nullopt : std::make_optional(costs));
    }

    bool has_explicit_splits() const { return !train.empty(); }

    Splits make_splits() const {
        if (has_explicit_splits()) {
            require(!validation.empty() && !test.empty(),
                    "--train requires --validation and --test");
            require(labels.empty(),
                    "--labels is only supported with --data (per-split label files "
                    "would be ambiguous); use trailing label columns");
            Splits sp;
            sp.train = load_one(train);
            sp.validation = load_one(validation);
            sp.test = load_one(test);
            return sp;
        }
        require(!data.empty(), "either --data or --train/--validation/--test is required");
        const auto fr = parse_double_list([&] {
            std::string s = split_fracs;
            for (char& c : s)
                if (c == ',') c = ' ';
            return s;
        }());
        require(fr.size() == 3, "--split needs three fractions");
        return split(load_one(data), {fr[0], fr[1], fr[2], split_seed}, true);
    }
};

struct F0Args {
    std::string scores, train, validation, test;

    void attach(CLI::App* cmd) {
        cmd->add_option("--f0-scores", scores,
                        "reference-model score file aligned with --data");
        cmd->add_option("--f0-train", train, "reference scores for the training split");
        cmd->add_option("--f0-validation", validation, "reference scores for validation");
        cmd->add_option("--f0-test", test, "reference scores for test");
    }

    struct Tables {
        ScoreTable train, validation, test;
    };

    Tables load(const DataArgs& data_args, const Splits& sp) const {
        Tables t;
        if (!train.empty()) {
            require(!validation.empty() && !test.empty(),
                    "--f0-train requires --f0-validation and --f0-test");
            t.train = load_scores(train, sp.train);
            t.validation = load_scores(validation, sp.validation);
            t.test = load_scores(test, sp.test);
            return t;
        }
        require(!scores.empty(), "reference scores required (--f0-scores or --f0-train/...)");
        require(!data_args.has_explicit_splits(),
                "--f0-scores goes with --data; pre-split data needs --f0-train/...");
        const Dataset full = data_args.load_one(data_args.data);
        const ScoreTable all = load_scores(scores, full);
        t.train = slice_scores(all, sp.train_rows);
        t.validation = slice_scores(all, sp.validation_rows);
        t.test = slice_scores(all, sp.test_rows);
        return t;
    }
};

struct ConfigArgs {
    AdaptConfig cfg;
    std::string config_file, init_name;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_file, "key-value config file");
        cmd->add_option("--gamma", cfg.gamma, "acquisition-cost tradeoff weight");
        cmd->add_option("--p-full", cfg.p_full, "budgeted fraction routed to the full model");
        cmd->add_option("--outer-iters", cfg.outer_iters, "alternating rounds");
        cmd->add_option("--trees", cfg.trees_per_round, "trees per round (tree trainers)");
        cmd->add_option("--depth", cfg.depth, "tree depth");
        cmd->add_option("--shrinkage", cfg.shrinkage, "boosting learning rate");
        cmd->add_option("--seed", cfg.seed, "seed");
        cmd->add_option("--tolerance", cfg.tolerance, "relative-change stopping tolerance");
        cmd->add_option("--init", init_name, "linear-trainer start: logistic|ones");
    }

    AdaptConfig resolve() {
        AdaptConfig out = cfg;
        if (!config_file.empty()) {
            AdaptConfig from_file;
            apply_config_keys(read_kv_file(config_file), from_file, true);
            out = from_file;  // explicit flags below re-apply on top
        }
        if (!init_name.empty()) {
            require(init_name == "logistic" || init_name == "ones",
                    "--init must be logistic or ones");
            out.init = init_name == "ones" ? LinearInit::ones : LinearInit::logistic;
        }
        return out;
    }
};

AdaptResult run_trainer(const std::string& name, const Dataset& train,
                        const ScoreTable& f0, const AdaptConfig& cfg) {
    if (name == "lin" || name == "adapt_lin") return adapt_lin(train, f0, cfg);
    if (name == "gbrt" || name == "adapt_gbrt") return adapt_gbrt(train, f0, cfg);
    if (name == "lstsq" || name == "adapt_lstsq") return adapt_lstsq(train, f0, cfg);
    fail("unknown trainer: " + name + " (expected lin, gbrt, or lstsq)");
}

void print_eval(const char* split_name, const EvalReport& rep) {
    std::printf("%s: accuracy=%s avg_cost=%s f0_fraction=%s\n", split_name,
                format_double(rep.accuracy).c_str(), format_double(rep.avg_cost).c_str(),
                format_double(rep.f0_fraction).c_str());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"budget-adaptive gated prediction toolkit"};
    app.require_subcommand(1);

    // ---- synth ----
    auto* synth = app.add_subcommand("synth", "emit a built-in synthetic dataset");
    int which = 2;
    std::uint64_t synth_seed = 17;
    std::string out_features = "synth.csv", out_costs = "synth.costs";
    synth->add_option("variant", which, "1 or 2")->required();
    synth->add_option("--seed", synth_seed, "generator seed (variant 1 only)");
    synth->add_option("--out-features", out_features, "feature CSV with trailing labels");
    synth->add_option("--out-costs", out_costs, "cost file");

    // ---- train-f0 ----
    auto* trainf0 = app.add_subcommand("train-f0",
                                       "train an unconstrained boosted reference model "
                                       "and emit score files");
    DataArgs f0_data;
    f0_data.attach(trainf0, false);
    int f0_trees = 100, f0_depth = 4;
    double f0_shrinkage = 0.1;
    std::string out_scores = "f0.scores";
    std::vector<std::string> apply_specs;
    trainf0->add_option("--trees", f0_trees, "boosting rounds");
    trainf0->add_option("--depth", f0_depth, "tree depth");
    trainf0->add_option("--shrinkage", f0_shrinkage, "learning rate");
    trainf0->add_option("--out-scores", out_scores, "score file for --data");
    trainf0->add_option("--apply", apply_specs,
                        "extra datasets to score, as features.csv=scores.out");

    // ---- adapt ----
    auto* adapt = app.add_subcommand("adapt", "train one adaptive system");
    std::string trainer_name_arg = "lin";
    DataArgs adapt_data;
    F0Args adapt_f0;
    ConfigArgs adapt_cfg;
    bool calibrate = false;
    std::string out_system, out_trace, out_report;
    adapt->add_option("--trainer", trainer_name_arg, "lin | gbrt | lstsq");
    adapt_data.attach(adapt, true);
    adapt_f0.attach(adapt);
    adapt_cfg.attach(adapt);
    adapt->add_flag("--calibrate-threshold", calibrate,
                    "set the routing threshold so the training split routes "
                    "p_full of examples to the full model");
    adapt->add_option("--out-system", out_system, "system file");
    adapt->add_option("--out-trace", out_trace, "objective trace file");
    adapt->add_option("--out-report", out_report, "per-example test report CSV");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "grid sweep, points CSV out");
    std::string sweep_trainer = "adapt_lin", grid_file, out_points = "points.csv";
    bool sweep_gnuplot = false;
    DataArgs sweep_data;
    F0Args sweep_f0;
    sweep_cmd->add_option("--trainer", sweep_trainer,
                          "adapt_lin | adapt_gbrt | adapt_lstsq | l1_baseline | greedy_miser");
    sweep_data.attach(sweep_cmd, true);
    sweep_f0.attach(sweep_cmd);
    sweep_cmd->add_option("--grid", grid_file, "config file with gammas/p_fulls/shrinkages")
        ->required();
    sweep_cmd->add_option("--out", out_points, "points CSV");
    sweep_cmd->add_flag("--gnuplot", sweep_gnuplot, "also write a gnuplot script");

    // ---- eval ----
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a system file on a dataset");
    std::string system_file, eval_scores, eval_report = "report.csv";
    DataArgs eval_data;
    eval_cmd->add_option("--system", system_file, "system file")->required();
    eval_data.attach(eval_cmd, false);
    eval_cmd->add_option("--f0-scores", eval_scores, "reference score file");
    eval_cmd->add_option("--out", eval_report, "per-example report CSV");

    // ---- frontier ----
    auto* frontier_cmd = app.add_subcommand("frontier", "points CSV -> frontier CSV");
    std::string points_in, frontier_out = "frontier.csv";
    double budget = -1.0;
    bool frontier_gnuplot = false;
    frontier_cmd->add_option("--points", points_in, "input points CSV")->required();
    frontier_cmd->add_option("--out", frontier_out, "frontier CSV");
    frontier_cmd->add_option("--budget", budget, "print the best point within this budget");
    frontier_cmd->add_flag("--gnuplot", frontier_gnuplot, "also write a gnuplot script");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            const Dataset ds = which == 1 ? gen_synthetic1(synth_seed) : gen_synthetic2();
            require(which == 1 || which == 2, "synth variant must be 1 or 2");
            save_dataset(ds, out_features, out_costs);
            std::printf("wrote %s (%zu rows, %zu features) and %s\n", out_features.c_str(),
                        ds.n, ds.k, out_costs.c_str());
        } else if (trainf0->parsed()) {
            require(!f0_data.data.empty(), "--data is required");
            const Dataset ds = f0_data.load_one(f0_data.data);
            const TreeEnsemble model = train_gbrt(ds, f0_trees, f0_depth, f0_shrinkage);
            ScoreTable scores;
            model.scores(MatrixView::of(ds), scores.values);
            save_scores(scores, out_scores);
            std::printf("wrote %s\n", out_scores.c_str());
            for (const std::string& spec : apply_specs) {
                const std::size_t eq = spec.find('=');
                require(eq != std::string::npos, "--apply expects features.csv=scores.out");
                const Dataset other = f0_data.load_one(spec.substr(0, eq));
                ScoreTable s;
                model.scores(MatrixView::of(other), s.values);
                save_scores(s, spec.substr(eq + 1));
                std::printf("wrote %s\n", spec.substr(eq + 1).c_str());
            }
        } else if (adapt->parsed()) {
            const Splits sp = adapt_data.make_splits();
            const F0Args::Tables f0 = adapt_f0.load(adapt_data, sp);
            const AdaptConfig cfg = adapt_cfg.resolve();
            AdaptResult res = run_trainer(trainer_name_arg, sp.train, f0.train, cfg);
            if (calibrate) calibrate_route_threshold(res.system, sp.train, cfg.p_full);
            print_eval("validation", evaluate(res.system, sp.validation, &f0.validation));
            const EvalReport test_rep = evaluate(res.system, sp.test, &f0.test);
            print_eval("test", test_rep);
            if (!out_system.empty()) {
                AdaptiveSystem& sys = res.system;
                sys.f0_reference = adapt_f0.scores.empty() ? adapt_f0.train : adapt_f0.scores;
                save_system(sys, out_system);
            }
            if (!out_trace.empty()) save_trace(res.trace, out_trace);
            if (!out_report.empty()) save_eval_report(test_rep, out_report);
        } else if (sweep_cmd->parsed()) {
            const Splits sp = sweep_data.make_splits();
            const F0Args::Tables f0 = sweep_f0.load(sweep_data, sp);
            const auto kv = read_kv_file(grid_file);
            AdaptConfig base;
            apply_config_keys(kv, base, true);
            SweepGrid grid;
            if (kv.count("gammas")) grid.gammas = parse_double_list(kv.at("gammas"));
            if (kv.count("p_fulls")) grid.p_fulls = parse_double_list(kv.at("p_fulls"));
            if (kv.count("shrinkages")) grid.shrinkages = parse_double_list(kv.at("shrinkages"));
            const SweepData data{sp, f0.train, f0.validation, f0.test};
            const auto points = sweep(trainer_from_name(sweep_trainer), data, grid, base);
            export_curve(points, out_points, sweep_gnuplot);
            std::printf("wrote %s (%zu points)\n", out_points.c_str(), points.size());
        } else if (eval_cmd->parsed()) {
            require(!eval_data.data.empty(), "--data is required");
            const Dataset ds = eval_data.load_one(eval_data.data);
            const AdaptiveSystem sys = load_system(system_file);
            ScoreTable scores;
            const ScoreTable* scores_ptr = nullptr;
            if (!eval_scores.empty()) {
                scores = load_scores(eval_scores, ds);
                scores_ptr = &scores;
            }
            const EvalReport rep = evaluate(sys, ds, scores_ptr);
            print_eval("eval", rep);
            save_eval_report(rep, eval_report);
        } else if (frontier_cmd->parsed()) {
            const auto points = load_curve(points_in);
            const auto front = pareto_frontier(points);
            export_curve(front, frontier_out, frontier_gnuplot);
            std::printf("wrote %s (%zu of %zu points)\n", frontier_out.c_str(), front.size(),
                        points.size());
            if (budget >= 0.0) {
                const TradeoffPoint pick = pick_budget(front, budget);
                std::printf("budget %s -> cost=%s accuracy=%s (%s)\n",
                            format_double(budget).c_str(),
                            format_double(pick.avg_cost).c_str(),
                            format_double(pick.accuracy).c_str(), trainer_name(pick.trainer));
            }
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
