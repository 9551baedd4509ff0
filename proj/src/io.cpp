#include "costgate/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "costgate/common.hpp"

namespace costgate {

namespace {

std::string next_line(std::istream& in, const char* what) {
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) return line;
    }
    fail(std::string("model file truncated while reading ") + what);
}

double parse_num(const std::string& tok, const char* what) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    require(end != tok.c_str() && *end == '\0',
            std::string("bad numeric field in ") + what + ": " + tok);
    return v;
}

}  // namespace

void save_linear(const LinearModel& m, std::ostream& out) {
    out << "costgate.linear.v1\n";
    out << "k " << m.weights.size() << '\n';
    out << "intercept " << format_double(m.intercept) << '\n';
    out << "weights";
    for (double w : m.weights) out << ' ' << format_double(w);
    out << '\n';
}

LinearModel load_linear(std::istream& in) {
    require(next_line(in, "linear header") == "costgate.linear.v1",
            "unexpected linear model header");
    LinearModel m;
    std::size_t k = 0;
    {
        std::istringstream ss(next_line(in, "k"));
        std::string key;
        ss >> key >> k;
        require(key == "k", "expected 'k' line");
    }
    {
        std::istringstream ss(next_line(in, "intercept"));
        std::string key, val;
        ss >> key >> val;
        require(key == "intercept", "expected 'intercept' line");
        m.intercept = parse_num(val, "intercept");
    }
    {
        std::istringstream ss(next_line(in, "weights"));
        std::string key;
        ss >> key;
        require(key == "weights", "expected 'weights' line");
        std::string tok;
        while (ss >> tok) m.weights.push_back(parse_num(tok, "weights"));
        require(m.weights.size() == k, "weight count does not match k");
    }
    return m;
}

void save_ensemble(const TreeEnsemble& e, std::ostream& out) {
    out << "costgate.ensemble.v1\n";
    out << "shrinkage " << format_double(e.shrinkage) << '\n';
    out << "base " << format_double(e.base_score) << '\n';
    out << "trees " << e.trees.size() << '\n';
    for (const RegressionTree& t : e.trees) {
        out << "tree " << t.nodes.size() << ' ' << t.max_depth << '\n';
        for (const TreeNode& nd : t.nodes) {
            if (nd.is_leaf)
                out << "leaf " << format_double(nd.value) << '\n';
            else
                out << "split " << nd.feature << ' ' << format_double(nd.threshold) << ' '
                    << nd.left << ' ' << nd.right << '\n';
        }
    }
}

TreeEnsemble load_ensemble(std::istream& in) {
    require(next_line(in, "ensemble header") == "costgate.ensemble.v1",
            "unexpected ensemble header");
    TreeEnsemble e;
    std::size_t ntrees = 0;
    {
        std::istringstream ss(next_line(in, "shrinkage"));
        std::string key, val;
        ss >> key >> val;
        require(key == "shrinkage", "expected 'shrinkage' line");
        e.shrinkage = parse_num(val, "shrinkage");
    }
    {
        std::istringstream ss(next_line(in, "base"));
        std::string key, val;
        ss >> key >> val;
        require(key == "base", "expected 'base' line");
        e.base_score = parse_num(val, "base");
    }
    {
        std::istringstream ss(next_line(in, "trees"));
        std::string key;
        ss >> key >> ntrees;
        require(key == "trees", "expected 'trees' line");
    }
    for (std::size_t t = 0; t < ntrees; ++t) {
        std::istringstream hs(next_line(in, "tree header"));
        std::string key;
        std::size_t nodes = 0;
        int depth = 0;
        hs >> key >> nodes >> depth;
        require(key == "tree", "expected 'tree' line");
        RegressionTree tree;
        tree.max_depth = depth;
        for (std::size_t j = 0; j < nodes; ++j) {
            std::istringstream ns(next_line(in, "node"));
            std::string kind;
            ns >> kind;
            TreeNode nd;
            if (kind == "leaf") {
                std::string val;
                ns >> val;
                nd.value = parse_num(val, "leaf value");
            } else if (kind == "split") {
                std::string thr;
                nd.is_leaf = false;
                ns >> nd.feature >> thr >> nd.left >> nd.right;
                nd.threshold = parse_num(thr, "threshold");
            } else {
                fail("unexpected node kind: " + kind);
            }
            tree.nodes.push_back(nd);
        }
        e.trees.push_back(std::move(tree));
    }
    return e;
}

namespace {

void save_model(const Model& m, std::ostream& out) {
    if (const auto* lin = std::get_if<LinearModel>(&m))
        save_linear(*lin, out);
    else
        save_ensemble(std::get<TreeEnsemble>(m), out);
}

Model load_model(std::istream& in, bool linear) {
    if (linear) return load_linear(in);
    return load_ensemble(in);
}

}  // namespace

void save_system(const AdaptiveSystem& sys, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot write file: " + path);
    const bool linear = std::holds_alternative<LinearModel>(sys.g);
    out << "costgate.system.v1\n";
    out << "family " << (linear ? "linear" : "tree") << '\n';
    out << "route_threshold " << format_double(sys.route_threshold) << '\n';
    out << "f0_reference " << (sys.f0_reference.empty() ? "-" : sys.f0_reference) << '\n';
    out << "f0_used";
    for (auto u : sys.f0_used) out << ' ' << static_cast<int>(u);
    out << '\n';
    out << "f0_model " << (sys.f0_model.has_value() ? 1 : 0) << '\n';
    out << "[g]\n";
    save_model(sys.g, out);
    out << "[f1]\n";
    save_model(sys.f1, out);
    if (sys.f0_model.has_value()) {
        out << "[f0]\n";
        save_ensemble(*sys.f0_model, out);
    }
}

AdaptiveSystem load_system(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    require(next_line(in, "system header") == "costgate.system.v1",
            "unexpected system header");
    AdaptiveSystem sys;
    bool linear = true;
    bool has_f0 = false;
    {
        std::istringstream ss(next_line(in, "family"));
        std::string key, val;
        ss >> key >> val;
        require(key == "family" && (val == "linear" || val == "tree"), "bad family line");
        linear = val == "linear";
    }
    {
        std::istringstream ss(next_line(in, "route_threshold"));
        std::string key, val;
        ss >> key >> val;
        require(key == "route_threshold", "bad route_threshold line");
        sys.route_threshold = parse_num(val, "route_threshold");
    }
    {
        std::istringstream ss(next_line(in, "f0_reference"));
        std::string key, val;
        ss >> key;
        std::getline(ss, val);
        require(key == "f0_reference", "bad f0_reference line");
        const std::size_t b = val.find_first_not_of(' ');
        val = b == std::string::npos ? "" : val.substr(b);
        sys.f0_reference = val == "-" ? "" : val;
    }
    {
        std::istringstream ss(next_line(in, "f0_used"));
        std::string key;
        ss >> key;
        require(key == "f0_used", "bad f0_used line");
        int flag = 0;
        while (ss >> flag) sys.f0_used.push_back(flag != 0 ? 1 : 0);
    }
    {
        std::istringstream ss(next_line(in, "f0_model"));
        std::string key;
        int flag = 0;
        ss >> key >> flag;
        require(key == "f0_model", "bad f0_model line");
        has_f0 = flag != 0;
    }
    require(next_line(in, "[g]") == "[g]", "expected [g] section");
    sys.g = load_model(in, linear);
    require(next_line(in, "[f1]") == "[f1]", "expected [f1] section");
    sys.f1 = load_model(in, linear);
    if (has_f0) {
        require(next_line(in, "[f0]") == "[f0]", "expected [f0] section");
        sys.f0_model = load_ensemble(in);
    }
    return sys;
}

void save_trace(const std::vector<double>& trace, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot write file: " + path);
    for (double v : trace) out << format_double(v) << '\n';
}

void save_eval_report(const EvalReport& rep, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot write file: " + path);
    out << "example_id,z,cost,correct\n";
    for (const EvalRow& r : rep.rows)
        out << r.id << ',' << r.z << ',' << format_double(r.cost) << ','
            << (r.correct ? 1 : 0) << '\n';
}

std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;
        std::string rest;
        std::getline(ss, rest);
        const std::size_t b = rest.find_first_not_of(" \t");
        rest = b == std::string::npos ? "" : rest.substr(b);
        const std::size_t e = rest.find_last_not_of(" \t\r");
        if (e != std::string::npos) rest = rest.substr(0, e + 1);
        kv[key] = rest;
    }
    return kv;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::istringstream ss(text);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(parse_num(tok, "list"));
    return out;
}

void apply_config_keys(const std::map<std::string, std::string>& kv, AdaptConfig& cfg,
                       bool allow_grid_keys) {
    for (const auto& [key, val] : kv) {
        if (key == "gamma") cfg.gamma = parse_num(val, "gamma");
        else if (key == "p_full") cfg.p_full = parse_num(val, "p_full");
        else if (key == "outer_iters") cfg.outer_iters = static_cast<int>(parse_num(val, key.c_str()));
        else if (key == "trees_per_round") cfg.trees_per_round = static_cast<int>(parse_num(val, key.c_str()));
        else if (key == "depth") cfg.depth = static_cast<int>(parse_num(val, key.c_str()));
        else if (key == "shrinkage") cfg.shrinkage = parse_num(val, "shrinkage");
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_num(val, "seed"));
        else if (key == "tolerance") cfg.tolerance = parse_num(val, "tolerance");
        else if (key == "init") {
            if (val == "logistic") cfg.init = LinearInit::logistic;
            else if (val == "ones") cfg.init = LinearInit::ones;
            else fail("unknown init: " + val);
        }
        else if (allow_grid_keys &&
                 (key == "gammas" || key == "p_fulls" || key == "shrinkages" || key == "trainer"))
            continue;
        else
            fail("unknown config key: " + key);
    }
}

}  // namespace costgate
