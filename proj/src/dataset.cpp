#include "costgate/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "costgate/common.hpp"

namespace costgate {

namespace {

bool parse_double(const std::string& tok, double& out) {
    const char* s = tok.c_str();
    char* end = nullptr;
    out = std::strtod(s, &end);
    if (end == s) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0';
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Numeric CSV with an optional single header row.
std::vector<std::vector<double>> read_csv(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(t);
        std::string tok;
        bool ok = true;
        while (std::getline(ss, tok, ',')) {
            double v = 0.0;
            if (!parse_double(trim(tok), v)) {
                ok = false;
                break;
            }
            row.push_back(v);
        }
        if (!ok) {
            if (first_content_line) {  // header row
                first_content_line = false;
                continue;
            }
            fail(path + ":" + std::to_string(lineno) + ": non-numeric value");
        }
        first_content_line = false;
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), path + ": no data rows");
    const std::size_t width = rows.front().size();
    for (std::size_t i = 0; i < rows.size(); ++i)
        require(rows[i].size() == width,
                path + ": ragged row " + std::to_string(i + 1));
    return rows;
}

std::vector<double> read_column(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    std::vector<double> vals;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        double v = 0.0;
        require(parse_double(t, v),
                path + ":" + std::to_string(lineno) + ": non-numeric value");
        vals.push_back(v);
    }
    return vals;
}

std::vector<double> normalize_labels(std::vector<double> raw) {
    bool all01 = true, allpm = true;
    for (double v : raw) {
        if (v != 0.0 && v != 1.0) all01 = false;
        if (v != -1.0 && v != 1.0) allpm = false;
    }
    if (allpm) return raw;
    require(all01, "labels must be in {0,1} or {-1,+1}");
    for (double& v : raw) v = v == 0.0 ? -1.0 : 1.0;
    return raw;
}

Dataset take_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.n = rows.size();
    out.k = ds.k;
    out.costs = ds.costs;
    out.features.reserve(out.n * out.k);
    out.labels.reserve(out.n);
    for (std::size_t r : rows) {
        const auto row = ds.row(r);
        out.features.insert(out.features.end(), row.begin(), row.end());
        out.labels.push_back(ds.labels[r]);
    }
    return out;
}

}  // namespace

void Dataset::validate() const {
    require(n >= 1 && k >= 1, "dataset must have at least one row and one feature");
    require(features.size() == n * k, "feature buffer size mismatch");
    require(labels.size() == n, "label count does not match rows");
    require(costs.size() == k, "cost count does not match features");
    for (double v : features)
        require(std::isfinite(v), "non-finite feature value");
    for (double y : labels)
        require(y == -1.0 || y == 1.0, "label outside {-1,+1}");
    for (double c : costs)
        require(std::isfinite(c) && c >= 0.0, "negative or non-finite cost");
}

Dataset load_dataset(const std::string& feature_path, const LabelSource& labels,
                     const std::optional<std::string>& cost_path) {
    auto rows = read_csv(feature_path);
    Dataset ds;
    ds.n = rows.size();

    std::vector<double> raw_labels;
    if (labels.kind == LabelSource::Kind::last_column) {
        require(rows.front().size() >= 2,
                feature_path + ": need at least one feature column plus the label column");
        ds.k = rows.front().size() - 1;
        for (auto& r : rows) {
            raw_labels.push_back(r.back());
            r.pop_back();
        }
    } else {
        ds.k = rows.front().size();
        raw_labels = read_column(labels.path);
        require(raw_labels.size() == ds.n,
                "label count (" + std::to_string(raw_labels.size()) +
                    ") does not match feature rows (" + std::to_string(ds.n) + ")");
    }

    ds.features.reserve(ds.n * ds.k);
    for (const auto& r : rows) ds.features.insert(ds.features.end(), r.begin(), r.end());
    ds.labels = normalize_labels(std::move(raw_labels));

    if (cost_path.has_value()) {
        ds.costs = read_column(*cost_path);
        require(ds.costs.size() == ds.k,
                "cost count (" + std::to_string(ds.costs.size()) +
                    ") does not match feature count (" + std::to_string(ds.k) + ")");
    } else {
        ds.costs.assign(ds.k, 1.0);
    }
    ds.validate();
    return ds;
}

ScoreTable load_scores(const std::string& path, const Dataset& ds) {
    ScoreTable t{read_column(path)};
    require(t.size() == ds.n, "score count (" + std::to_string(t.size()) +
                                  ") does not match rows (" + std::to_string(ds.n) + ")");
    for (double v : t.values)
        require(std::isfinite(v), path + ": non-finite score");
    return t;
}

void save_dataset(const Dataset& ds, const std::string& feature_path,
                  const std::string& cost_path) {
    std::ofstream out(feature_path);
    require(out.good(), "cannot write file: " + feature_path);
    for (std::size_t i = 0; i < ds.n; ++i) {
        for (std::size_t j = 0; j < ds.k; ++j)
            out << format_double(ds.at(i, j)) << ',';
        out << format_double(ds.labels[i]) << '\n';
    }
    std::ofstream cout_(cost_path);
    require(cout_.good(), "cannot write file: " + cost_path);
    for (double c : ds.costs) cout_ << format_double(c) << '\n';
}

void save_scores(const ScoreTable& scores, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), "cannot write file: " + path);
    for (double v : scores.values) out << format_double(v) << '\n';
}

Dataset gen_synthetic2() {
    static constexpr double centers[4][2] = {{1, 1}, {-1, 1}, {-1, -1}, {-1, -3}};
    static constexpr int sizes[4] = {20, 20, 15, 15};
    static constexpr double cluster_label[4] = {1, -1, 1, -1};
    Rng rng(452);  // fixed: the generator is a constant
    Dataset ds;
    ds.k = 2;
    ds.costs = {1.0, 1.0};
    for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < sizes[c]; ++i) {
            ds.features.push_back(centers[c][0] + 0.01 * rng.normal());
            ds.features.push_back(centers[c][1] + 0.01 * rng.normal());
            ds.labels.push_back(cluster_label[c]);
        }
    }
    ds.n = ds.labels.size();
    ds.validate();
    return ds;
}

Synthetic1 gen_synthetic1_detail(std::uint64_t seed) {
    // XOR layout: opposite corners share a class
    static constexpr double corners[4][2] = {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    static constexpr double corner_label[4] = {-1, 1, -1, 1};
    constexpr int per_cluster = 250;
    Rng rng(seed);
    Synthetic1 out;
    Dataset& ds = out.data;
    ds.k = 2;
    ds.costs = {1.0, 1.0};
    for (int c = 0; c < 4; ++c) {
        for (int i = 0; i < per_cluster; ++i) {
            ds.features.push_back(corners[c][0] + rng.normal());
            ds.features.push_back(corners[c][1] + rng.normal());
            ds.labels.push_back(corner_label[c]);
        }
    }
    ds.n = ds.labels.size();
    out.labels_before_flip = ds.labels;
    for (double& y : ds.labels)
        if (rng.uniform() < 0.01) y = -y;
    ds.validate();
    return out;
}

Dataset gen_synthetic1(std::uint64_t seed) { return gen_synthetic1_detail(seed).data; }

Splits split(const Dataset& ds, const SplitSpec& spec, bool require_nonempty) {
    for (double f : {spec.train, spec.validation, spec.test})
        require(f >= 0.0 && f <= 1.0, "split fraction outside [0,1]");
    require(std::fabs(spec.train + spec.validation + spec.test - 1.0) <= 1e-9,
            "split fractions must sum to 1");

    const double fr[3] = {spec.train, spec.validation, spec.test};
    std::size_t sizes[3];
    double frac_part[3];
    std::size_t assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = fr[i] * static_cast<double>(ds.n);
        sizes[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac_part[i] = exact - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    while (assigned < ds.n) {  // largest remainder, ties to the earlier part
        int best = 0;
        for (int i = 1; i < 3; ++i)
            if (frac_part[i] > frac_part[best] + 1e-12) best = i;
        ++sizes[best];
        frac_part[best] = -1.0;
        ++assigned;
    }
    if (require_nonempty)
        for (int i = 0; i < 3; ++i)
            require(sizes[i] > 0, "split produced an empty partition");

    std::vector<std::size_t> perm(ds.n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(spec.seed);
    rng.shuffle(perm);

    Splits out;
    out.train_rows.assign(perm.begin(), perm.begin() + sizes[0]);
    out.validation_rows.assign(perm.begin() + sizes[0], perm.begin() + sizes[0] + sizes[1]);
    out.test_rows.assign(perm.begin() + sizes[0] + sizes[1], perm.end());
    out.train = take_rows(ds, out.train_rows);
    out.validation = take_rows(ds, out.validation_rows);
    out.test = take_rows(ds, out.test_rows);
    return out;
}

ScoreTable slice_scores(const ScoreTable& scores, const std::vector<std::size_t>& rows) {
    ScoreTable out;
    out.values.reserve(rows.size());
    for (std::size_t r : rows) out.values.push_back(scores.values[r]);
    return out;
}

}  // namespace costgate
