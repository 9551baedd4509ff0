#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace costgate {

// Sample with per-feature acquisition costs.  Labels are stored as -1/+1;
// ingest accepts 0/1 and maps it.  Immutable after construction.
struct Dataset {
    std::size_t n = 0;
    std::size_t k = 0;
    std::vector<double> features;  // row-major n x k
    std::vector<double> labels;    // each -1.0 or +1.0
    std::vector<double> costs;     // length k, non-negative

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * k, k};
    }
    double at(std::size_t i, std::size_t j) const { return features[i * k + j]; }

    void validate() const;
};

// Margin scores of a fixed model on one dataset, row-aligned.
struct ScoreTable {
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
};

struct SplitSpec {
    double train = 0.6;
    double validation = 0.2;
    double test = 0.2;
    std::uint64_t seed = 0;
};

struct Splits {
    Dataset train, validation, test;
    // row indices into the source dataset, for slicing aligned score tables
    std::vector<std::size_t> train_rows, validation_rows, test_rows;
};

// --------------------------------------------------------------------------
// Ingestion
// --------------------------------------------------------------------------

struct LabelSource {
    enum class Kind { file, last_column };
    Kind kind = Kind::file;
    std::string path;

    static LabelSource from_file(std::string p) { return {Kind::file, std::move(p)}; }
    static LabelSource last_column() { return {Kind::last_column, {}}; }
};

// Feature CSV (optional header, comma separated) + labels from a separate
// file or the trailing column + optional per-feature cost file (one cost per
// line).  Costs default to 1 when no file is given.
Dataset load_dataset(const std::string& feature_path, const LabelSource& labels,
                     const std::optional<std::string>& cost_path = std::nullopt);

ScoreTable load_scores(const std::string& path, const Dataset& ds);

void save_dataset(const Dataset& ds, const std::string& feature_path,
                  const std::string& cost_path);
void save_scores(const ScoreTable& scores, const std::string& path);

// --------------------------------------------------------------------------
// Synthetic data
// --------------------------------------------------------------------------

// Four tight 2-D Gaussian clusters (sizes 20/20/15/15, sd 0.01) centered at
// (1,1), (-1,1), (-1,-1), (-1,-3); clusters 1,3 labeled +1 and 2,4 labeled
// -1; unit costs.  Fully deterministic.
Dataset gen_synthetic2();

struct Synthetic1 {
    Dataset data;
    std::vector<double> labels_before_flip;
};

// 1000 points, two informative features: four unit-variance Gaussian blobs
// at hypercube corners in an XOR class layout, then 1% of labels negated.
Synthetic1 gen_synthetic1_detail(std::uint64_t seed);
Dataset gen_synthetic1(std::uint64_t seed);

// Disjoint row partition with sizes within one of n*fraction, deterministic
// in spec.seed.  With require_nonempty, an empty part is an error.
Splits split(const Dataset& ds, const SplitSpec& spec, bool require_nonempty = false);

ScoreTable slice_scores(const ScoreTable& scores, const std::vector<std::size_t>& rows);

}  // namespace costgate
