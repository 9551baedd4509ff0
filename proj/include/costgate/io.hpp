#pragma once

#include <map>
#include <string>

#include "costgate/adapt.hpp"
#include "costgate/gating.hpp"

namespace costgate {

// Versioned text formats.  All numbers are written in round-trip-exact form.

void save_linear(const LinearModel& m, std::ostream& out);
LinearModel load_linear(std::istream& in);

void save_ensemble(const TreeEnsemble& e, std::ostream& out);
TreeEnsemble load_ensemble(std::istream& in);

void save_system(const AdaptiveSystem& sys, const std::string& path);
AdaptiveSystem load_system(const std::string& path);

void save_trace(const std::vector<double>& trace, const std::string& path);

// CSV with columns (example id, z, cost, correct)
void save_eval_report(const EvalReport& rep, const std::string& path);

// Flat "key value" file, '#' comments allowed.
std::map<std::string, std::string> read_kv_file(const std::string& path);

// Applies recognized AdaptConfig keys from a kv map; unknown keys error.
void apply_config_keys(const std::map<std::string, std::string>& kv, AdaptConfig& cfg,
                       bool allow_grid_keys = false);

std::vector<double> parse_double_list(const std::string& text);

}  // namespace costgate
