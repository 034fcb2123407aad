#ifndef EPIFLOW_CONFIG_HPP
#define EPIFLOW_CONFIG_HPP

#include <string>
#include <vector>

#include "epiflow/analysis.hpp"

namespace epiflow {

enum class ExperimentType {
  compare,
  r0_sweep,
  tau_sweep,
  heterogeneity_sweep,
  prop3,
  simulate_only
};

const char* experiment_type_name(ExperimentType t);

/// Union of the per-family generator parameters; the chosen family reads
/// its own fields. Kept as a union so one config can drive multi-family
/// sweeps.
struct GraphParams {
  double p = 0.15;         // erdos_renyi
  double alpha = 0.4;      // waxman
  double beta = 0.6;       // waxman
  int m = 2;               // barabasi_albert
  int cliques = 5;         // relaxed_caveman
  int clique_size = 6;     // relaxed_caveman
  double rewire_p = 0.2;   // relaxed_caveman
};

struct ExperimentConfig {
  ExperimentType type = ExperimentType::compare;
  int replicates = 20;
  std::vector<double> taus = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  std::vector<double> xs = {0.0, 0.25, 0.5, 0.75, 1.0};
  int samples = 10;  // prop3
  Prop3Config prop3;
  std::vector<std::string> families;  // r0_sweep; empty = just graph.family
};

struct OutputConfig {
  std::string dir = ".";
  std::string results_csv = "results.csv";
  std::string summary_json = "summary.json";
  std::string trajectory_csv = "trajectory.csv";
};

struct RunConfig {
  ExperimentPlan plan;          // plan.base_seed mirrors the top-level seed
  std::string family_name = "erdos_renyi";
  GraphParams graph_params;
  ExperimentConfig experiment;
  OutputConfig output;
};

GraphFamily make_family(const std::string& name, const GraphParams& params);

/// Parse and validate. Unknown keys, out-of-range values, and malformed
/// JSON all throw ConfigError naming the offending key or field.
RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// The fully-resolved configuration with every default applied, as JSON
/// text (what `validate` prints).
std::string resolved_config_json(const RunConfig& cfg);

}  // namespace epiflow

#endif
