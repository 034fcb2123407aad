#ifndef EPIFLOW_ANALYSIS_HPP
#define EPIFLOW_ANALYSIS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "epiflow/control.hpp"
#include "epiflow/graph.hpp"
#include "epiflow/simulate.hpp"
#include "epiflow/spectral.hpp"

namespace epiflow {

/// Normal-distribution parameters for the protocol sampler. The absolute
/// value of each draw is used; the heterogeneity factor x scales the delta
/// and node-R0 dispersions.
struct ProtocolDistributions {
  double delta_mean = 0.2;
  double delta_sigma = 0.05;
  double gamma_mean = 0.25;
  double gamma_sigma = 0.05;
  double r0_mean = 1.0;
  double r0_sigma = 0.35;
  double alpha_mean = 0.3;
  double alpha_sigma = 0.05;
  double beta_p_ratio = 0.5;  // beta_p = ratio * beta
};

struct ProtocolOptions {
  double heterogeneity_x = 1.0;
  bool gamma_constant = false;  // hold gamma at its mean (heterogeneity sweep)
  double theta_range = 0.1;     // theta_ref ~ U[-range, range] per edge
  double outrate_lo = 0.0;
  double outrate_hi = 0.4;
  ProtocolDistributions dist;
};

/// One drawn instance of the experimental protocol: graph, outrates,
/// reference policy parameters, epidemiological coefficients with
/// beta_n = R0(n) delta_n / mu_ref(n), and the reference stationary
/// distribution. Deterministic in the seed.
struct ProtocolSample {
  Graph g;
  Outrates f;
  PolicyParams theta_ref;
  EpiParams params;
  Stationary mu_ref;
  Vec node_r0;  // the drawn per-node reproduction targets
  std::uint64_t seed = 0;
};

ProtocolSample sample_protocol(const GraphSpec& spec, ModelKind kind,
                               const ProtocolOptions& options, std::uint64_t seed);

struct ResultRecord {
  std::string experiment_id;
  std::string family;
  int size = 0;
  std::string policy;  // REF / EPIPOL / NODIFFPOL / QUICKDIFFPOL
  double tau = 1.0;
  double x = 1.0;
  double r0 = 0.0;
  double final_size = 0.0;
  double relative_final_size = 0.0;
  bool converged = false;
  std::uint64_t seed = 0;
  double runtime_seconds = 0.0;  // stderr diagnostics only, never serialized
};

/// Everything a batch run needs besides the per-replicate seed.
struct ExperimentPlan {
  GraphFamily family = ErdosRenyi{};
  int graph_size = 30;
  ModelKind kind = ModelKind::seir;
  double tau = 1.0;
  ProtocolOptions protocol;
  SimConfig sim;  // sim.dt <= 0 means the protocol default min(1, tau)
  OptimizerConfig opt;
  std::vector<LossKind> losses = {LossKind::epi, LossKind::nodiff, LossKind::quickdiff};
  double smooth_max_a = 20.0;
  int num_seed_nodes = 2;
  double seed_fraction = 0.05;
  int threads = 1;
  std::uint64_t base_seed = 1;
  bool log_progress = false;  // per-replicate lines on stderr
};

SimConfig resolve_sim(const SimConfig& sim, double tau);

/// Optimize all three losses from theta_ref and simulate REF plus the three
/// optimized policies under the identical initial condition. Emits one
/// record per policy; a policy whose optimization or simulation throws is
/// recorded as non-converged with NaN metrics.
std::vector<ResultRecord> compare_policies(const ProtocolSample& sample,
                                           const ExperimentPlan& plan,
                                           const std::string& experiment_id);

/// replicates independent samples -> 4 records each.
std::vector<ResultRecord> compare_batch(const ExperimentPlan& plan, int replicates,
                                        const std::string& id_prefix);

/// REF-policy (R0, final size) pairs per family; one record per replicate.
std::vector<ResultRecord> sweep_r0_vs_final_size(const std::vector<GraphFamily>& families,
                                                 const ExperimentPlan& plan, int replicates);

/// compare_policies per tau, reusing the same sample across taus within a
/// replicate; dt follows min(1, tau) unless pinned in plan.sim.
std::vector<ResultRecord> sweep_tau(const ExperimentPlan& plan, const std::vector<double>& taus,
                                    int replicates);

/// compare_policies per heterogeneity level x (gamma held at its mean).
std::vector<ResultRecord> sweep_heterogeneity(const ExperimentPlan& plan,
                                              const std::vector<double>& xs, int replicates);

/// Largest root of r0 * r + log(1 - r) = 0 in [0, 1): 0 for r0 <= 1, else
/// the unique positive root by bisection to 1e-12.
double km_final_size(double r0);

struct Prop3Config {
  double epsilon = 0.1;
  double ball_radius = 0.05;
  double j0 = 1e-4;
  int num_perturbations = 20;
  double j0_floor = 1e-8;
  int max_shrink_rounds = 10;
};

struct Prop3Perturbation {
  double r0 = 0.0;
  double final_size = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool ok = false;
};

enum class Prop3Status { satisfied, exhausted, skipped_precondition };

struct Prop3Report {
  Prop3Status status = Prop3Status::skipped_precondition;
  double r0_ref = 0.0;
  double ball_radius_used = 0.0;
  double j0_used = 0.0;
  int shrink_rounds = 0;
  double fraction_ok = 0.0;
  double worst_margin = 0.0;  // min over perturbations of min(fs-lo, up-fs)
  std::vector<Prop3Perturbation> perturbations;
};

/// Checks the two-sided final-size bound on perturbations of theta_ref with
/// eigenvector-aligned initial infections. The claim is asymptotic in the
/// ball size and j0, so the scales shrink geometrically until every
/// perturbation satisfies the sandwich (or the j0 floor is hit).
Prop3Report verify_prop3(const ProtocolSample& sample, double tau, const Prop3Config& cfg,
                         const SimConfig& sim);

void emit_results_csv(const std::vector<ResultRecord>& records, const std::string& path);
std::vector<ResultRecord> parse_results_csv(const std::string& path);
std::string results_csv_string(const std::vector<ResultRecord>& records);

/// Grouped quantile summary (median and the 20%/80% nearest-rank quantiles
/// per (family, size, policy, tau, x) group), plus per-family regression
/// slope and Spearman correlation of final size against R0 for REF records.
std::string summary_json(const std::vector<ResultRecord>& records);

double quantile_nearest_rank(std::vector<double> values, double q);
double median(std::vector<double> values);
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace epiflow

#endif
