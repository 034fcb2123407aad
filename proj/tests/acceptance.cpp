// Acceptance suite: runs every shipped claim end to end and prints one
// pass/fail line per criterion. Exit code = number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "epiflow/analysis.hpp"
#include "epiflow/control.hpp"
#include "epiflow/errors.hpp"
#include "epiflow/rng.hpp"
#include "epiflow/simulate.hpp"
#include "support/oracles.hpp"

#include "json.hpp"

using namespace epiflow;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Instance {
  Graph g;
  Outrates f;
  PolicyParams theta;
  EpiParams params;
};

Instance random_instance(ModelKind kind, int n, std::uint64_t seed) {
  Graph g = oracles::random_connected_graph(n, 0.3, seed);
  Outrates f = sample_outrates(g, 0.0, 0.4, seed + 1);
  Rng rng(seed + 2);
  PolicyParams theta(g.edge_count());
  for (double& t : theta) t = rng.uniform(-0.5, 0.5);
  EpiParams p = oracles::random_params(kind, n, seed + 3);
  return {std::move(g), std::move(f), std::move(theta), std::move(p)};
}

double relative_gradient_error(const Vec& analytic, const std::vector<double>& fd) {
  double scale = 1.0;
  for (double v : fd) scale = std::max(scale, std::fabs(v));
  return oracles::max_relative_error(analytic, fd, 1e-6 * scale);
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::map<std::string, std::vector<double>> relative_sizes_by_policy(
    const std::vector<ResultRecord>& records, double tau = -1.0, double x = -1.0) {
  std::map<std::string, std::vector<double>> out;
  for (const ResultRecord& r : records) {
    if (tau >= 0.0 && r.tau != tau) continue;
    if (x >= 0.0 && r.x != x) continue;
    out[r.policy].push_back(r.relative_final_size);
  }
  return out;
}

ExperimentPlan compare_plan(ModelKind kind, std::uint64_t seed) {
  ExperimentPlan plan;
  plan.family = ErdosRenyi{0.15};
  plan.graph_size = 30;
  plan.kind = kind;
  plan.base_seed = seed;
  return plan;
}

// ---------------------------------------------------------------- criterion 1

Outcome gradient_correctness() {
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  auto check_instances = [&](ModelKind kind, int count, std::uint64_t seed0) {
    for (int k = 0; k < count; ++k) {
      const int n = 5 + static_cast<int>((seed0 + k) % 16);  // sizes 5..20
      const Instance inst = random_instance(kind, n, seed0 + 13 * k);
      const LossContext ctx{inst.g, inst.f, inst.params, 0.9, 17.0};
      for (LossKind kind_l : {LossKind::epi, LossKind::nodiff, LossKind::quickdiff}) {
        const Vec grad = loss_gradient(kind_l, ctx, inst.theta);
        auto value = [&](const PolicyParams& th) { return loss_value(kind_l, ctx, th); };
        const auto fd = oracles::central_difference(value, inst.theta, 1e-5);
        worst = std::max(worst, relative_gradient_error(grad, fd));
        if (worst > 1e-5) return false;
      }
    }
    return true;
  };
  const bool ok_seir = check_instances(ModelKind::seir, 50, 1000);
  const bool ok_sepir = ok_seir && check_instances(ModelKind::sepir, 20, 5000);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {ok_seir && ok_sepir && elapsed <= 120.0,
          "worst componentwise relative error " + fmt(worst) + " (tol 1e-5), " + fmt(elapsed) +
              "s (cap 120s)"};
}

// ---------------------------------------------------------------- criterion 2

Outcome spectral_correctness() {
  double worst_perron = 0.0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k % 15);
    const Mat g = oracles::random_positive_matrix(n, 0.02, 1.0, 2000 + k);
    const double rho_pi = spectral_radius_perron(g).rho;
    const double rho_dense = oracles::spectral_radius_dense(g);
    worst_perron = std::max(worst_perron, std::fabs(rho_pi - rho_dense) / rho_dense);
  }
  double worst_ld = 0.0;
  for (int k = 0; k < 50; ++k) {
    const int n = 4 + k % 9;
    const Instance inst = random_instance(ModelKind::seir, n, 2500 + 11 * k);
    const Diffusion m = build_diffusion(inst.g, build_policy(inst.g, inst.theta), inst.f, 1.0);
    const Stationary st = stationary_distribution(m);
    const double rho_g = spectral_radius_perron(next_gen_matrix(m, inst.params, st)).rho;
    const double rho_k = large_domain(m, inst.params, st).rho;
    worst_ld = std::max(worst_ld, std::fabs(rho_k - rho_g) / rho_g);
  }
  return {worst_perron <= 1e-9 && worst_ld <= 1e-8,
          "power iteration vs dense oracle " + fmt(worst_perron) +
              " (tol 1e-9); rho(K) vs rho(G) " + fmt(worst_ld) + " (tol 1e-8)"};
}

// ---------------------------------------------------------------- criterion 3

Outcome limit_consistency() {
  double worst_slow = 0.0, worst_fast = 0.0;
  for (ModelKind kind : {ModelKind::seir, ModelKind::sepir}) {
    for (int k = 0; k < 20; ++k) {
      const int n = 5 + k % 6;
      const Instance inst = random_instance(kind, n, 3000 + 7 * k);
      {
        const Diffusion m =
            build_diffusion(inst.g, build_policy(inst.g, inst.theta), inst.f, 1e4);
        const Stationary st = stationary_distribution(m);
        const double r0 = spectral_radius_perron(next_gen_matrix(m, inst.params, st)).rho;
        double limit = 0.0;
        for (int v = 0; v < n; ++v) {
          double node = inst.params.beta[v] / inst.params.delta[v];
          if (kind == ModelKind::sepir) node += inst.params.beta_p[v] / inst.params.gamma[v];
          limit = std::max(limit, node * st.mu[v]);
        }
        worst_slow = std::max(worst_slow, std::fabs(r0 - limit) / limit);
      }
      {
        const Diffusion m =
            build_diffusion(inst.g, build_policy(inst.g, inst.theta), inst.f, 1e-4);
        const Stationary st = stationary_distribution(m);
        const double r0 = spectral_radius_perron(next_gen_matrix(m, inst.params, st)).rho;
        double num1 = 0.0, den1 = 0.0, num2 = 0.0, den2 = 0.0;
        for (int v = 0; v < n; ++v) {
          num1 += inst.params.beta[v] * st.mu[v] * st.mu[v];
          den1 += inst.params.delta[v] * st.mu[v];
          if (kind == ModelKind::sepir) {
            num2 += inst.params.beta_p[v] * st.mu[v] * st.mu[v];
            den2 += inst.params.gamma[v] * st.mu[v];
          }
        }
        double limit = num1 / den1;
        if (kind == ModelKind::sepir) limit += num2 / den2;
        worst_fast = std::max(worst_fast, std::fabs(r0 - limit) / limit);
      }
    }
  }
  return {worst_slow <= 0.01 && worst_fast <= 0.01,
          "tau=1e4 vs max node R0: " + fmt(worst_slow) + "; tau=1e-4 vs quickdiff: " +
              fmt(worst_fast) + " (tol 1% each)"};
}

// ---------------------------------------------------------------- criterion 4

Outcome simulator_invariants() {
  const ProtocolSample sample =
      sample_protocol({ErdosRenyi{0.15}, 30, 0}, ModelKind::seir, {}, 4242);
  const Diffusion m =
      build_diffusion(sample.g, build_policy(sample.g, sample.theta_ref), sample.f, 1.0);
  EpiState st = protocol_initial_condition(sample.mu_ref, ModelKind::seir, 2, 0.05, 4243);

  bool nonneg = true;
  for (int k = 0; k < 1000; ++k) {
    step(st, m, sample.params, 1.0);
    nonneg = nonneg && st.nonnegative();
  }
  const double drift_short = std::fabs(st.total() - 1.0);

  // a million steps at dt = 1e-3 probes long-run drift
  EpiState st2 = protocol_initial_condition(sample.mu_ref, ModelKind::seir, 2, 0.05, 4243);
  for (int k = 0; k < 1000000; ++k) step(st2, m, sample.params, 1e-3);
  const double drift_long = std::fabs(st2.total() - 1.0);

  // order-one convergence band under dt halving
  const Instance inst = random_instance(ModelKind::seir, 5, 4250);
  const Diffusion m2 = build_diffusion(inst.g, build_policy(inst.g, inst.theta), inst.f, 1.0);
  const Stationary mu2 = stationary_distribution(m2);
  const EpiState start = protocol_initial_condition(mu2, ModelKind::seir, 2, 0.05, 4251);
  auto terminal = [&](double dt) { return simulate(m2, inst.params, start, {20.0, dt, 0}).terminal; };
  const EpiState fine = terminal(1.0 / 512.0);
  auto err = [&](const EpiState& s) {
    double worst = 0.0;
    for (std::size_t i = 0; i < s.s.size(); ++i) {
      worst = std::max(worst, std::fabs(s.s[i] - fine.s[i]));
      worst = std::max(worst, std::fabs(s.e[i] - fine.e[i]));
      worst = std::max(worst, std::fabs(s.i[i] - fine.i[i]));
      worst = std::max(worst, std::fabs(s.r[i] - fine.r[i]));
    }
    return worst;
  };
  const double ratio = err(terminal(0.25)) / err(terminal(0.125));

  const bool pass =
      nonneg && drift_short <= 1e-8 && drift_long <= 1e-8 && ratio >= 1.5 && ratio <= 3.0;
  return {pass, "nonnegativity " + std::string(nonneg ? "exact" : "VIOLATED") +
                    "; mass drift " + fmt(drift_short) + " (1000 steps), " + fmt(drift_long) +
                    " (1e6 steps, tol 1e-8); dt-halving ratio " + fmt(ratio) + " (band [1.5, 3])"};
}

// ---------------------------------------------------------------- criterion 5

Outcome scalar_final_size() {
  const double km2 = km_final_size(2.0);
  const bool spot = std::fabs(km2 - 0.7968121300200200) <= 1e-9;
  double worst = 0.0;
  for (double r0 : {1.5, 2.0, 3.0}) {
    const double delta = 0.25, gamma = 0.3, j0 = 1e-4;
    EpiParams p;
    p.kind = ModelKind::seir;
    p.beta = {r0 * delta};
    p.gamma = {gamma};
    p.delta = {delta};
    EpiState st;
    st.s = {1.0 - j0};
    st.e = {j0};
    st.i = {0.0};
    st.r = {0.0};
    const Diffusion m{Mat(1, 1, 0.0)};
    const double fs = final_size(simulate(m, p, st, {2000.0, 0.01, 0})).final_size;
    worst = std::max(worst, std::fabs(fs - km_final_size(r0)) / km_final_size(r0));
  }
  return {spot && worst <= 0.01, "km(2) = " + fmt(km2) + " (frozen 0.7968121300200200); worst sim vs km error " +
                                     fmt(worst) + " (tol 1%)"};
}

// ---------------------------------------------------------------- criterion 6

Outcome final_size_monotonicity() {
  const auto start = std::chrono::steady_clock::now();
  ExperimentPlan plan = compare_plan(ModelKind::seir, 42);
  const std::vector<GraphFamily> families = {ErdosRenyi{0.15}, Waxman{0.4, 0.6},
                                             BarabasiAlbert{2}, RelaxedCaveman{5, 6, 0.2}};
  const auto records = sweep_r0_vs_final_size(families, plan, 30);
  bool pass = true;
  std::string detail;
  for (const GraphFamily& family : families) {
    std::vector<double> r0s, fss;
    for (const ResultRecord& r : records)
      if (r.family == family_name(family)) {
        r0s.push_back(r.r0);
        fss.push_back(r.final_size);
      }
    const double rho = spearman(r0s, fss);
    pass = pass && rho >= 0.5;
    detail += std::string(family_name(family)) + "=" + fmt(rho) + " ";
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  pass = pass && elapsed <= 600.0;
  return {pass, "spearman (tol >= 0.5): " + detail + "in " + fmt(elapsed) + "s (cap 600s)"};
}

// ---------------------------------------------------------------- criterion 7

Outcome policy_comparison_seir() {
  const auto start = std::chrono::steady_clock::now();
  const auto records = compare_batch(compare_plan(ModelKind::seir, 42), 20, "acc7/");
  const auto by_policy = relative_sizes_by_policy(records);
  const double epi = median(by_policy.at("EPIPOL"));
  const double nod = median(by_policy.at("NODIFFPOL"));
  const double qui = median(by_policy.at("QUICKDIFFPOL"));
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = epi <= 0.8 && nod <= 0.8 && qui <= 0.8 && epi <= nod && epi <= qui &&
                    epi >= 0.30 && epi <= 0.80 && elapsed <= 1200.0;
  return {pass, "medians EPIPOL=" + fmt(epi) + " NODIFFPOL=" + fmt(nod) + " QUICKDIFFPOL=" +
                    fmt(qui) + " (all <= 0.8, EPIPOL best and in [0.30, 0.80]), " + fmt(elapsed) +
                    "s (cap 1200s)"};
}

// ---------------------------------------------------------------- criterion 8

Outcome policy_comparison_sepir() {
  const auto records = compare_batch(compare_plan(ModelKind::sepir, 42), 20, "acc8/");
  const auto by_policy = relative_sizes_by_policy(records);
  const double epi = median(by_policy.at("EPIPOL"));
  const double nod = median(by_policy.at("NODIFFPOL"));
  const double qui = median(by_policy.at("QUICKDIFFPOL"));
  const bool pass = epi <= nod && epi <= qui && epi >= 0.10 && epi <= 0.70;
  return {pass, "medians EPIPOL=" + fmt(epi) + " NODIFFPOL=" + fmt(nod) + " QUICKDIFFPOL=" +
                    fmt(qui) + " (EPIPOL best and in [0.10, 0.70])"};
}

// ---------------------------------------------------------------- criterion 9

Outcome heterogeneity_sweep() {
  ExperimentPlan plan = compare_plan(ModelKind::seir, 42);
  const std::vector<double> xs = {0.0, 0.25, 0.5, 0.75, 1.0};
  const auto records = sweep_heterogeneity(plan, xs, 20);
  std::vector<double> medians;
  for (double x : xs) medians.push_back(median(relative_sizes_by_policy(records, -1.0, x).at("EPIPOL")));
  int inversions = 0;
  for (std::size_t k = 1; k < medians.size(); ++k)
    if (medians[k] > medians[k - 1]) ++inversions;
  std::string detail = "EPIPOL medians:";
  for (double m : medians) detail += " " + fmt(m);
  const bool pass = inversions <= 1 && medians.front() >= 0.9;
  return {pass, detail + " (x=0 median >= 0.9; " + std::to_string(inversions) +
                    " inversion(s), tol <= 1)"};
}

// --------------------------------------------------------------- criterion 10

Outcome tau_sweep_criterion() {
  ExperimentPlan plan = compare_plan(ModelKind::seir, 42);
  const std::vector<double> taus = {1e-2, 1e-1, 1.0, 1e1, 1e2};
  const auto records = sweep_tau(plan, taus, 24);
  bool epi_best = true;
  std::string detail;
  std::map<double, std::map<std::string, double>> med;
  for (double tau : taus) {
    const auto by_policy = relative_sizes_by_policy(records, tau);
    for (const auto& [policy, values] : by_policy) med[tau][policy] = median(values);
    epi_best = epi_best && med[tau]["EPIPOL"] <= med[tau]["NODIFFPOL"] &&
               med[tau]["EPIPOL"] <= med[tau]["QUICKDIFFPOL"];
    detail += "tau=" + fmt(tau) + ": E=" + fmt(med[tau]["EPIPOL"]) + " N=" +
              fmt(med[tau]["NODIFFPOL"]) + " Q=" + fmt(med[tau]["QUICKDIFFPOL"]) + "; ";
  }
  const bool close_at_slow = std::fabs(med[1e2]["EPIPOL"] - med[1e2]["NODIFFPOL"]) <= 0.15;
  const bool quick_improves = med[1e-2]["QUICKDIFFPOL"] < med[1e2]["QUICKDIFFPOL"];
  return {epi_best && close_at_slow && quick_improves, detail};
}

// --------------------------------------------------------------- criterion 11

Outcome prop3_sandwich() {
  // scalar case first: closed-form bounds around the simulated final size
  bool scalar_ok;
  {
    const double r0 = 0.5, epsilon = 0.1, j0 = 1e-4, delta = 0.2, gamma = 0.25;
    EpiParams p;
    p.kind = ModelKind::seir;
    p.beta = {r0 * delta};
    p.gamma = {gamma};
    p.delta = {delta};
    const Diffusion m{Mat(1, 1, 0.0)};
    const LargeDomain ld = large_domain(m, p, Stationary{{1.0}});
    const EpiState ic = eigen_aligned_initial_condition(Stationary{{1.0}}, ld.v_eig, j0);
    const double fs = final_size(simulate(m, p, ic, {2000.0, 0.05, 0})).final_size;
    scalar_ok = fs >= j0 / (1.0 - (1.0 - epsilon) * r0) && fs <= j0 / (1.0 - (1.0 + epsilon) * r0);
  }

  ExperimentPlan plan = compare_plan(ModelKind::seir, 42);
  plan.graph_size = 20;
  plan.protocol.dist.r0_mean = 0.6;
  plan.protocol.dist.r0_sigma = 0.15;
  plan.sim.dt = 0.1;
  Prop3Config cfg;  // epsilon 0.1, 20 perturbations, shrink search
  int satisfied = 0, subcritical = 0;
  std::string detail;
  for (int s = 0; s < 10; ++s) {
    const ProtocolSample sample = sample_protocol({plan.family, plan.graph_size, 0},
                                                  ModelKind::seir, plan.protocol,
                                                  Rng::mix(plan.base_seed, s));
    const Prop3Report rep = verify_prop3(sample, plan.tau, cfg, plan.sim);
    if (rep.r0_ref < 0.9) ++subcritical;
    if (rep.status == Prop3Status::satisfied && rep.fraction_ok == 1.0) ++satisfied;
    detail += fmt(rep.r0_ref) + (rep.status == Prop3Status::satisfied ? "+ " : "- ");
  }
  const bool pass = scalar_ok && subcritical == 10 && satisfied == 10;
  return {pass, "scalar sandwich " + std::string(scalar_ok ? "holds" : "VIOLATED") +
                    "; samples (r0_ref, +=satisfied): " + detail};
}

// --------------------------------------------------------------- criterion 12

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "epiflow_acceptance_det";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({
  "seed": 11,
  "threads": 3,
  "graph": {"family": "erdos_renyi", "size": 10, "params": {"p": 0.3}},
  "optimizer": {"steps": 40},
  "experiment": {"type": "compare", "replicates": 3}
})";
  }
  auto run_once = [&](const std::string& sub) {
    const std::string cmd = std::string(EPIFLOW_CLI_PATH) + " run " + (dir / "cfg.json").string() +
                            " --output-dir " + (dir / sub).string() + " >/dev/null 2>&1";
    return std::system(cmd.c_str()) == 0;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const bool ran = run_once("a") && run_once("b");
  const std::string csv_a = slurp(dir / "a" / "results.csv");
  const bool pass = ran && !csv_a.empty() && csv_a == slurp(dir / "b" / "results.csv") &&
                    slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json");
  fs::remove_all(dir);
  return {pass, pass ? "two runs, byte-identical CSV and summary" : "outputs differ or run failed"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> fn;
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient correctness (FD check, 50 SEIR + 20 SEPIR)", gradient_correctness},
      {2, "spectral radius vs dense oracle; rho(K) = rho(G)", spectral_correctness},
      {3, "R0 limit consistency at tau = 1e4 and 1e-4", limit_consistency},
      {4, "simulator positivity, mass conservation, order-1 band", simulator_invariants},
      {5, "scalar final-size relation", scalar_final_size},
      {6, "R0 vs final size monotone per family (Spearman)", final_size_monotonicity},
      {7, "policy comparison, SEIR Erdos-Renyi size 30", policy_comparison_seir},
      {8, "policy comparison, SEPIR", policy_comparison_sepir},
      {9, "heterogeneity sweep", heterogeneity_sweep},
      {10, "tau sweep", tau_sweep_criterion},
      {11, "final-size sandwich around subcritical references", prop3_sandwich},
      {12, "byte-identical reruns", determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("[%s] criterion %2d: %s (%.1fs) — %s\n", out.pass ? "PASS" : "FAIL", c.id,
                c.name, elapsed, out.detail.c_str());
    std::fflush(stdout);
    if (!out.pass) ++failures;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
