#include "epiflow/runner.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "epiflow/errors.hpp"
#include "epiflow/parallel.hpp"
#include "epiflow/rng.hpp"

#include "json.hpp"

namespace epiflow {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

const char* prop3_status_name(Prop3Status s) {
  switch (s) {
    case Prop3Status::satisfied:
      return "satisfied";
    case Prop3Status::exhausted:
      return "exhausted";
    case Prop3Status::skipped_precondition:
      return "SkippedPreconditionFailed";
  }
  return "?";
}

json prop3_report_json(const Prop3Report& rep) {
  json j;
  j["status"] = prop3_status_name(rep.status);
  j["r0_ref"] = rep.r0_ref;
  j["ball_radius_used"] = rep.ball_radius_used;
  j["j0_used"] = rep.j0_used;
  j["shrink_rounds"] = rep.shrink_rounds;
  j["fraction_ok"] = rep.fraction_ok;
  j["worst_margin"] = rep.worst_margin;
  j["perturbations"] = json::array();
  for (const Prop3Perturbation& p : rep.perturbations)
    j["perturbations"].push_back({{"r0", p.r0},
                                  {"final_size", p.final_size},
                                  {"lower", p.lower},
                                  {"upper", p.upper},
                                  {"ok", p.ok}});
  return j;
}

void emit_standard_outputs(const RunConfig& cfg, const std::vector<ResultRecord>& records) {
  emit_results_csv(records, join_path(cfg.output.dir, cfg.output.results_csv));
  json summary = json::parse(summary_json(records));
  summary["experiment"] = experiment_type_name(cfg.experiment.type);
  write_text(join_path(cfg.output.dir, cfg.output.summary_json), summary.dump(2) + "\n");
}

void run_prop3(const RunConfig& cfg) {
  const ExperimentPlan& plan = cfg.plan;
  std::vector<Prop3Report> reports(cfg.experiment.samples);
  parallel_for(cfg.experiment.samples, plan.threads, [&](int s) {
    const GraphSpec spec{plan.family, plan.graph_size, 0};
    const ProtocolSample sample =
        sample_protocol(spec, plan.kind, plan.protocol, Rng::mix(plan.base_seed, s));
    reports[s] = verify_prop3(sample, plan.tau, cfg.experiment.prop3, plan.sim);
    if (plan.log_progress)
      std::cerr << "prop3 sample " << s << ": " << prop3_status_name(reports[s].status)
                << " r0_ref=" << reports[s].r0_ref << "\n";
  });
  json out;
  out["experiment"] = "prop3";
  out["epsilon"] = cfg.experiment.prop3.epsilon;
  out["reports"] = json::array();
  for (const Prop3Report& r : reports) out["reports"].push_back(prop3_report_json(r));
  write_text(join_path(cfg.output.dir, cfg.output.summary_json), out.dump(2) + "\n");
  emit_results_csv({}, join_path(cfg.output.dir, cfg.output.results_csv));
}

void run_simulate_only(const RunConfig& cfg) {
  const ExperimentPlan& plan = cfg.plan;
  const GraphSpec spec{plan.family, plan.graph_size, 0};
  const ProtocolSample sample =
      sample_protocol(spec, plan.kind, plan.protocol, Rng::mix(plan.base_seed, 0));
  const SimConfig sim = resolve_sim(plan.sim, plan.tau);
  const EpiState ic =
      protocol_initial_condition(sample.mu_ref, plan.kind, plan.num_seed_nodes,
                                 plan.seed_fraction, Rng::mix(sample.seed, 5));
  const Diffusion m =
      build_diffusion(sample.g, build_policy(sample.g, sample.theta_ref), sample.f, plan.tau);
  const Trajectory traj = simulate(m, sample.params, ic, sim);
  write_trajectory_csv(traj, plan.kind, join_path(cfg.output.dir, cfg.output.trajectory_csv));

  const Stationary st = stationary_distribution(m);
  const FinalSizeReport fsr = final_size(traj);
  json out;
  out["experiment"] = "simulate_only";
  out["r0"] = spectral_radius_perron(next_gen_matrix(m, sample.params, st)).rho;
  out["final_size"] = fsr.final_size;
  out["residual_infection"] = fsr.residual_infection;
  out["converged"] = fsr.converged;
  write_text(join_path(cfg.output.dir, cfg.output.summary_json), out.dump(2) + "\n");
}

}  // namespace

void run_experiment(const RunConfig& cfg) {
  if (!cfg.output.dir.empty()) fs::create_directories(cfg.output.dir);
  switch (cfg.experiment.type) {
    case ExperimentType::compare: {
      const auto records = compare_batch(cfg.plan, cfg.experiment.replicates, "compare/");
      emit_standard_outputs(cfg, records);
      return;
    }
    case ExperimentType::r0_sweep: {
      std::vector<GraphFamily> families;
      if (cfg.experiment.families.empty())
        families.push_back(cfg.plan.family);
      else
        for (const std::string& name : cfg.experiment.families)
          families.push_back(make_family(name, cfg.graph_params));
      const auto records =
          sweep_r0_vs_final_size(families, cfg.plan, cfg.experiment.replicates);
      emit_standard_outputs(cfg, records);
      return;
    }
    case ExperimentType::tau_sweep: {
      const auto records = sweep_tau(cfg.plan, cfg.experiment.taus, cfg.experiment.replicates);
      emit_standard_outputs(cfg, records);
      return;
    }
    case ExperimentType::heterogeneity_sweep: {
      const auto records =
          sweep_heterogeneity(cfg.plan, cfg.experiment.xs, cfg.experiment.replicates);
      emit_standard_outputs(cfg, records);
      return;
    }
    case ExperimentType::prop3:
      run_prop3(cfg);
      return;
    case ExperimentType::simulate_only:
      run_simulate_only(cfg);
      return;
  }
  throw Error("run_experiment: unknown experiment type");
}

}  // namespace epiflow
