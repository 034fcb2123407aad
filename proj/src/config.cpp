#include "epiflow/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "epiflow/errors.hpp"

#include "json.hpp"

namespace epiflow {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& item : obj.items())
    if (!allowed.count(item.key()))
      throw ConfigError(where + ": unknown key \"" + item.key() + "\"");
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for \"" + key + "\"");
  }
}

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ConfigError(field + " must be positive");
}

ExperimentType experiment_type_from(const std::string& name) {
  if (name == "compare") return ExperimentType::compare;
  if (name == "r0_sweep") return ExperimentType::r0_sweep;
  if (name == "tau_sweep") return ExperimentType::tau_sweep;
  if (name == "heterogeneity_sweep") return ExperimentType::heterogeneity_sweep;
  if (name == "prop3") return ExperimentType::prop3;
  if (name == "simulate_only") return ExperimentType::simulate_only;
  throw ConfigError("experiment.type: unknown type \"" + name + "\"");
}

}  // namespace

const char* experiment_type_name(ExperimentType t) {
  switch (t) {
    case ExperimentType::compare:
      return "compare";
    case ExperimentType::r0_sweep:
      return "r0_sweep";
    case ExperimentType::tau_sweep:
      return "tau_sweep";
    case ExperimentType::heterogeneity_sweep:
      return "heterogeneity_sweep";
    case ExperimentType::prop3:
      return "prop3";
    case ExperimentType::simulate_only:
      return "simulate_only";
  }
  return "?";
}

GraphFamily make_family(const std::string& name, const GraphParams& params) {
  if (name == "erdos_renyi") return ErdosRenyi{params.p};
  if (name == "waxman") return Waxman{params.alpha, params.beta};
  if (name == "barabasi_albert") return BarabasiAlbert{params.m};
  if (name == "relaxed_caveman")
    return RelaxedCaveman{params.cliques, params.clique_size, params.rewire_p};
  throw ConfigError("graph.family: unknown family \"" + name + "\"");
}

RunConfig parse_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "config",
             {"seed", "threads", "graph", "model", "diffusion", "optimizer", "simulation",
              "experiment", "output"});

  RunConfig cfg;
  cfg.plan.base_seed = get_or<std::uint64_t>(root, "seed", 1);
  cfg.plan.threads = get_or<int>(root, "threads", 0);
  if (cfg.plan.threads < 0) throw ConfigError("threads must be >= 0");
  if (cfg.plan.threads == 0)
    cfg.plan.threads = std::max(1u, std::thread::hardware_concurrency());

  if (root.contains("graph")) {
    const json& g = root.at("graph");
    check_keys(g, "graph", {"family", "size", "params"});
    cfg.family_name = get_or<std::string>(g, "family", "erdos_renyi");
    cfg.plan.graph_size = get_or<int>(g, "size", 30);
    if (cfg.plan.graph_size < 2) throw ConfigError("graph.size must be >= 2");
    if (g.contains("params")) {
      const json& p = g.at("params");
      check_keys(p, "graph.params",
                 {"p", "alpha", "beta", "m", "cliques", "clique_size", "rewire_p"});
      cfg.graph_params.p = get_or<double>(p, "p", cfg.graph_params.p);
      cfg.graph_params.alpha = get_or<double>(p, "alpha", cfg.graph_params.alpha);
      cfg.graph_params.beta = get_or<double>(p, "beta", cfg.graph_params.beta);
      cfg.graph_params.m = get_or<int>(p, "m", cfg.graph_params.m);
      cfg.graph_params.cliques = get_or<int>(p, "cliques", cfg.graph_params.cliques);
      cfg.graph_params.clique_size = get_or<int>(p, "clique_size", cfg.graph_params.clique_size);
      cfg.graph_params.rewire_p = get_or<double>(p, "rewire_p", cfg.graph_params.rewire_p);
    }
    if (!(cfg.graph_params.p > 0.0 && cfg.graph_params.p <= 1.0))
      throw ConfigError("graph.params.p must be in (0, 1]");
    if (cfg.graph_params.m < 1) throw ConfigError("graph.params.m must be >= 1");
    if (cfg.graph_params.clique_size < 2) throw ConfigError("graph.params.clique_size must be >= 2");
  }

  if (root.contains("model")) {
    const json& m = root.at("model");
    check_keys(m, "model", {"kind", "distributions"});
    const std::string kind = get_or<std::string>(m, "kind", "SEIR");
    if (kind == "SEIR")
      cfg.plan.kind = ModelKind::seir;
    else if (kind == "SEPIR")
      cfg.plan.kind = ModelKind::sepir;
    else
      throw ConfigError("model.kind must be SEIR or SEPIR");
    if (m.contains("distributions")) {
      const json& d = m.at("distributions");
      check_keys(d, "model.distributions",
                 {"delta_mean", "delta_sigma", "gamma_mean", "gamma_sigma", "r0_mean", "r0_sigma",
                  "alpha_mean", "alpha_sigma", "beta_p_ratio"});
      ProtocolDistributions& pd = cfg.plan.protocol.dist;
      pd.delta_mean = get_or<double>(d, "delta_mean", pd.delta_mean);
      pd.delta_sigma = get_or<double>(d, "delta_sigma", pd.delta_sigma);
      pd.gamma_mean = get_or<double>(d, "gamma_mean", pd.gamma_mean);
      pd.gamma_sigma = get_or<double>(d, "gamma_sigma", pd.gamma_sigma);
      pd.r0_mean = get_or<double>(d, "r0_mean", pd.r0_mean);
      pd.r0_sigma = get_or<double>(d, "r0_sigma", pd.r0_sigma);
      pd.alpha_mean = get_or<double>(d, "alpha_mean", pd.alpha_mean);
      pd.alpha_sigma = get_or<double>(d, "alpha_sigma", pd.alpha_sigma);
      pd.beta_p_ratio = get_or<double>(d, "beta_p_ratio", pd.beta_p_ratio);
      require_positive(pd.delta_mean, "model.distributions.delta_mean");
      require_positive(pd.gamma_mean, "model.distributions.gamma_mean");
      require_positive(pd.r0_mean, "model.distributions.r0_mean");
      require_positive(pd.alpha_mean, "model.distributions.alpha_mean");
      require_positive(pd.beta_p_ratio, "model.distributions.beta_p_ratio");
      if (pd.delta_sigma < 0 || pd.gamma_sigma < 0 || pd.r0_sigma < 0 || pd.alpha_sigma < 0)
        throw ConfigError("model.distributions: sigmas must be >= 0");
    }
  }

  if (root.contains("diffusion")) {
    const json& d = root.at("diffusion");
    check_keys(d, "diffusion", {"tau", "outrate_lo", "outrate_hi"});
    cfg.plan.tau = get_or<double>(d, "tau", 1.0);
    require_positive(cfg.plan.tau, "diffusion.tau");
    cfg.plan.protocol.outrate_lo = get_or<double>(d, "outrate_lo", 0.0);
    cfg.plan.protocol.outrate_hi = get_or<double>(d, "outrate_hi", 0.4);
    if (!(cfg.plan.protocol.outrate_lo >= 0.0) ||
        !(cfg.plan.protocol.outrate_hi > cfg.plan.protocol.outrate_lo))
      throw ConfigError("diffusion.outrate range must satisfy 0 <= lo < hi");
  }

  if (root.contains("optimizer")) {
    const json& o = root.at("optimizer");
    check_keys(o, "optimizer", {"steps", "schedule", "track_best", "smooth_max_a", "losses"});
    cfg.plan.opt.steps = get_or<int>(o, "steps", 400);
    if (cfg.plan.opt.steps < 1) throw ConfigError("optimizer.steps must be >= 1");
    cfg.plan.opt.track_best = get_or<bool>(o, "track_best", true);
    cfg.plan.smooth_max_a = get_or<double>(o, "smooth_max_a", 20.0);
    require_positive(cfg.plan.smooth_max_a, "optimizer.smooth_max_a");
    if (o.contains("schedule")) {
      const json& s = o.at("schedule");
      check_keys(s, "optimizer.schedule", {"type", "phi", "rho", "s", "s0"});
      const std::string type = get_or<std::string>(s, "type", "paper_exp");
      const double phi = get_or<double>(s, "phi", 2.5e-3);
      const double rho = get_or<double>(s, "rho", 250.0);
      const double step = get_or<double>(s, "s", 1e-2);
      const double s0 = get_or<double>(s, "s0", 1e-2);
      require_positive(phi, "optimizer.schedule.phi");
      require_positive(rho, "optimizer.schedule.rho");
      require_positive(step, "optimizer.schedule.s");
      require_positive(s0, "optimizer.schedule.s0");
      if (type == "paper_exp")
        cfg.plan.opt.schedule = PaperExp{phi, rho};
      else if (type == "constant")
        cfg.plan.opt.schedule = ConstantStep{step};
      else if (type == "exp_decay")
        cfg.plan.opt.schedule = ExpDecay{s0, rho};
      else
        throw ConfigError("optimizer.schedule.type: unknown type \"" + type + "\"");
    }
    if (o.contains("losses")) {
      cfg.plan.losses.clear();
      for (const auto& item : o.at("losses")) {
        const std::string name = item.get<std::string>();
        if (name == "epi")
          cfg.plan.losses.push_back(LossKind::epi);
        else if (name == "nodiff")
          cfg.plan.losses.push_back(LossKind::nodiff);
        else if (name == "quickdiff")
          cfg.plan.losses.push_back(LossKind::quickdiff);
        else
          throw ConfigError("optimizer.losses: unknown loss \"" + name + "\"");
      }
      if (cfg.plan.losses.empty()) throw ConfigError("optimizer.losses must not be empty");
    }
  }

  if (root.contains("simulation")) {
    const json& s = root.at("simulation");
    check_keys(s, "simulation", {"horizon", "dt", "seed_nodes", "seed_fraction", "record_every"});
    cfg.plan.sim.horizon = get_or<double>(s, "horizon", 1000.0);
    require_positive(cfg.plan.sim.horizon, "simulation.horizon");
    cfg.plan.sim.dt = get_or<double>(s, "dt", 0.0);
    if (cfg.plan.sim.dt < 0.0) throw ConfigError("simulation.dt must be >= 0 (0 = min(1, tau))");
    if (cfg.plan.sim.dt > 0.0 && cfg.plan.sim.horizon < cfg.plan.sim.dt)
      throw ConfigError("simulation.horizon must be >= dt");
    cfg.plan.num_seed_nodes = get_or<int>(s, "seed_nodes", 2);
    if (cfg.plan.num_seed_nodes < 1) throw ConfigError("simulation.seed_nodes must be >= 1");
    cfg.plan.seed_fraction = get_or<double>(s, "seed_fraction", 0.05);
    if (!(cfg.plan.seed_fraction > 0.0 && cfg.plan.seed_fraction < 1.0))
      throw ConfigError("simulation.seed_fraction must be in (0, 1)");
    cfg.plan.sim.record_every = get_or<int>(s, "record_every", 0);
    if (cfg.plan.sim.record_every < 0) throw ConfigError("simulation.record_every must be >= 0");
  }

  if (root.contains("experiment")) {
    const json& e = root.at("experiment");
    check_keys(e, "experiment",
               {"type", "replicates", "taus", "xs", "samples", "families", "epsilon",
                "ball_radius", "j0", "num_perturbations", "j0_floor", "max_shrink_rounds"});
    cfg.experiment.type = experiment_type_from(get_or<std::string>(e, "type", "compare"));
    cfg.experiment.replicates = get_or<int>(e, "replicates", 20);
    if (cfg.experiment.replicates < 1) throw ConfigError("experiment.replicates must be >= 1");
    cfg.experiment.taus = get_or<std::vector<double>>(e, "taus", cfg.experiment.taus);
    for (double t : cfg.experiment.taus) require_positive(t, "experiment.taus entries");
    cfg.experiment.xs = get_or<std::vector<double>>(e, "xs", cfg.experiment.xs);
    for (double x : cfg.experiment.xs)
      if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("experiment.xs entries must be in [0, 1]");
    cfg.experiment.samples = get_or<int>(e, "samples", 10);
    if (cfg.experiment.samples < 1) throw ConfigError("experiment.samples must be >= 1");
    cfg.experiment.families =
        get_or<std::vector<std::string>>(e, "families", cfg.experiment.families);
    for (const std::string& f : cfg.experiment.families) make_family(f, cfg.graph_params);
    Prop3Config& p3 = cfg.experiment.prop3;
    p3.epsilon = get_or<double>(e, "epsilon", p3.epsilon);
    if (!(p3.epsilon > 0.0 && p3.epsilon < 1.0))
      throw ConfigError("experiment.epsilon must be in (0, 1)");
    p3.ball_radius = get_or<double>(e, "ball_radius", p3.ball_radius);
    require_positive(p3.ball_radius, "experiment.ball_radius");
    p3.j0 = get_or<double>(e, "j0", p3.j0);
    require_positive(p3.j0, "experiment.j0");
    p3.num_perturbations = get_or<int>(e, "num_perturbations", p3.num_perturbations);
    if (p3.num_perturbations < 1) throw ConfigError("experiment.num_perturbations must be >= 1");
    p3.j0_floor = get_or<double>(e, "j0_floor", p3.j0_floor);
    require_positive(p3.j0_floor, "experiment.j0_floor");
    p3.max_shrink_rounds = get_or<int>(e, "max_shrink_rounds", p3.max_shrink_rounds);
    if (p3.max_shrink_rounds < 0) throw ConfigError("experiment.max_shrink_rounds must be >= 0");
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    check_keys(o, "output", {"dir", "results_csv", "summary_json", "trajectory_csv"});
    cfg.output.dir = get_or<std::string>(o, "dir", cfg.output.dir);
    cfg.output.results_csv = get_or<std::string>(o, "results_csv", cfg.output.results_csv);
    cfg.output.summary_json = get_or<std::string>(o, "summary_json", cfg.output.summary_json);
    cfg.output.trajectory_csv = get_or<std::string>(o, "trajectory_csv", cfg.output.trajectory_csv);
  }

  cfg.plan.family = make_family(cfg.family_name, cfg.graph_params);
  const bool uses_caveman =
      cfg.family_name == "relaxed_caveman" ||
      std::count(cfg.experiment.families.begin(), cfg.experiment.families.end(),
                 "relaxed_caveman") > 0;
  if (uses_caveman &&
      cfg.graph_params.cliques * cfg.graph_params.clique_size != cfg.plan.graph_size)
    throw ConfigError("relaxed_caveman: cliques * clique_size must equal graph.size");
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string resolved_config_json(const RunConfig& cfg) {
  json root;
  root["seed"] = cfg.plan.base_seed;
  root["threads"] = cfg.plan.threads;
  root["graph"] = {{"family", cfg.family_name},
                   {"size", cfg.plan.graph_size},
                   {"params",
                    {{"p", cfg.graph_params.p},
                     {"alpha", cfg.graph_params.alpha},
                     {"beta", cfg.graph_params.beta},
                     {"m", cfg.graph_params.m},
                     {"cliques", cfg.graph_params.cliques},
                     {"clique_size", cfg.graph_params.clique_size},
                     {"rewire_p", cfg.graph_params.rewire_p}}}};
  const ProtocolDistributions& pd = cfg.plan.protocol.dist;
  root["model"] = {{"kind", cfg.plan.kind == ModelKind::seir ? "SEIR" : "SEPIR"},
                   {"distributions",
                    {{"delta_mean", pd.delta_mean},
                     {"delta_sigma", pd.delta_sigma},
                     {"gamma_mean", pd.gamma_mean},
                     {"gamma_sigma", pd.gamma_sigma},
                     {"r0_mean", pd.r0_mean},
                     {"r0_sigma", pd.r0_sigma},
                     {"alpha_mean", pd.alpha_mean},
                     {"alpha_sigma", pd.alpha_sigma},
                     {"beta_p_ratio", pd.beta_p_ratio}}}};
  root["diffusion"] = {{"tau", cfg.plan.tau},
                       {"outrate_lo", cfg.plan.protocol.outrate_lo},
                       {"outrate_hi", cfg.plan.protocol.outrate_hi}};
  json schedule;
  if (const auto* pe = std::get_if<PaperExp>(&cfg.plan.opt.schedule))
    schedule = {{"type", "paper_exp"}, {"phi", pe->phi}, {"rho", pe->rho}};
  else if (const auto* cs = std::get_if<ConstantStep>(&cfg.plan.opt.schedule))
    schedule = {{"type", "constant"}, {"s", cs->s}};
  else {
    const auto& ed = std::get<ExpDecay>(cfg.plan.opt.schedule);
    schedule = {{"type", "exp_decay"}, {"s0", ed.s0}, {"rho", ed.rho}};
  }
  json losses = json::array();
  for (LossKind k : cfg.plan.losses) losses.push_back(loss_name(k));
  root["optimizer"] = {{"steps", cfg.plan.opt.steps},
                       {"schedule", schedule},
                       {"track_best", cfg.plan.opt.track_best},
                       {"smooth_max_a", cfg.plan.smooth_max_a},
                       {"losses", losses}};
  root["simulation"] = {{"horizon", cfg.plan.sim.horizon},
                        {"dt", cfg.plan.sim.dt},
                        {"effective_dt", resolve_sim(cfg.plan.sim, cfg.plan.tau).dt},
                        {"seed_nodes", cfg.plan.num_seed_nodes},
                        {"seed_fraction", cfg.plan.seed_fraction},
                        {"record_every", cfg.plan.sim.record_every}};
  root["experiment"] = {{"type", experiment_type_name(cfg.experiment.type)},
                        {"replicates", cfg.experiment.replicates},
                        {"taus", cfg.experiment.taus},
                        {"xs", cfg.experiment.xs},
                        {"samples", cfg.experiment.samples},
                        {"families", cfg.experiment.families},
                        {"epsilon", cfg.experiment.prop3.epsilon},
                        {"ball_radius", cfg.experiment.prop3.ball_radius},
                        {"j0", cfg.experiment.prop3.j0},
                        {"num_perturbations", cfg.experiment.prop3.num_perturbations},
                        {"j0_floor", cfg.experiment.prop3.j0_floor},
                        {"max_shrink_rounds", cfg.experiment.prop3.max_shrink_rounds}};
  root["output"] = {{"dir", cfg.output.dir},
                    {"results_csv", cfg.output.results_csv},
                    {"summary_json", cfg.output.summary_json},
                    {"trajectory_csv", cfg.output.trajectory_csv}};
  return root.dump(2) + "\n";
}

}  // namespace epiflow
