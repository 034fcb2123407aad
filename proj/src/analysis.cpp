#include "epiflow/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "epiflow/errors.hpp"
#include "epiflow/parallel.hpp"
#include "epiflow/rng.hpp"

#include "json.hpp"

namespace epiflow {

namespace {

constexpr std::uint64_t kGraphStream = 1;
constexpr std::uint64_t kOutrateStream = 2;
constexpr std::uint64_t kThetaStream = 3;
constexpr std::uint64_t kEpiStream = 4;
constexpr std::uint64_t kSeedNodeStream = 5;
constexpr std::uint64_t kProp3Stream = 6;

double positive_abs_normal(Rng& rng, double mean, double sigma) {
  for (;;) {
    const double v = std::fabs(rng.normal(mean, sigma));
    if (v > 0.0) return v;
  }
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::string replicate_id(const std::string& prefix, int rep) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "rep%03d", rep);
  return prefix + buf;
}

}  // namespace

ProtocolSample sample_protocol(const GraphSpec& spec, ModelKind kind,
                               const ProtocolOptions& options, std::uint64_t seed) {
  if (!(options.heterogeneity_x >= 0.0 && options.heterogeneity_x <= 1.0))
    throw InvalidRange("sample_protocol: heterogeneity x must be in [0, 1]");
  GraphSpec local = spec;
  local.seed = Rng::mix(seed, kGraphStream);

  ProtocolSample sample{generate(local),
                        Outrates{},
                        PolicyParams{},
                        EpiParams{},
                        Stationary{},
                        Vec{},
                        seed};
  const int n = sample.g.node_count();
  sample.f = sample_outrates(sample.g, options.outrate_lo, options.outrate_hi,
                             Rng::mix(seed, kOutrateStream));

  Rng theta_rng(Rng::mix(seed, kThetaStream));
  sample.theta_ref.resize(sample.g.edge_count());
  for (double& t : sample.theta_ref) t = theta_rng.uniform(-options.theta_range, options.theta_range);

  // mu_ref is independent of tau: scaling M leaves its null space unchanged.
  sample.mu_ref =
      stationary_distribution(build_diffusion(sample.g, build_policy(sample.g, sample.theta_ref),
                                              sample.f, 1.0));

  Rng epi_rng(Rng::mix(seed, kEpiStream));
  const ProtocolDistributions& d = options.dist;
  const double x = options.heterogeneity_x;
  EpiParams& p = sample.params;
  p.kind = kind;
  p.delta.resize(n);
  p.gamma.resize(n);
  p.beta.resize(n);
  sample.node_r0.resize(n);
  for (int k = 0; k < n; ++k) p.delta[k] = positive_abs_normal(epi_rng, d.delta_mean, x * d.delta_sigma);
  for (int k = 0; k < n; ++k)
    p.gamma[k] = options.gamma_constant ? d.gamma_mean
                                        : positive_abs_normal(epi_rng, d.gamma_mean, d.gamma_sigma);
  // beta solves the node-reproduction identity for the model at hand, so
  // the drawn R0(n) straddle the threshold 1 in both cases:
  //   SEIR   R0(n) = beta mu / delta
  //   SEPIR  R0(n) = (beta / delta + beta_p / gamma) mu, beta_p = ratio beta
  for (int k = 0; k < n; ++k) {
    sample.node_r0[k] = positive_abs_normal(epi_rng, d.r0_mean, x * d.r0_sigma);
    p.beta[k] = sample.node_r0[k] * p.delta[k] / sample.mu_ref.mu[k];
    if (kind == ModelKind::sepir)
      p.beta[k] /= 1.0 + d.beta_p_ratio * p.delta[k] / p.gamma[k];
  }
  if (kind == ModelKind::sepir) {
    p.alpha.resize(n);
    p.beta_p.resize(n);
    for (int k = 0; k < n; ++k) p.alpha[k] = positive_abs_normal(epi_rng, d.alpha_mean, d.alpha_sigma);
    for (int k = 0; k < n; ++k) p.beta_p[k] = d.beta_p_ratio * p.beta[k];
  }
  validate_params(p, n);
  return sample;
}

SimConfig resolve_sim(const SimConfig& sim, double tau) {
  SimConfig out = sim;
  if (!(out.dt > 0.0)) out.dt = protocol_dt(tau);
  return out;
}

std::vector<ResultRecord> compare_policies(const ProtocolSample& sample,
                                           const ExperimentPlan& plan,
                                           const std::string& experiment_id) {
  const SimConfig sim = resolve_sim(plan.sim, plan.tau);
  const EpiState ic =
      protocol_initial_condition(sample.mu_ref, plan.kind, plan.num_seed_nodes,
                                 plan.seed_fraction, Rng::mix(sample.seed, kSeedNodeStream));
  ResultRecord base;
  base.experiment_id = experiment_id;
  base.family = family_name(plan.family);
  base.size = plan.graph_size;
  base.tau = plan.tau;
  base.x = plan.protocol.heterogeneity_x;
  base.seed = sample.seed;

  std::vector<ResultRecord> records;
  const LossContext ctx{sample.g, sample.f, sample.params, plan.tau, plan.smooth_max_a};

  const auto t0 = std::chrono::steady_clock::now();
  const Diffusion m_ref =
      build_diffusion(sample.g, build_policy(sample.g, sample.theta_ref), sample.f, plan.tau);
  const Stationary st_ref = stationary_distribution(m_ref);
  ResultRecord ref = base;
  ref.policy = "REF";
  ref.r0 = spectral_radius_perron(next_gen_matrix(m_ref, sample.params, st_ref)).rho;
  const FinalSizeReport ref_fs = final_size(simulate(m_ref, sample.params, ic, sim));
  ref.final_size = ref_fs.final_size;
  ref.relative_final_size = 1.0;
  ref.converged = ref_fs.converged;
  ref.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  records.push_back(ref);

  for (LossKind kind : plan.losses) {
    const auto t1 = std::chrono::steady_clock::now();
    ResultRecord rec = base;
    rec.policy = policy_label(kind);
    try {
      const OptimizationResult opt = optimize(kind, ctx, sample.theta_ref, plan.opt);
      const Diffusion m_star =
          build_diffusion(sample.g, build_policy(sample.g, opt.theta_star), sample.f, plan.tau);
      const FinalSizeReport fs = final_size(simulate(m_star, sample.params, ic, sim));
      rec.r0 = opt.final_r0;
      rec.final_size = fs.final_size;
      rec.relative_final_size = fs.final_size / ref_fs.final_size;
      rec.converged = fs.converged && !opt.aborted_nonfinite;
    } catch (const Error& err) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      rec.r0 = nan;
      rec.final_size = nan;
      rec.relative_final_size = nan;
      rec.converged = false;
      if (plan.log_progress)
        std::cerr << experiment_id << " " << rec.policy << " failed: " << err.what() << "\n";
    }
    rec.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    records.push_back(rec);
  }
  if (plan.log_progress) {
    std::cerr << experiment_id << " r0_ref=" << ref.r0;
    for (std::size_t k = 1; k < records.size(); ++k)
      std::cerr << " " << records[k].policy << "=" << records[k].relative_final_size;
    std::cerr << "\n";
  }
  return records;
}

std::vector<ResultRecord> compare_batch(const ExperimentPlan& plan, int replicates,
                                        const std::string& id_prefix) {
  std::vector<std::vector<ResultRecord>> slots(replicates);
  parallel_for(replicates, plan.threads, [&](int rep) {
    const GraphSpec spec{plan.family, plan.graph_size, 0};
    const ProtocolSample sample =
        sample_protocol(spec, plan.kind, plan.protocol, Rng::mix(plan.base_seed, rep));
    slots[rep] = compare_policies(sample, plan, replicate_id(id_prefix, rep));
  });
  std::vector<ResultRecord> records;
  for (auto& s : slots) records.insert(records.end(), s.begin(), s.end());
  return records;
}

std::vector<ResultRecord> sweep_r0_vs_final_size(const std::vector<GraphFamily>& families,
                                                 const ExperimentPlan& plan, int replicates) {
  std::vector<ResultRecord> records;
  for (const GraphFamily& family : families) {
    ExperimentPlan local = plan;
    local.family = family;
    const std::string prefix = std::string("r0_sweep/") + family_name(family) + "/";
    std::vector<ResultRecord> slots(replicates);
    parallel_for(replicates, plan.threads, [&](int rep) {
      const std::uint64_t seed = Rng::mix(Rng::mix(plan.base_seed, std::hash<std::string>{}(prefix)), rep);
      const GraphSpec spec{family, plan.graph_size, 0};
      const ProtocolSample sample = sample_protocol(spec, plan.kind, plan.protocol, seed);
      const SimConfig sim = resolve_sim(plan.sim, plan.tau);
      const Diffusion m_ref =
          build_diffusion(sample.g, build_policy(sample.g, sample.theta_ref), sample.f, plan.tau);
      const Stationary st = stationary_distribution(m_ref);
      const EpiState ic =
          protocol_initial_condition(sample.mu_ref, plan.kind, plan.num_seed_nodes,
                                     plan.seed_fraction, Rng::mix(sample.seed, kSeedNodeStream));
      ResultRecord rec;
      rec.experiment_id = replicate_id(prefix, rep);
      rec.family = family_name(family);
      rec.size = plan.graph_size;
      rec.policy = "REF";
      rec.tau = plan.tau;
      rec.x = plan.protocol.heterogeneity_x;
      rec.seed = sample.seed;
      rec.r0 = spectral_radius_perron(next_gen_matrix(m_ref, sample.params, st)).rho;
      const FinalSizeReport fs = final_size(simulate(m_ref, sample.params, ic, sim));
      rec.final_size = fs.final_size;
      rec.relative_final_size = 1.0;
      rec.converged = fs.converged;
      slots[rep] = rec;
      if (plan.log_progress)
        std::cerr << rec.experiment_id << " r0=" << rec.r0 << " fs=" << rec.final_size << "\n";
    });
    records.insert(records.end(), slots.begin(), slots.end());
  }
  return records;
}

std::vector<ResultRecord> sweep_tau(const ExperimentPlan& plan, const std::vector<double>& taus,
                                    int replicates) {
  for (double t : taus)
    if (!(t > 0.0)) throw InvalidRange("sweep_tau: tau values must be positive");
  std::vector<std::vector<ResultRecord>> slots(replicates);
  parallel_for(replicates, plan.threads, [&](int rep) {
    // one sample per replicate, reused across every tau
    const GraphSpec spec{plan.family, plan.graph_size, 0};
    const ProtocolSample sample =
        sample_protocol(spec, plan.kind, plan.protocol, Rng::mix(plan.base_seed, rep));
    for (double tau : taus) {
      ExperimentPlan local = plan;
      local.tau = tau;
      const std::string id =
          replicate_id("tau_sweep/tau=" + format_double(tau) + "/", rep);
      auto recs = compare_policies(sample, local, id);
      slots[rep].insert(slots[rep].end(), recs.begin(), recs.end());
    }
  });
  std::vector<ResultRecord> records;
  for (auto& s : slots) records.insert(records.end(), s.begin(), s.end());
  return records;
}

std::vector<ResultRecord> sweep_heterogeneity(const ExperimentPlan& plan,
                                              const std::vector<double>& xs, int replicates) {
  for (double x : xs)
    if (!(x >= 0.0 && x <= 1.0)) throw InvalidRange("sweep_heterogeneity: x must be in [0, 1]");
  std::vector<std::vector<ResultRecord>> slots(replicates);
  parallel_for(replicates, plan.threads, [&](int rep) {
    for (std::size_t xi = 0; xi < xs.size(); ++xi) {
      ExperimentPlan local = plan;
      local.protocol.heterogeneity_x = xs[xi];
      local.protocol.gamma_constant = true;
      const GraphSpec spec{plan.family, plan.graph_size, 0};
      const ProtocolSample sample = sample_protocol(
          spec, plan.kind, local.protocol, Rng::mix(Rng::mix(plan.base_seed, 1000 + xi), rep));
      const std::string id =
          replicate_id("heterogeneity_sweep/x=" + format_double(xs[xi]) + "/", rep);
      auto recs = compare_policies(sample, local, id);
      slots[rep].insert(slots[rep].end(), recs.begin(), recs.end());
    }
  });
  std::vector<ResultRecord> records;
  for (auto& s : slots) records.insert(records.end(), s.begin(), s.end());
  return records;
}

double km_final_size(double r0) {
  if (!(r0 > 0.0)) throw InvalidRange("km_final_size: r0 must be positive");
  if (r0 <= 1.0) return 0.0;
  auto f = [r0](double r) { return r0 * r + std::log1p(-r); };
  double lo = 1e-12;
  double hi = 1.0 - 1e-16;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

Prop3Report verify_prop3(const ProtocolSample& sample, double tau, const Prop3Config& cfg,
                         const SimConfig& sim_in) {
  if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0))
    throw InvalidRange("verify_prop3: epsilon must be in (0, 1)");
  const SimConfig sim = resolve_sim(sim_in, tau);
  Prop3Report report;
  const Diffusion m_ref =
      build_diffusion(sample.g, build_policy(sample.g, sample.theta_ref), sample.f, tau);
  const Stationary st_ref = stationary_distribution(m_ref);
  report.r0_ref = spectral_radius_perron(next_gen_matrix(m_ref, sample.params, st_ref)).rho;
  if ((1.0 + cfg.epsilon) * report.r0_ref >= 1.0) {
    report.status = Prop3Status::skipped_precondition;
    return report;
  }

  for (int round = 0; round <= cfg.max_shrink_rounds; ++round) {
    const double radius = cfg.ball_radius / std::pow(2.0, round);
    const double j0 = std::max(cfg.j0 / std::pow(2.0, round), cfg.j0_floor);
    std::vector<Prop3Perturbation> perts(cfg.num_perturbations);
    int ok_count = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int pi = 0; pi < cfg.num_perturbations; ++pi) {
      Rng rng(Rng::mix(Rng::mix(sample.seed, kProp3Stream + round), pi));
      PolicyParams theta = sample.theta_ref;
      for (double& t : theta) t += rng.uniform(-radius, radius);
      const Diffusion m = build_diffusion(sample.g, build_policy(sample.g, theta), sample.f, tau);
      const Stationary st = stationary_distribution(m);
      Prop3Perturbation& pert = perts[pi];
      pert.r0 = spectral_radius_perron(next_gen_matrix(m, sample.params, st)).rho;
      if ((1.0 + cfg.epsilon) * pert.r0 >= 1.0) {
        pert.ok = false;
        worst = std::min(worst, -1.0);
        continue;
      }
      const LargeDomain ld = large_domain(m, sample.params, st);
      const EpiState ic = eigen_aligned_initial_condition(st, ld.v_eig, j0);
      const FinalSizeReport fs = final_size(simulate(m, sample.params, ic, sim));
      pert.final_size = fs.final_size;
      pert.lower = j0 / (1.0 - (1.0 - cfg.epsilon) * pert.r0);
      pert.upper = j0 / (1.0 - (1.0 + cfg.epsilon) * pert.r0);
      pert.ok = pert.lower <= fs.final_size && fs.final_size <= pert.upper;
      worst = std::min(worst, std::min(fs.final_size - pert.lower, pert.upper - fs.final_size));
      if (pert.ok) ++ok_count;
    }
    report.ball_radius_used = radius;
    report.j0_used = j0;
    report.shrink_rounds = round;
    report.fraction_ok = static_cast<double>(ok_count) / cfg.num_perturbations;
    report.worst_margin = worst;
    report.perturbations = std::move(perts);
    if (ok_count == cfg.num_perturbations) {
      report.status = Prop3Status::satisfied;
      return report;
    }
    if (j0 <= cfg.j0_floor) break;
  }
  report.status = Prop3Status::exhausted;
  return report;
}

namespace {

const char kCsvHeader[] =
    "experiment_id,family,size,policy,tau,x,r0,final_size,relative_final_size,converged,seed";

}  // namespace

std::string results_csv_string(const std::vector<ResultRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const ResultRecord& r : records) {
    out += r.experiment_id;
    out += ',';
    out += r.family;
    out += ',';
    out += std::to_string(r.size);
    out += ',';
    out += r.policy;
    out += ',';
    out += format_double(r.tau);
    out += ',';
    out += format_double(r.x);
    out += ',';
    out += format_double(r.r0);
    out += ',';
    out += format_double(r.final_size);
    out += ',';
    out += format_double(r.relative_final_size);
    out += ',';
    out += r.converged ? "true" : "false";
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

void emit_results_csv(const std::vector<ResultRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << results_csv_string(records);
  if (!out) throw IoError("write failed: " + path);
}

std::vector<ResultRecord> parse_results_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing CSV header", 1);
  ++lineno;
  if (line != kCsvHeader) throw ParseError("unexpected CSV header", 1);
  std::vector<ResultRecord> records;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (fields.size() != 11) throw ParseError("expected 11 fields", lineno);
    ResultRecord r;
    r.experiment_id = fields[0];
    r.family = fields[1];
    r.size = std::stoi(fields[2]);
    r.policy = fields[3];
    r.tau = std::strtod(fields[4].c_str(), nullptr);
    r.x = std::strtod(fields[5].c_str(), nullptr);
    r.r0 = std::strtod(fields[6].c_str(), nullptr);
    r.final_size = std::strtod(fields[7].c_str(), nullptr);
    r.relative_final_size = std::strtod(fields[8].c_str(), nullptr);
    if (fields[9] != "true" && fields[9] != "false") throw ParseError("bad converged flag", lineno);
    r.converged = fields[9] == "true";
    r.seed = std::stoull(fields[10]);
    records.push_back(std::move(r));
  }
  return records;
}

double quantile_nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidRange("quantile: empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidRange("quantile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  if (q == 0.0) return values.front();
  const auto n = static_cast<double>(values.size());
  const auto rank = static_cast<std::size_t>(std::ceil(q * n));
  return values[rank - 1];
}

double median(std::vector<double> values) { return quantile_nearest_rank(std::move(values), 0.5); }

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw InvalidRange("spearman: need two samples of equal size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(n);
    std::size_t k = 0;
    while (k < n) {
      std::size_t j = k;
      while (j + 1 < n && v[idx[j + 1]] == v[idx[k]]) ++j;
      const double avg = 0.5 * (static_cast<double>(k) + static_cast<double>(j)) + 1.0;
      for (std::size_t t = k; t <= j; ++t) r[idx[t]] = avg;
      k = j + 1;
    }
    return r;
  };
  const std::vector<double> ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double num = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return num / std::sqrt(va * vb);
}

std::string summary_json(const std::vector<ResultRecord>& records) {
  using nlohmann::json;
  struct Key {
    std::string family;
    int size;
    std::string policy;
    double tau;
    double x;
    bool operator<(const Key& o) const {
      return std::tie(family, size, policy, tau, x) <
             std::tie(o.family, o.size, o.policy, o.tau, o.x);
    }
  };
  std::map<Key, std::vector<const ResultRecord*>> groups;
  for (const ResultRecord& r : records)
    groups[{r.family, r.size, r.policy, r.tau, r.x}].push_back(&r);

  json out;
  out["groups"] = json::array();
  for (const auto& [key, members] : groups) {
    std::vector<double> rel, r0s, fs;
    int converged = 0;
    for (const ResultRecord* r : members) {
      if (std::isfinite(r->relative_final_size)) rel.push_back(r->relative_final_size);
      if (std::isfinite(r->r0)) r0s.push_back(r->r0);
      if (std::isfinite(r->final_size)) fs.push_back(r->final_size);
      if (r->converged) ++converged;
    }
    json g;
    g["family"] = key.family;
    g["size"] = key.size;
    g["policy"] = key.policy;
    g["tau"] = key.tau;
    g["x"] = key.x;
    g["n"] = members.size();
    g["converged"] = converged;
    auto quant = [](const std::vector<double>& v) {
      json q;
      if (!v.empty()) {
        q["median"] = median(v);
        q["q20"] = quantile_nearest_rank(v, 0.2);
        q["q80"] = quantile_nearest_rank(v, 0.8);
      }
      return q;
    };
    g["relative_final_size"] = quant(rel);
    g["r0"] = quant(r0s);
    g["final_size"] = quant(fs);
    out["groups"].push_back(g);
  }

  // per-family R0 vs final-size association over REF records
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_family;
  for (const ResultRecord& r : records)
    if (r.policy == "REF" && std::isfinite(r.r0) && std::isfinite(r.final_size)) {
      by_family[r.family].first.push_back(r.r0);
      by_family[r.family].second.push_back(r.final_size);
    }
  out["r0_final_size"] = json::array();
  for (const auto& [family, data] : by_family) {
    const auto& [r0s, fs] = data;
    if (r0s.size() < 2) continue;
    double mr = 0.0, mf = 0.0;
    for (std::size_t i = 0; i < r0s.size(); ++i) {
      mr += r0s[i];
      mf += fs[i];
    }
    mr /= static_cast<double>(r0s.size());
    mf /= static_cast<double>(r0s.size());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < r0s.size(); ++i) {
      num += (r0s[i] - mr) * (fs[i] - mf);
      den += (r0s[i] - mr) * (r0s[i] - mr);
    }
    json j;
    j["family"] = family;
    j["n"] = r0s.size();
    j["slope"] = den > 0.0 ? num / den : 0.0;
    j["spearman"] = spearman(r0s, fs);
    out["r0_final_size"].push_back(j);
  }
  return out.dump(2) + "\n";
}

}  // namespace epiflow
