#include "epiflow/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "epiflow/errors.hpp"
#include "epiflow/kernels.hpp"
#include "epiflow/rng.hpp"

namespace epiflow {

double EpiState::total() const {
  double acc = 0.0;
  for (const Vec* v : {&s, &e, &p, &i, &r}) acc += kern::sum(v->data(), v->size());
  return acc;
}

double EpiState::infected_mass() const {
  double acc = kern::sum(e.data(), e.size()) + kern::sum(i.data(), i.size());
  acc += kern::sum(p.data(), p.size());
  return acc;
}

bool EpiState::nonnegative() const {
  for (const Vec* v : {&s, &e, &p, &i, &r})
    for (double x : *v)
      if (x < 0.0) return false;
  return true;
}

double protocol_dt(double tau) { return std::min(1.0, tau); }

namespace {

/// X <- (Id + dt M) X. The update is in place via a scratch vector.
void diffuse(Vec& x, const Mat& m, double dt, Vec& scratch) {
  kern::matvec(m.data(), m.rows(), m.cols(), x.data(), scratch.data());
  kern::axpy(dt, scratch.data(), x.data(), x.size());
}

void react_seir(EpiState& st, const EpiParams& p, double dt) {
  const std::size_t n = st.s.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = p.beta[k] * st.i[k];
    const double s_to_e = st.s[k] * -std::expm1(-dt * lambda);
    const double e_to_i = st.e[k] * -std::expm1(-dt * p.gamma[k]);
    const double i_to_r = st.i[k] * -std::expm1(-dt * p.delta[k]);
    st.s[k] -= s_to_e;
    st.e[k] += s_to_e - e_to_i;
    st.i[k] += e_to_i - i_to_r;
    st.r[k] += i_to_r;
  }
}

void react_sepir(EpiState& st, const EpiParams& p, double dt) {
  const std::size_t n = st.s.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double lambda = p.beta[k] * st.i[k] + p.beta_p[k] * st.p[k];
    const double s_to_e = st.s[k] * -std::expm1(-dt * lambda);
    const double e_to_p = st.e[k] * -std::expm1(-dt * p.alpha[k]);
    const double p_to_i = st.p[k] * -std::expm1(-dt * p.gamma[k]);
    const double i_to_r = st.i[k] * -std::expm1(-dt * p.delta[k]);
    st.s[k] -= s_to_e;
    st.e[k] += s_to_e - e_to_p;
    st.p[k] += e_to_p - p_to_i;
    st.i[k] += p_to_i - i_to_r;
    st.r[k] += i_to_r;
  }
}

void check_state(const EpiState& st, const EpiParams& p, const Mat& m) {
  const std::size_t n = m.rows();
  const bool sepir = p.kind == ModelKind::sepir;
  if (st.s.size() != n || st.e.size() != n || st.i.size() != n || st.r.size() != n ||
      st.p.size() != (sepir ? n : 0))
    throw IndexMismatch("step: state shape does not match model");
}

}  // namespace

void step(EpiState& state, const Diffusion& m, const EpiParams& p, double dt) {
  check_state(state, p, m.m);
  const std::size_t n = m.m.rows();
  double diag_max = 0.0;
  for (std::size_t k = 0; k < n; ++k) diag_max = std::max(diag_max, -m.m(k, k));
  if (dt * diag_max >= 1.0)
    throw StepTooLarge("step: dt * max outflow rate must stay below 1");

  if (p.kind == ModelKind::seir)
    react_seir(state, p, dt);
  else
    react_sepir(state, p, dt);

  Vec scratch(n);
  diffuse(state.s, m.m, dt, scratch);
  diffuse(state.e, m.m, dt, scratch);
  if (p.kind == ModelKind::sepir) diffuse(state.p, m.m, dt, scratch);
  diffuse(state.i, m.m, dt, scratch);
  diffuse(state.r, m.m, dt, scratch);
  state.t += dt;
}

Trajectory simulate(const Diffusion& m, const EpiParams& p, EpiState initial,
                    const SimConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw InvalidRange("simulate: dt must be positive");
  if (cfg.horizon < cfg.dt) throw InvalidRange("simulate: horizon must be at least dt");
  validate_params(p, static_cast<int>(m.m.rows()));
  check_state(initial, p, m.m);
  if (!initial.nonnegative()) throw InvariantViolation("simulate: negative initial state");

  Trajectory traj;
  const long steps = static_cast<long>(std::ceil(cfg.horizon / cfg.dt - 1e-12));
  traj.times.push_back(initial.t);
  traj.samples.push_back(initial);
  for (long k = 0; k < steps; ++k) {
    step(initial, m, p, cfg.dt);
    if (cfg.record_every > 0 && (k + 1) % cfg.record_every == 0 && k + 1 < steps) {
      traj.times.push_back(initial.t);
      traj.samples.push_back(initial);
    }
  }
  traj.times.push_back(initial.t);
  traj.samples.push_back(initial);
  traj.terminal = std::move(initial);
  return traj;
}

Trajectory simulate(const Graph& g, const PolicyParams& theta, const Outrates& f,
                    const EpiParams& p, const EpiState& initial, double tau,
                    const SimConfig& cfg) {
  const Policy pi = build_policy(g, theta);
  const Diffusion m = build_diffusion(g, pi, f, tau);
  return simulate(m, p, initial, cfg);
}

FinalSizeReport final_size(const Trajectory& traj) {
  FinalSizeReport rep;
  rep.final_size = kern::sum(traj.terminal.r.data(), traj.terminal.r.size());
  rep.residual_infection = traj.terminal.infected_mass();
  rep.converged = rep.residual_infection <= 1e-6;
  return rep;
}

EpiState dfe_state(const Stationary& mu, ModelKind kind) {
  EpiState st;
  st.s = mu.mu;
  const std::size_t n = mu.mu.size();
  st.e.assign(n, 0.0);
  st.i.assign(n, 0.0);
  st.r.assign(n, 0.0);
  if (kind == ModelKind::sepir) st.p.assign(n, 0.0);
  return st;
}

EpiState protocol_initial_condition(const Stationary& mu_ref, ModelKind kind, int num_seed_nodes,
                                    double seed_fraction, std::uint64_t seed) {
  const int n = static_cast<int>(mu_ref.mu.size());
  if (num_seed_nodes < 1 || num_seed_nodes > n)
    throw InvalidRange("protocol ic: seed node count out of range");
  if (!(seed_fraction > 0.0 && seed_fraction < 1.0))
    throw InvalidRange("protocol ic: seed fraction must be in (0, 1)");
  EpiState st = dfe_state(mu_ref, kind);
  Rng rng(seed);
  std::vector<int> nodes(n);
  for (int v = 0; v < n; ++v) nodes[v] = v;
  for (int k = 0; k < num_seed_nodes; ++k) {
    const int pick = static_cast<int>(rng.uniform_int(k, n - 1));
    std::swap(nodes[k], nodes[pick]);
    const int node = nodes[k];
    const double moved = seed_fraction * st.s[node];
    st.s[node] -= moved;
    st.e[node] += moved;
  }
  return st;
}

EpiState eigen_aligned_initial_condition(const Stationary& mu, const Vec& v_eig, double j0) {
  const std::size_t n = mu.mu.size();
  if (v_eig.size() != 2 * n) throw IndexMismatch("eigen ic: v must have length 2|N|");
  if (!(j0 >= 0.0)) throw InvalidRange("eigen ic: j0 must be nonnegative");
  EpiState st;
  st.t = 0.0;
  st.s.assign(n, 0.0);
  st.e.assign(n, 0.0);
  st.i.assign(n, 0.0);
  st.r.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    st.e[k] = j0 * v_eig[k];
    st.i[k] = j0 * v_eig[n + k];
    st.s[k] = mu.mu[k] - st.e[k] - st.i[k];
    if (st.s[k] < 0.0)
      throw InvariantViolation("eigen ic: j0 too large, susceptibles went negative");
  }
  return st;
}

void write_trajectory_csv(const Trajectory& traj, ModelKind kind, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  const bool sepir = kind == ModelKind::sepir;
  out << (sepir ? "t,node,S,E,P,I,R\n" : "t,node,S,E,I,R\n");
  char buf[32];
  auto fmt = [&buf](double v) {
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
  };
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    const EpiState& st = traj.samples[k];
    for (std::size_t v = 0; v < st.s.size(); ++v) {
      out << fmt(traj.times[k]) << ',' << v << ',' << fmt(st.s[v]) << ',' << fmt(st.e[v]) << ',';
      if (sepir) out << fmt(st.p[v]) << ',';
      out << fmt(st.i[v]) << ',' << fmt(st.r[v]) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace epiflow
