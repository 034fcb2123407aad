#include "epiflow/diffusion.hpp"

#include <cmath>

#include "epiflow/errors.hpp"
#include "epiflow/kernels.hpp"

namespace epiflow {

Policy build_policy(const Graph& g, const PolicyParams& theta) {
  const int n = g.node_count();
  if (static_cast<int>(theta.size()) != g.edge_count())
    throw IndexMismatch("build_policy: theta size must equal edge count");
  Policy pol{Mat(n, n)};
  for (int v = 0; v < n; ++v) {
    const auto& nb = g.out_neighbors(v);
    const int off = g.edge_offset(v);
    const int deg = static_cast<int>(nb.size());
    double tmax = theta[off];
    for (int k = 1; k < deg; ++k) tmax = std::max(tmax, theta[off + k]);
    double z = 0.0;
    for (int k = 0; k < deg; ++k) z += std::exp(theta[off + k] - tmax);
    for (int k = 0; k < deg; ++k) pol.pi(v, nb[k]) = std::exp(theta[off + k] - tmax) / z;
  }
  return pol;
}

Diffusion build_diffusion(const Graph& g, const Policy& pi, const Outrates& f, double tau) {
  const int n = g.node_count();
  if (!(tau > 0.0)) throw InvalidRange("build_diffusion: tau must be positive");
  if (static_cast<int>(f.f.size()) != n)
    throw IndexMismatch("build_diffusion: outrates size must equal node count");
  Diffusion d{Mat(n, n)};
  for (int i = 0; i < n; ++i) {
    const double rate = f.f[i] / tau;
    d.m(i, i) = -rate;
    for (int dst : g.out_neighbors(i)) d.m(dst, i) = rate * pi.pi(i, dst);
  }
  for (int i = 0; i < n; ++i) {
    double colsum = 0.0;
    for (int j = 0; j < n; ++j) colsum += d.m(j, i);
    if (std::fabs(colsum) > 1e-12 * std::max(1.0, f.f[i] / tau))
      throw InvariantViolation("build_diffusion: column sum is not zero");
  }
  return d;
}

namespace {

/// M with its first row replaced by the all-ones normalization row.
Mat normalized_system(const Mat& m) {
  Mat a = m;
  for (std::size_t j = 0; j < a.cols(); ++j) a(0, j) = 1.0;
  return a;
}

}  // namespace

Stationary stationary_distribution(const Diffusion& d) {
  const std::size_t n = d.m.rows();
  LuSolver lu(normalized_system(d.m));
  Vec rhs(n, 0.0);
  rhs[0] = 1.0;
  Vec mu = lu.solve(rhs);
  // one pass of iterative refinement against the original equations
  Vec res = matvec(d.m, mu);
  res[0] = 1.0 - kern::sum(mu.data(), n);
  for (std::size_t i = 1; i < n; ++i) res[i] = -res[i];
  Vec corr = lu.solve(res);
  for (std::size_t i = 0; i < n; ++i) mu[i] += corr[i];
  const double total = kern::sum(mu.data(), n);
  kern::scal(1.0 / total, mu.data(), n);
  double worst = max_abs(matvec(d.m, mu));
  if (worst > 1e-10)
    throw SingularSystem("stationary_distribution: residual " + std::to_string(worst));
  for (double v : mu)
    if (!(v > 0.0)) throw SingularSystem("stationary_distribution: nonpositive entry");
  return Stationary{std::move(mu)};
}

void apply_dm_dtheta(const Graph& g, const Policy& pi, const Outrates& f, double tau, int edge,
                     const Vec& v, Vec& out) {
  const auto [src, dst] = g.edges()[edge];
  std::fill(out.begin(), out.end(), 0.0);
  const double scale = f.f[src] / tau * v[src];
  const double p_src_dst = pi.pi(src, dst);
  for (int j : g.out_neighbors(src)) {
    const double kron = (j == dst) ? 1.0 : 0.0;
    out[j] = scale * pi.pi(src, j) * (kron - p_src_dst);
  }
}

Vec contract_dm_all_edges(const Graph& g, const Policy& pi, const Outrates& f, double tau,
                          const Vec& p, const Vec& q) {
  const int n = g.node_count();
  Vec s(n, 0.0);  // s_n = sum_j pi(n, j) p_j
  for (int v = 0; v < n; ++v)
    for (int j : g.out_neighbors(v)) s[v] += pi.pi(v, j) * p[j];
  Vec out(g.edge_count());
  for (int e = 0; e < g.edge_count(); ++e) {
    const auto [src, dst] = g.edges()[e];
    out[e] = q[src] * (f.f[src] / tau) * pi.pi(src, dst) * (p[dst] - s[src]);
  }
  return out;
}

Mat stationary_jacobian(const Graph& g, const PolicyParams& theta, const Outrates& f,
                        double tau) {
  const int n = g.node_count();
  const int ne = g.edge_count();
  const Policy pi = build_policy(g, theta);
  const Diffusion d = build_diffusion(g, pi, f, tau);
  const Stationary st = stationary_distribution(d);
  LuSolver lu(normalized_system(d.m));
  Mat jac(n, ne);
  Vec dm_mu(n), rhs(n);
  for (int e = 0; e < ne; ++e) {
    apply_dm_dtheta(g, pi, f, tau, e, st.mu, dm_mu);
    for (int i = 0; i < n; ++i) rhs[i] = -dm_mu[i];
    rhs[0] = 0.0;  // normalization row: sum of dmu is zero
    lu.solve_inplace(rhs);
    for (int i = 0; i < n; ++i) jac(i, e) = rhs[i];
  }
  return jac;
}

}  // namespace epiflow
