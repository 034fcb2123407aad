#include "epiflow/spectral.hpp"

#include <cmath>

#include "epiflow/errors.hpp"
#include "epiflow/kernels.hpp"

namespace epiflow {

namespace {

void require_positive(const Vec& v, std::size_t n, const char* name) {
  if (v.size() != n) throw InvariantViolation(std::string(name) + ": wrong size");
  for (double x : v)
    if (!(x > 0.0)) throw InvariantViolation(std::string(name) + ": entries must be positive");
}

Vec had(const Vec& a, const Vec& b) {
  Vec out(a.size());
  kern::hadamard(a.data(), b.data(), out.data(), a.size());
  return out;
}

}  // namespace

void validate_params(const EpiParams& p, int node_count) {
  const auto n = static_cast<std::size_t>(node_count);
  require_positive(p.beta, n, "beta");
  require_positive(p.gamma, n, "gamma");
  require_positive(p.delta, n, "delta");
  if (p.kind == ModelKind::sepir) {
    require_positive(p.beta_p, n, "beta_p");
    require_positive(p.alpha, n, "alpha");
  } else {
    if (!p.beta_p.empty() || !p.alpha.empty())
      throw InvariantViolation("SEIR params must not carry beta_p/alpha");
  }
}

Mat resolvent(const Mat& m, const Vec& shift) {
  Mat a = m;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) -= shift[i];
  try {
    return LuSolver(a).inverse();
  } catch (const SingularSystem&) {
    throw SingularResolvent("resolvent: shifted diffusion matrix is singular");
  }
}

Mat next_gen_matrix(const Diffusion& m, const EpiParams& p, const Stationary& mu) {
  const std::size_t n = m.m.rows();
  validate_params(p, static_cast<int>(n));
  if (mu.mu.size() != n) throw IndexMismatch("next_gen_matrix: mu size mismatch");
  const Mat r_delta = resolvent(m.m, p.delta);
  const Mat r_gamma = resolvent(m.m, p.gamma);
  if (p.kind == ModelKind::seir) {
    Mat t = r_delta;
    scale_cols(t, p.gamma);
    Mat g = matmul(t, r_gamma);
    scale_rows(g, had(p.beta, mu.mu));
    return g;
  }
  // SEPIR: G = beta_p diag(mu) (Id - beta_i/beta_p (M-delta)^-1 gamma)
  //             (M-gamma)^-1 alpha (M-alpha)^-1
  const Mat r_alpha = resolvent(m.m, p.alpha);
  Mat h = r_delta;
  Vec ratio(n);
  for (std::size_t i = 0; i < n; ++i) ratio[i] = p.beta[i] / p.beta_p[i];
  scale_rows(h, ratio);
  scale_cols(h, p.gamma);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = (i == j ? 1.0 : 0.0) - h(i, j);
  Mat c = r_gamma;
  scale_cols(c, p.alpha);
  c = matmul(c, r_alpha);
  Mat g = matmul(h, c);
  scale_rows(g, had(p.beta_p, mu.mu));
  return g;
}

namespace {

double eigen_residual(const Mat& g, const Mat& gt, const Vec& r, const Vec& l, double lambda,
                      Vec& gr, Vec& gl) {
  const std::size_t n = g.rows();
  kern::matvec(g.data(), n, n, r.data(), gr.data());
  kern::matvec(gt.data(), n, n, l.data(), gl.data());
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res = std::max(res, std::fabs(gr[i] - lambda * r[i]));
    res = std::max(res, std::fabs(gl[i] - lambda * l[i]));
  }
  return res;
}

void normalize_sum(Vec& v) {
  const double s = kern::sum(v.data(), v.size());
  kern::scal(1.0 / s, v.data(), v.size());
}

}  // namespace

PerronTriple spectral_radius_perron(const Mat& g, int max_iter) {
  const std::size_t n = g.rows();
  if (n != g.cols()) throw IndexMismatch("spectral_radius_perron: matrix not square");
  if (n == 1) {
    const double rho = g(0, 0);
    if (!(rho > 0.0)) throw InvariantViolation("spectral_radius_perron: matrix not positive");
    return PerronTriple{rho, {1.0}, {1.0}};
  }
  const Mat gt = transpose(g);
  Vec r(n, 1.0 / static_cast<double>(n)), l(n, 1.0 / static_cast<double>(n));
  Vec gr(n), gl(n);
  double lambda = 0.0;
  double lambda_prev = 0.0;
  double diff = 1.0;
  // Dual power iteration; geometric convergence except when the two leading
  // eigenvalues nearly tie, which the refinement below handles.
  const int power_budget = std::min(max_iter, 5000);
  bool settled = false;
  for (int it = 1; it <= power_budget; ++it) {
    kern::matvec(g.data(), n, n, r.data(), gr.data());
    kern::matvec(gt.data(), n, n, l.data(), gl.data());
    lambda = kern::dot(r.data(), gr.data(), n) / kern::dot(r.data(), r.data(), n);
    const double sr = kern::sum(gr.data(), n);
    const double sl = kern::sum(gl.data(), n);
    if (!(sr > 0.0) || !(sl > 0.0))
      throw NoConvergence("spectral_radius_perron: iterate left the positive cone", sr);
    kern::scal(1.0 / sr, gr.data(), n);
    kern::scal(1.0 / sl, gl.data(), n);
    std::swap(r, gr);
    std::swap(l, gl);
    diff = std::fabs(lambda - lambda_prev);
    lambda_prev = lambda;
    if (it > 1 && diff <= 1e-13 * std::max(1.0, std::fabs(lambda))) {
      settled = true;
      if (eigen_residual(g, gt, r, l, lambda, gr, gl) <=
          1e-10 * std::max(1.0, std::fabs(lambda)))
        break;
    }
    settled = false;
  }
  if (!settled || eigen_residual(g, gt, r, l, lambda, gr, gl) >
                      1e-10 * std::max(1.0, std::fabs(lambda))) {
    // Near-degenerate dominant pair: refine with shifted inverse iteration.
    // The two-sided Rayleigh shift sits far closer to the Perron value than
    // to the runner-up, so each solve multiplies the gap contrast.
    double sigma = lambda;
    for (int round = 0; round < 16; ++round) {
      Mat shifted = g;
      double nudge = 0.0;
      for (;;) {
        try {
          for (std::size_t i = 0; i < n; ++i) shifted(i, i) = g(i, i) - (sigma + nudge);
          const LuSolver lu(shifted);
          r = lu.solve(r);
          break;
        } catch (const SingularSystem&) {
          nudge = (nudge == 0.0) ? 1e-12 * std::max(1.0, std::fabs(sigma)) : 2.0 * nudge;
        }
      }
      if (kern::sum(r.data(), n) < 0.0) kern::scal(-1.0, r.data(), n);
      normalize_sum(r);
      Mat shifted_t = gt;
      for (std::size_t i = 0; i < n; ++i) shifted_t(i, i) = gt(i, i) - (sigma + nudge);
      try {
        const LuSolver lu_t(shifted_t);
        l = lu_t.solve(l);
      } catch (const SingularSystem&) {
        // keep the current l; the next round reshifts
      }
      if (kern::sum(l.data(), n) < 0.0) kern::scal(-1.0, l.data(), n);
      normalize_sum(l);
      kern::matvec(g.data(), n, n, r.data(), gr.data());
      sigma = kern::dot(l.data(), gr.data(), n) / kern::dot(l.data(), r.data(), n);
      if (eigen_residual(g, gt, r, l, sigma, gr, gl) <=
          1e-10 * std::max(1.0, std::fabs(sigma))) {
        lambda = sigma;
        settled = true;
        break;
      }
    }
    if (!settled)
      throw NoConvergence("spectral_radius_perron: no convergence",
                          eigen_residual(g, gt, r, l, sigma, gr, gl));
    lambda = sigma;
  }
  PerronTriple out;
  out.rho = lambda;
  out.r = r;
  out.l = l;
  const double lr = kern::dot(out.l.data(), out.r.data(), n);
  kern::scal(1.0 / lr, out.l.data(), n);
  return out;
}

namespace {

struct Chain {
  Policy pi;
  Diffusion m;
  Stationary st;
  Mat jac;  // |N| x |E|
};

Chain build_chain(const Graph& g, const PolicyParams& theta, const Outrates& f, double tau) {
  Chain c{build_policy(g, theta), Diffusion{}, Stationary{}, Mat{}};
  c.m = build_diffusion(g, c.pi, f, tau);
  c.st = stationary_distribution(c.m);
  c.jac = stationary_jacobian(g, theta, f, tau);
  return c;
}

}  // namespace

R0Gradient r0_and_gradient(const Graph& g, const PolicyParams& theta, const Outrates& f,
                           const EpiParams& p, double tau) {
  const std::size_t n = static_cast<std::size_t>(g.node_count());
  validate_params(p, g.node_count());
  const Chain c = build_chain(g, theta, f, tau);
  const Mat r_delta = resolvent(c.m.m, p.delta);
  const Mat r_gamma = resolvent(c.m.m, p.gamma);

  R0Gradient out;
  if (p.kind == ModelKind::seir) {
    Mat t = r_delta;
    scale_cols(t, p.gamma);
    Mat big_g = matmul(t, r_gamma);
    scale_rows(big_g, had(p.beta, c.st.mu));
    const PerronTriple pt = spectral_radius_perron(big_g);
    out.r0 = pt.rho;

    const Vec rg_r = matvec(r_gamma, pt.r);             // R_gamma r
    const Vec w1 = matvec(r_delta, had(p.gamma, rg_r)); // R_delta Dgamma R_gamma r
    Vec u = had(pt.l, had(p.beta, w1));
    out.grad = matvec_t(c.jac, u);  // dG through d(mu)

    const Vec lbm = had(pt.l, had(p.beta, c.st.mu));
    const Vec p2 = matvec_t(r_delta, lbm);
    const Vec t2 = contract_dm_all_edges(g, c.pi, f, tau, p2, w1);
    const Vec p3 = matvec_t(r_gamma, had(p.gamma, p2));
    const Vec t3 = contract_dm_all_edges(g, c.pi, f, tau, p3, rg_r);
    for (int e = 0; e < g.edge_count(); ++e) out.grad[e] -= t2[e] + t3[e];
    return out;
  }

  // SEPIR
  const Mat r_alpha = resolvent(c.m.m, p.alpha);
  Mat h = r_delta;
  Vec ratio(n);
  for (std::size_t i = 0; i < n; ++i) ratio[i] = p.beta[i] / p.beta_p[i];
  scale_rows(h, ratio);
  scale_cols(h, p.gamma);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) h(i, j) = (i == j ? 1.0 : 0.0) - h(i, j);
  Mat cmat = r_gamma;
  scale_cols(cmat, p.alpha);
  cmat = matmul(cmat, r_alpha);
  Mat big_g = matmul(h, cmat);
  scale_rows(big_g, had(p.beta_p, c.st.mu));
  const PerronTriple pt = spectral_radius_perron(big_g);
  out.r0 = pt.rho;

  const Vec cr = matvec(cmat, pt.r);
  const Vec hcr = matvec(h, cr);
  Vec u = had(pt.l, had(p.beta_p, hcr));
  out.grad = matvec_t(c.jac, u);

  // dH term: + (l Dbp Dmu Dratio Rd) dM (Rd Dgamma C r)
  const Vec lbim = had(pt.l, had(p.beta, c.st.mu));
  const Vec ph = matvec_t(r_delta, lbim);
  const Vec qh = matvec(r_delta, had(p.gamma, cr));
  const Vec th = contract_dm_all_edges(g, c.pi, f, tau, ph, qh);

  // dC terms
  const Vec lpm = had(pt.l, had(p.beta_p, c.st.mu));
  const Vec ht_l = matvec_t(h, lpm);  // H^T (l . beta_p . mu)
  const Vec pc1 = matvec_t(r_gamma, ht_l);
  const Vec tc1 = contract_dm_all_edges(g, c.pi, f, tau, pc1, cr);
  const Vec pc2 = matvec_t(r_alpha, had(p.alpha, pc1));
  const Vec qc2 = matvec(r_alpha, pt.r);
  const Vec tc2 = contract_dm_all_edges(g, c.pi, f, tau, pc2, qc2);

  for (int e = 0; e < g.edge_count(); ++e) out.grad[e] += th[e] - tc1[e] - tc2[e];
  return out;
}

LargeDomain large_domain(const Diffusion& m, const EpiParams& p, const Stationary& mu) {
  if (p.kind != ModelKind::seir)
    throw InvalidSpec("large_domain: defined for the SEIR model kind");
  const std::size_t n = m.m.rows();
  validate_params(p, static_cast<int>(n));
  LargeDomain out;
  out.f_block = Mat(2 * n, 2 * n);
  out.v_block = Mat(2 * n, 2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    out.f_block(i, n + i) = p.beta[i] * mu.mu[i];
    out.v_block(n + i, i) = p.gamma[i];
    for (std::size_t j = 0; j < n; ++j) {
      out.v_block(i, j) = m.m(i, j);
      out.v_block(n + i, n + j) = m.m(i, j);
    }
    out.v_block(i, i) -= p.gamma[i];
    out.v_block(n + i, n + i) -= p.delta[i];
  }
  const Mat v_inv = LuSolver(out.v_block).inverse();
  out.k = matmul(out.f_block, v_inv);
  kern::scal(-1.0, out.k.data(), 4 * n * n);
  // K is nonnegative but reducible; the power iteration limit from the
  // uniform start is the Perron vector we report.
  PowerIterationResult pr = power_iteration(out.k);
  out.rho = pr.value;
  out.v_eig = std::move(pr.vector);
  return out;
}

}  // namespace epiflow
