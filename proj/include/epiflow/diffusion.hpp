#ifndef EPIFLOW_DIFFUSION_HPP
#define EPIFLOW_DIFFUSION_HPP

#include "epiflow/graph.hpp"
#include "epiflow/linalg.hpp"

namespace epiflow {

/// One real per edge, in the graph's canonical edge order.
using PolicyParams = std::vector<double>;

/// Row-stochastic dispatch matrix, supported exactly on the graph's edges:
/// pi(n, i) is the share of the outflow of n routed along n -> i.
struct Policy {
  Mat pi;
};

/// Metzler matrix with zero column sums: M(n, i) = f_i pi(i, n) / tau off
/// the diagonal, M(i, i) = -f_i / tau. Governs dX/dt = M X.
struct Diffusion {
  Mat m;
};

struct Stationary {
  Vec mu;  // positive, sums to 1, M mu = 0
};

/// Softmax over each node's out-edges, stabilized by per-row max
/// subtraction. theta must have one entry per edge.
Policy build_policy(const Graph& g, const PolicyParams& theta);

Diffusion build_diffusion(const Graph& g, const Policy& pi, const Outrates& f, double tau);

/// Solve M mu = 0, sum(mu) = 1 by replacing the first row of M with the
/// all-ones normalization row. Residual is checked, with one pass of
/// iterative refinement if needed; min(mu) must come out positive.
Stationary stationary_distribution(const Diffusion& m);

/// d mu / d theta, an |N| x |E| matrix, by implicit differentiation of
/// M(theta) mu(theta) = 0 under sum(mu) = 0 variation. Reuses one LU
/// factorization across all edge directions.
Mat stationary_jacobian(const Graph& g, const PolicyParams& theta, const Outrates& f, double tau);

/// dM/dtheta_e applied to a vector v: returns the vector (dM/dtheta_e) v.
/// Nonzero only through column src(e); used by the gradient chain.
/// out must have size |N| and is overwritten.
void apply_dm_dtheta(const Graph& g, const Policy& pi, const Outrates& f, double tau, int edge,
                     const Vec& v, Vec& out);

/// p^T (dM/dtheta_e) q for all edges e at once, given the per-node
/// pre-contractions s_n = sum_j pi(n, j) p_j. Returns a vector over edges.
Vec contract_dm_all_edges(const Graph& g, const Policy& pi, const Outrates& f, double tau,
                          const Vec& p, const Vec& q);

}  // namespace epiflow

#endif
