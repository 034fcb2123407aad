#ifndef EPIFLOW_SPECTRAL_HPP
#define EPIFLOW_SPECTRAL_HPP

#include "epiflow/diffusion.hpp"
#include "epiflow/graph.hpp"
#include "epiflow/linalg.hpp"

namespace epiflow {

enum class ModelKind { seir, sepir };

/// Per-node epidemiological coefficients, all strictly positive.
/// For SEIR the infection chain is E -(gamma)-> I -(delta)-> R with
/// infection pressure beta * I. SEPIR inserts a pre-symptomatic stage:
/// E -(alpha)-> P -(gamma)-> I -(delta)-> R, with pressure
/// beta * I + beta_p * P.
struct EpiParams {
  ModelKind kind = ModelKind::seir;
  Vec beta;
  Vec gamma;
  Vec delta;
  Vec beta_p;  // SEPIR only
  Vec alpha;   // SEPIR only
};

/// Throws InvariantViolation unless sizes match node_count and every
/// required vector is strictly positive (SEPIR fields exactly when SEPIR).
void validate_params(const EpiParams& p, int node_count);

/// Next-generation matrix; entrywise positive for valid inputs.
Mat next_gen_matrix(const Diffusion& m, const EpiParams& p, const Stationary& mu);

struct PerronTriple {
  double rho = 0.0;  // spectral radius = R0
  Vec l;             // left eigenvector, l . r = 1
  Vec r;             // right eigenvector, sum(r) = 1
};

/// Dual power iteration (on G and G^T) from the uniform vector. Stops when
/// successive Rayleigh quotients differ by <= 1e-13 and both eigen-residuals
/// are below 1e-10; throws NoConvergence after max_iter.
PerronTriple spectral_radius_perron(const Mat& g, int max_iter = 100000);

struct R0Gradient {
  double r0 = 0.0;
  Vec grad;  // one entry per edge
};

/// R0 and its gradient in theta via the rank-one eigenprojection formula
/// grad_e = l (dG/dtheta_e) r with l . r = 1, assembled by the product rule
/// over G's factors. Works for both model kinds.
R0Gradient r0_and_gradient(const Graph& g, const PolicyParams& theta, const Outrates& f,
                           const EpiParams& p, double tau);

/// 2|N| block construction (SEIR): F = [[0, beta diag(mu)], [0, 0]],
/// V = [[M - gamma, 0], [gamma, M - delta]], K = -F V^-1. rho(K) equals
/// rho(G); v_eig is a nonnegative Perron vector of K summing to 1.
struct LargeDomain {
  Mat f_block;
  Mat v_block;
  Mat k;
  Vec v_eig;
  double rho = 0.0;
};

LargeDomain large_domain(const Diffusion& m, const EpiParams& p, const Stationary& mu);

/// (M - diag(shift))^-1 via LU; throws SingularResolvent when the solve
/// fails.
Mat resolvent(const Mat& m, const Vec& shift);

}  // namespace epiflow

#endif
