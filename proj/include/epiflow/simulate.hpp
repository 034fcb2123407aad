#ifndef EPIFLOW_SIMULATE_HPP
#define EPIFLOW_SIMULATE_HPP

#include <cstdint>

#include "epiflow/diffusion.hpp"
#include "epiflow/graph.hpp"
#include "epiflow/spectral.hpp"

namespace epiflow {

/// Compartment state across nodes; p is used by SEPIR only and stays empty
/// for SEIR. Every vector is entrywise nonnegative and the grand total over
/// nodes and compartments is the (conserved) population.
struct EpiState {
  double t = 0.0;
  Vec s, e, p, i, r;

  double total() const;
  double infected_mass() const;  // e + p + i summed over nodes
  bool nonnegative() const;
};

struct SimConfig {
  double horizon = 1000.0;
  double dt = 0.0;          // 0 derives the protocol default min(1, tau)
  int record_every = 0;     // sample stride in steps; 0 records only endpoints
};

double protocol_dt(double tau);

struct Trajectory {
  std::vector<double> times;
  std::vector<EpiState> samples;
  EpiState terminal;
};

struct FinalSizeReport {
  double final_size = 0.0;          // sum of R at the horizon
  double residual_infection = 0.0;  // sum of E (+P) + I at the horizon
  bool converged = false;           // residual <= 1e-6
};

/// One Lie-split step: exact-exponential per-node reaction fractions, then
/// X <- (Id + dt M) X per compartment. Both substeps move nonnegative mass
/// convexly, so positivity and the total are preserved exactly; the
/// composite agrees with explicit Euler to first order in dt.
/// Throws StepTooLarge when dt * max(-M_ii) >= 1.
void step(EpiState& state, const Diffusion& m, const EpiParams& p, double dt);

/// Iterate step() from the initial state over the horizon.
Trajectory simulate(const Diffusion& m, const EpiParams& p, EpiState initial,
                    const SimConfig& cfg);

Trajectory simulate(const Graph& g, const PolicyParams& theta, const Outrates& f,
                    const EpiParams& p, const EpiState& initial, double tau,
                    const SimConfig& cfg);

FinalSizeReport final_size(const Trajectory& traj);

/// Disease-free state: whole population susceptible at the stationary
/// distribution.
EpiState dfe_state(const Stationary& mu, ModelKind kind);

/// Protocol initial condition: population at mu_ref, then seed_fraction of
/// S moved to E in each of num_seed_nodes nodes drawn without replacement.
EpiState protocol_initial_condition(const Stationary& mu_ref, ModelKind kind, int num_seed_nodes,
                                    double seed_fraction, std::uint64_t seed);

/// Eigenvector-aligned initial condition: (E(0), I(0)) = j0 * v with v the
/// 2|N| Perron vector of the large-domain matrix, S(0) = mu - E(0) - I(0).
EpiState eigen_aligned_initial_condition(const Stationary& mu, const Vec& v_eig, double j0);

/// CSV export, columns t,node,S,E[,P],I,R.
void write_trajectory_csv(const Trajectory& traj, ModelKind kind, const std::string& path);

}  // namespace epiflow

#endif
