#ifndef EPIFLOW_CONTROL_HPP
#define EPIFLOW_CONTROL_HPP

#include <variant>

#include "epiflow/diffusion.hpp"
#include "epiflow/graph.hpp"
#include "epiflow/spectral.hpp"

namespace epiflow {

enum class LossKind { epi, nodiff, quickdiff };

const char* loss_name(LossKind kind);
const char* policy_label(LossKind kind);  // EPIPOL / NODIFFPOL / QUICKDIFFPOL

/// Exponentially weighted average interpolating between the mean (a -> 0)
/// and the max (a -> inf); computed with max subtraction.
double smooth_max(const Vec& u, double a);

struct LossContext {
  const Graph& g;
  const Outrates& f;
  const EpiParams& params;
  double tau = 1.0;
  double smooth_max_a = 20.0;  // sharpness for the nodiff loss
};

double loss_value(LossKind kind, const LossContext& ctx, const PolicyParams& theta);
Vec loss_gradient(LossKind kind, const LossContext& ctx, const PolicyParams& theta);

struct LossEval {
  double value = 0.0;
  Vec grad;
};
LossEval loss_value_and_gradient(LossKind kind, const LossContext& ctx,
                                 const PolicyParams& theta);

/// Stepsize schedules. PaperExp is s(i) = phi sqrt(|N|) exp(ln2 * i / rho),
/// which doubles every rho iterations; ExpDecay is the decaying variant.
struct PaperExp {
  double phi = 2.5e-3;
  double rho = 250.0;
};
struct ConstantStep {
  double s = 1e-2;
};
struct ExpDecay {
  double s0 = 1e-2;
  double rho = 250.0;
};
using Schedule = std::variant<PaperExp, ConstantStep, ExpDecay>;

double step_size(const Schedule& schedule, int iterate, int node_count);

struct OptimizerConfig {
  int steps = 400;
  Schedule schedule = PaperExp{};
  bool track_best = true;
};

struct OptimizationResult {
  PolicyParams theta_star;
  Vec loss_history;        // loss at theta_0 .. theta_steps
  int best_index = 0;      // index into loss_history
  double final_r0 = 0.0;   // R0 at theta_star
  bool aborted_nonfinite = false;
};

/// Plain gradient descent theta <- theta - s(i) grad. Deterministic. When a
/// non-finite loss or gradient appears the run stops and returns the best
/// iterate so far with aborted_nonfinite set.
OptimizationResult optimize(LossKind kind, const LossContext& ctx, const PolicyParams& theta0,
                            const OptimizerConfig& cfg);

}  // namespace epiflow

#endif
