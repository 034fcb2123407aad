#include "epiflow/control.hpp"

#include <cmath>

#include "epiflow/errors.hpp"
#include "epiflow/kernels.hpp"

namespace epiflow {

const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::epi:
      return "epi";
    case LossKind::nodiff:
      return "nodiff";
    case LossKind::quickdiff:
      return "quickdiff";
  }
  return "?";
}

const char* policy_label(LossKind kind) {
  switch (kind) {
    case LossKind::epi:
      return "EPIPOL";
    case LossKind::nodiff:
      return "NODIFFPOL";
    case LossKind::quickdiff:
      return "QUICKDIFFPOL";
  }
  return "?";
}

double smooth_max(const Vec& u, double a) {
  if (u.empty()) throw InvalidRange("smooth_max: empty input");
  if (!(a > 0.0)) throw InvalidRange("smooth_max: a must be positive");
  const double m = kern::maxval(u.data(), u.size());
  double num = 0.0, den = 0.0;
  for (double v : u) {
    const double w = std::exp(a * (v - m));
    num += v * w;
    den += w;
  }
  return num / den;
}

namespace {

/// d smooth_max / d u_k = softmax_k(a u) (1 + a (u_k - S_a(u)))
Vec smooth_max_gradient(const Vec& u, double a) {
  const double m = kern::maxval(u.data(), u.size());
  Vec w(u.size());
  double den = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    w[k] = std::exp(a * (u[k] - m));
    den += w[k];
  }
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    w[k] /= den;
    s += u[k] * w[k];
  }
  Vec grad(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) grad[k] = w[k] * (1.0 + a * (u[k] - s));
  return grad;
}

/// Node-level reproduction weights for the nodiff loss: beta/delta for
/// SEIR, beta/delta + beta_p/gamma for SEPIR.
Vec nodiff_weights(const EpiParams& p) {
  Vec w(p.beta.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = p.beta[k] / p.delta[k];
    if (p.kind == ModelKind::sepir) w[k] += p.beta_p[k] / p.gamma[k];
  }
  return w;
}

struct QuickDiffParts {
  double value = 0.0;
  Vec dvalue_dmu;
};

QuickDiffParts quickdiff_parts(const EpiParams& p, const Vec& mu) {
  const std::size_t n = mu.size();
  QuickDiffParts out;
  out.dvalue_dmu.assign(n, 0.0);
  auto add_ratio = [&](const Vec& num_coeff, const Vec& den_coeff) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      num += num_coeff[k] * mu[k] * mu[k];
      den += den_coeff[k] * mu[k];
    }
    out.value += num / den;
    for (std::size_t k = 0; k < n; ++k)
      out.dvalue_dmu[k] += (2.0 * num_coeff[k] * mu[k] * den - num * den_coeff[k]) / (den * den);
  };
  add_ratio(p.beta, p.delta);
  if (p.kind == ModelKind::sepir) add_ratio(p.beta_p, p.gamma);
  return out;
}

Vec stationary_of(const LossContext& ctx, const PolicyParams& theta) {
  const Policy pi = build_policy(ctx.g, theta);
  const Diffusion m = build_diffusion(ctx.g, pi, ctx.f, ctx.tau);
  return stationary_distribution(m).mu;
}

}  // namespace

double loss_value(LossKind kind, const LossContext& ctx, const PolicyParams& theta) {
  validate_params(ctx.params, ctx.g.node_count());
  switch (kind) {
    case LossKind::epi: {
      const Policy pi = build_policy(ctx.g, theta);
      const Diffusion m = build_diffusion(ctx.g, pi, ctx.f, ctx.tau);
      const Stationary st = stationary_distribution(m);
      return spectral_radius_perron(next_gen_matrix(m, ctx.params, st)).rho;
    }
    case LossKind::nodiff: {
      const Vec mu = stationary_of(ctx, theta);
      const Vec w = nodiff_weights(ctx.params);
      Vec u(mu.size());
      kern::hadamard(w.data(), mu.data(), u.data(), mu.size());
      return smooth_max(u, ctx.smooth_max_a);
    }
    case LossKind::quickdiff: {
      const Vec mu = stationary_of(ctx, theta);
      return quickdiff_parts(ctx.params, mu).value;
    }
  }
  throw Error("loss_value: unknown loss kind");
}

LossEval loss_value_and_gradient(LossKind kind, const LossContext& ctx,
                                 const PolicyParams& theta) {
  validate_params(ctx.params, ctx.g.node_count());
  LossEval out;
  if (kind == LossKind::epi) {
    const R0Gradient rg = r0_and_gradient(ctx.g, theta, ctx.f, ctx.params, ctx.tau);
    out.value = rg.r0;
    out.grad = rg.grad;
    return out;
  }
  const Vec mu = stationary_of(ctx, theta);
  const Mat jac = stationary_jacobian(ctx.g, theta, ctx.f, ctx.tau);
  Vec dvalue_dmu;
  if (kind == LossKind::nodiff) {
    const Vec w = nodiff_weights(ctx.params);
    Vec u(mu.size());
    kern::hadamard(w.data(), mu.data(), u.data(), mu.size());
    out.value = smooth_max(u, ctx.smooth_max_a);
    const Vec ds = smooth_max_gradient(u, ctx.smooth_max_a);
    dvalue_dmu.resize(mu.size());
    kern::hadamard(ds.data(), w.data(), dvalue_dmu.data(), mu.size());
  } else {
    QuickDiffParts parts = quickdiff_parts(ctx.params, mu);
    out.value = parts.value;
    dvalue_dmu = std::move(parts.dvalue_dmu);
  }
  out.grad = matvec_t(jac, dvalue_dmu);
  return out;
}

Vec loss_gradient(LossKind kind, const LossContext& ctx, const PolicyParams& theta) {
  return loss_value_and_gradient(kind, ctx, theta).grad;
}

double step_size(const Schedule& schedule, int iterate, int node_count) {
  const double sqrt_n = std::sqrt(static_cast<double>(node_count));
  if (const auto* pe = std::get_if<PaperExp>(&schedule))
    return pe->phi * sqrt_n * std::exp(std::log(2.0) * iterate / pe->rho);
  if (const auto* cs = std::get_if<ConstantStep>(&schedule)) return cs->s;
  const auto& ed = std::get<ExpDecay>(schedule);
  return ed.s0 * sqrt_n * std::exp(-std::log(2.0) * iterate / ed.rho);
}

OptimizationResult optimize(LossKind kind, const LossContext& ctx, const PolicyParams& theta0,
                            const OptimizerConfig& cfg) {
  if (cfg.steps < 1) throw InvalidRange("optimize: steps must be >= 1");
  OptimizationResult res;
  PolicyParams theta = theta0;
  PolicyParams best_theta = theta0;
  double best_loss = 0.0;
  res.loss_history.reserve(cfg.steps + 1);
  for (int it = 0; it <= cfg.steps; ++it) {
    LossEval eval;
    bool finite = true;
    try {
      eval = loss_value_and_gradient(kind, ctx, theta);
    } catch (const Error&) {
      finite = false;
    }
    if (finite && !std::isfinite(eval.value)) finite = false;
    if (finite)
      for (double gk : eval.grad)
        if (!std::isfinite(gk)) {
          finite = false;
          break;
        }
    if (!finite) {
      res.aborted_nonfinite = true;
      break;
    }
    res.loss_history.push_back(eval.value);
    if (it == 0 || eval.value < best_loss) {
      best_loss = eval.value;
      best_theta = theta;
      res.best_index = it;
    }
    if (it == cfg.steps) break;
    const double s = step_size(cfg.schedule, it + 1, ctx.g.node_count());
    kern::axpy(-s, eval.grad.data(), theta.data(), theta.size());
  }
  if (res.loss_history.empty())
    throw Error("optimize: loss not finite at the initial point");
  if (cfg.track_best || res.aborted_nonfinite) {
    res.theta_star = best_theta;
  } else {
    res.theta_star = theta;
    res.best_index = static_cast<int>(res.loss_history.size()) - 1;
  }
  res.final_r0 = loss_value(LossKind::epi, ctx, res.theta_star);
  return res;
}

}  // namespace epiflow
