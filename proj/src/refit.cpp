#include <algorithm>
#include <cmath>
#include <limits>

#include "irsssm/metrics.hpp"

namespace irsssm {

namespace {

struct RatioModel {
  const std::vector<GammaSample>& samples;
  int k;

  // params = [ζ_1..ζ_k, η_1..η_k], ξ_i = exp(η_i)
  RVector residuals(const RVector& params) const {
    RVector r(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const double g = samples[s].gamma;
      double f = 0.0;
      for (int i = 0; i < k; ++i) f += params(i) * g / (std::exp(params(k + i)) + g);
      r(s) = f - samples[s].mi_bits;
    }
    return r;
  }

  RMatrix jacobian(const RVector& params) const {
    RMatrix J(samples.size(), 2 * k);
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const double g = samples[s].gamma;
      for (int i = 0; i < k; ++i) {
        const double xi = std::exp(params(k + i));
        const double den = xi + g;
        J(s, i) = g / den;
        J(s, k + i) = -params(i) * g * xi / (den * den);
      }
    }
    return J;
  }

  // Best ζ for fixed ξ (linear least squares).
  RVector linear_zeta(const RVector& eta) const {
    RMatrix B(samples.size(), k);
    RVector y(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
      const double g = samples[s].gamma;
      for (int i = 0; i < k; ++i) B(s, i) = g / (std::exp(eta(i)) + g);
      y(s) = samples[s].mi_bits;
    }
    return B.completeOrthogonalDecomposition().solve(y);
  }
};

double rms(const RVector& r) { return std::sqrt(r.squaredNorm() / static_cast<double>(r.size())); }

RVector levenberg_marquardt(const RatioModel& model, RVector params, int max_iterations) {
  constexpr double kEtaBound = 30.0;
  double damping = 1e-3;
  RVector r = model.residuals(params);
  double cost = r.squaredNorm();
  for (int it = 0; it < max_iterations && cost > 0.0; ++it) {
    const RMatrix J = model.jacobian(params);
    const RMatrix JtJ = J.transpose() * J;
    const RVector g = J.transpose() * r;
    bool improved = false;
    while (damping < 1e12) {
      RMatrix lhs = JtJ;
      lhs.diagonal().array() += damping * (JtJ.diagonal().array() + 1e-12);
      const RVector step = lhs.ldlt().solve(-g);
      RVector trial = params + step;
      trial.tail(model.k) = trial.tail(model.k).cwiseMax(-kEtaBound).cwiseMin(kEtaBound);
      const RVector rt = model.residuals(trial);
      const double ct = rt.squaredNorm();
      if (std::isfinite(ct) && ct < cost) {
        const double gain = cost - ct;
        params = trial;
        r = rt;
        cost = ct;
        damping = std::max(damping / 3.0, 1e-12);
        improved = gain > 1e-15 * (1.0 + cost);
        break;
      }
      damping *= 4.0;
    }
    if (!improved) break;
  }
  return params;
}

}  // namespace

FitCoefficients refit_coeffs(const std::vector<GammaSample>& samples, int k, const RefitOptions& opts) {
  if (k < 1) throw Error("refit_coeffs: k must be >= 1");
  if (static_cast<int>(samples.size()) < 3 * k)
    throw Error("refit_coeffs: need at least 3k samples");
  double g_lo = std::numeric_limits<double>::infinity(), g_hi = 0.0;
  for (const auto& s : samples) {
    if (!(s.gamma >= 0.0) || !std::isfinite(s.mi_bits)) throw Error("refit_coeffs: invalid sample");
    if (s.gamma > 0.0) g_lo = std::min(g_lo, s.gamma);
    g_hi = std::max(g_hi, s.gamma);
  }
  if (g_hi <= 0.0) g_lo = g_hi = 1.0;
  const double eta_lo = std::log(g_lo) - 1.0;
  const double eta_hi = std::log(g_hi) + 1.0;

  RatioModel model{samples, k};
  RandomStream rng(opts.seed);
  RVector best;
  double best_rmse = std::numeric_limits<double>::infinity();
  for (int start = 0; start < std::max(opts.starts, 1); ++start) {
    RVector eta(k);
    for (int i = 0; i < k; ++i) eta(i) = eta_lo + (eta_hi - eta_lo) * rng.uniform();
    RVector params(2 * k);
    params.head(k) = model.linear_zeta(eta);
    params.tail(k) = eta;
    params = levenberg_marquardt(model, params, opts.max_iterations);
    const double e = rms(model.residuals(params));
    if (e < best_rmse) {
      best_rmse = e;
      best = params;
    }
  }

  FitCoefficients out;
  for (int i = 0; i < k; ++i) out.terms.push_back({best(i), std::exp(best(k + i))});
  out.rmse = best_rmse;
  out.converged = best_rmse < opts.target_rmse;
  return out;
}

}  // namespace irsssm
