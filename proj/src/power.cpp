#include "irsssm/power.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "irsssm/beamform.hpp"

namespace irsssm {

namespace {

constexpr double kBetaFloor = 1e-4;

FitCoefficients resolve_coeffs(const Link& link, const TpdOptions& opts) {
  return opts.coeffs ? *opts.coeffs : coeff_lookup(link.config.M, link.config.G);
}

// γ̄ on each side is τ·x with x = β² and τ = P_s θ^H R θ / (4σ²K²).
struct PowerSurrogate {
  std::vector<RatioTerm> terms;
  double tau_b = 0.0;
  double tau_e = 0.0;
  double Mshift = 0.0;

  PowerSurrogate(const Link& link, const PhaseProfile& theta, const FitCoefficients& coeffs)
      : terms(ratio_terms(coeffs, ObjectiveSense::maximize)) {
    const double K2 = static_cast<double>(link.K()) * link.K();
    tau_b = link.config.P_s * std::max(0.0, quadratic_form(link.R_B, theta.theta)) / (4.0 * link.config.sigma_b2 * K2);
    tau_e = link.config.P_s * std::max(0.0, quadratic_form(link.R_E, theta.theta)) / (4.0 * link.config.sigma_e2 * K2);
    for (const auto& t : terms) Mshift = std::max(Mshift, std::abs(t.U));
    Mshift = 1.1 * Mshift + 1e-6;
  }

  double tau(const RatioTerm& r) const { return r.side == Side::bob ? tau_b : tau_e; }
  double a(const RatioTerm& r) const { return (r.U + Mshift) * tau(r); }
  double b(const RatioTerm& r) const { return Mshift * r.Q; }

  std::vector<double> y_at(double x) const {
    std::vector<double> y(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i)
      y[i] = std::sqrt(a(terms[i]) * x + b(terms[i])) / (terms[i].Q + tau(terms[i]) * x);
    return y;
  }

  // dS/dx for fixed y; strictly decreasing in x.
  double slope(const std::vector<double>& y, double x) const {
    double s = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const auto& r = terms[i];
      s += y[i] * a(r) / std::sqrt(a(r) * x + b(r)) - y[i] * y[i] * tau(r);
    }
    return s;
  }

  double argmax(const std::vector<double>& y) const {
    const double lo = kBetaFloor * kBetaFloor;
    if (slope(y, 1.0) >= 0.0) return 1.0;
    if (slope(y, lo) <= 0.0) return lo;
    double l = lo, h = 1.0;
    for (int it = 0; it < 200 && h - l > 1e-15; ++it) {
      const double m = 0.5 * (l + h);
      (slope(y, m) > 0.0 ? l : h) = m;
    }
    return 0.5 * (l + h);
  }
};

// Best point of a coarse feasible scan; used as β⁰ unless the caller fixes it.
template <typename F>
double coarse_start(F&& objective) {
  double best_beta = 1.0, best = objective(1.0);
  for (double b : {0.01, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}) {
    const double v = objective(b);
    if (v > best) {
      best = v;
      best_beta = b;
    }
  }
  return best_beta;
}

}  // namespace

TpdResult max_nasr_tpd(const Link& link, const PhaseProfile& theta, const TpdOptions& opts) {
  const FitCoefficients coeffs = resolve_coeffs(link, opts);
  const PowerSurrogate sur(link, theta, coeffs);
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 200;

  TpdResult res;
  if (!(sur.tau_b > 0.0) && !(sur.tau_e > 0.0)) {
    res.beta = PowerFactor(1.0);
    res.objective_bits = nasr(link, theta, res.beta, coeffs);
    res.trace.push_back(res.objective_bits);
    res.degenerate = true;
    res.converged = true;
    return res;
  }

  const double beta0 = opts.initial_beta ? std::clamp(*opts.initial_beta, kBetaFloor, 1.0)
                                         : coarse_start([&](double b) { return nasr(link, theta, PowerFactor(b), coeffs); });
  double x = beta0 * beta0;
  double F = nasr(link, theta, PowerFactor(beta0), coeffs);
  res.trace.push_back(F);
  auto nasr_at = [&](double xx) { return nasr(link, theta, PowerFactor(std::sqrt(xx)), coeffs); };
  constexpr double x_floor = kBetaFloor * kBetaFloor;

  // One update: exact surrogate maximizer, then step doubling along the move
  // while NASR keeps rising.
  auto step = [&](double& x_new, double& F_new) {
    x_new = sur.argmax(sur.y_at(x));
    F_new = nasr_at(x_new);
    for (double w = 2.0; w <= 1048576.0; w *= 2.0) {
      const double xt = std::clamp(x + w * (x_new - x), x_floor, 1.0);
      const double Ft = nasr_at(xt);
      if (!(Ft > F_new)) break;
      F_new = Ft;
      x_new = xt;
      if (xt == 1.0 || xt == x_floor) break;
    }
  };

  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    double x_new, F_new;
    step(x_new, F_new);
    res.trace.push_back(F_new);
    const double gain = F_new - F;
    x = x_new;
    F = F_new;
    if (std::abs(gain) <= 1e-4) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(it, max_iter);

  // Polish to the fixed point of the update; the NASR rule above stops while
  // β can still be moving by more than 1e-6.
  for (int p = 0; p < 20000; ++p) {
    double x_new, F_new;
    step(x_new, F_new);
    // NASR is flat here, so a drop at rounding level is not a reason to stop.
    if (F_new < F - 1e-12) break;
    const double dx = std::abs(x_new - x);
    x = x_new;
    F = F_new;
    if (dx <= 1e-14) break;
  }
  if (F > res.trace.back()) res.trace.push_back(F);
  res.beta = PowerFactor(std::sqrt(x));
  res.objective_bits = F;
  return res;
}

double nasr_tpd_update(const Link& link, const PhaseProfile& theta, PowerFactor beta, const FitCoefficients& coeffs) {
  const PowerSurrogate sur(link, theta, coeffs);
  const double x = beta.beta() * beta.beta();
  return std::sqrt(sur.argmax(sur.y_at(x)));
}

double nasr_tpd_residual(const Link& link, const PhaseProfile& theta, PowerFactor beta,
                         const FitCoefficients& coeffs) {
  const PowerSurrogate sur(link, theta, coeffs);
  const double x = beta.beta() * beta.beta();
  return sur.slope(sur.y_at(x), x);
}

double tasr_beta_gradient(const Link& link, const PhaseProfile& theta, PowerFactor beta) {
  const double P_s = link.config.P_s;
  const double b = beta.beta();
  const int K = link.K();

  // Softmax-weighted mean of a_kl = -||H'Φ d_kl||² / (4σ²) over all ordered pairs.
  auto weighted_mean = [&](Side side) {
    const CMatrix A = link.channel(side) * theta.theta.asDiagonal() * link.syms.supersymbols;
    RVector a(static_cast<Eigen::Index>(K) * K);
    for (int k = 0; k < K; ++k)
      for (int l = 0; l < K; ++l) a(k * K + l) = -(A.col(k) - A.col(l)).squaredNorm() / (4.0 * link.noise(side));
    const RVector e = b * b * P_s * a;
    const RVector w = (e.array() - e.maxCoeff()).exp();
    return w.dot(a) / w.sum();
  };
  return -(2.0 * b * P_s / std::numbers::ln2) * (weighted_mean(Side::bob) - weighted_mean(Side::eve));
}

TpdResult max_tasr_tpd(const Link& link, const PhaseProfile& theta, const TpdOptions& opts) {
  if (!(opts.mu0 > 0.0)) throw Error("max_tasr_tpd: mu0 must be positive");
  const int max_iter = opts.max_iter > 0 ? opts.max_iter : 500;
  auto clip = [](double b) { return std::clamp(b, kBetaFloor, 1.0); };

  TpdResult res;
  double beta = opts.initial_beta ? clip(*opts.initial_beta)
                                 : coarse_start([&](double b) { return tasr(link, theta, PowerFactor(b)); });
  double R = tasr(link, theta, PowerFactor(beta));
  double mu = opts.mu0;
  res.trace.push_back(R);
  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    const double g = tasr_beta_gradient(link, theta, PowerFactor(beta));
    const double beta_new = clip(beta + mu * g);
    const double R_new = tasr(link, theta, PowerFactor(beta_new));
    if (std::abs(R_new - R) <= 1e-12) {
      // Gradient step no longer moves the objective.
      res.converged = true;
      break;
    }
    if (R_new < R) {
      mu *= 0.5;
      res.trace.push_back(R);
      if (mu < 1e-14) {
        res.converged = true;
        break;
      }
      continue;
    }
    const double delta = R_new - R;
    beta = beta_new;
    R = R_new;
    res.trace.push_back(R);
    if (std::abs(delta) <= 1e-5) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(it, max_iter);
  res.beta = PowerFactor(beta);
  res.objective_bits = R;
  return res;
}

TpdResult fixed_tpd(const Link& link, const PhaseProfile& theta, const TpdOptions& opts) {
  TpdResult res;
  res.beta = PowerFactor(opts.fixed_beta);
  res.objective_bits = nasr(link, theta, res.beta, resolve_coeffs(link, opts));
  res.trace.push_back(res.objective_bits);
  res.converged = true;
  return res;
}

TpdResult run_tpd(const Link& link, const PhaseProfile& theta, const TpdOptions& opts) {
  switch (opts.kind) {
    case TpdKind::nasr: return max_nasr_tpd(link, theta, opts);
    case TpdKind::tasr: return max_tasr_tpd(link, theta, opts);
    case TpdKind::fixed: return fixed_tpd(link, theta, opts);
  }
  throw Error("unknown TPD kind");
}

}  // namespace irsssm
