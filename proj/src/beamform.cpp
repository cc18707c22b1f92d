#include "irsssm/beamform.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

namespace irsssm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Per-side scale c = P_t / (4σ²K²) so that t = c θ^H R θ is the pair-averaged γ̄.
struct SideScale {
  double bob;
  double eve;
  double operator()(Side s) const { return s == Side::bob ? bob : eve; }
};

SideScale side_scale(const Link& link, PowerFactor beta) {
  const double P_t = beta.transmit_power(link.config.P_s);
  const double K2 = static_cast<double>(link.K()) * link.K();
  return {P_t / (4.0 * link.config.sigma_b2 * K2), P_t / (4.0 * link.config.sigma_e2 * K2)};
}

FitCoefficients resolve_coeffs(const Link& link, const BeamformOptions& opts) {
  return opts.coeffs ? *opts.coeffs : coeff_lookup(link.config.M, link.config.G);
}

PhaseProfile initial_profile(const Link& link, const BeamformOptions& opts) {
  if (opts.initial) {
    if (opts.initial->size() != link.config.N) throw Error("initial phase profile has wrong length");
    return project_unit_modulus(opts.initial->theta);
  }
  if (opts.init == InitMode::identity) return baseline_identity(link.config.N);
  RandomStream rng = RandomStream::derive(opts.seed, 0x1A17);
  return baseline_random(link.config.N, rng);
}

double shift_constant(const std::vector<RatioTerm>& terms) {
  double m = 0.0;
  for (const auto& t : terms) m = std::max(m, std::abs(t.U));
  return 1.1 * m + 1e-6;
}

// Quadratic-transform surrogate Σ 2 y_i √u_i(θ) - y_i² g_i(θ) with
// u_i = (U_i + Mshift) t + Mshift Q_i and g_i = Q_i + t.
struct Surrogate {
  const Link& link;
  const std::vector<RatioTerm>& terms;
  SideScale scale;
  double Mshift;
  std::vector<double> y;

  double t(Side s, const CVector& theta) const {
    return scale(s) * std::max(0.0, quadratic_form(link.gram(s), theta));
  }
  double u(const RatioTerm& r, double t) const { return (r.U + Mshift) * t + Mshift * r.Q; }

  void update_y(const CVector& theta) {
    const double tb = t(Side::bob, theta), te = t(Side::eve, theta);
    y.resize(terms.size());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double ti = terms[i].side == Side::bob ? tb : te;
      y[i] = std::sqrt(u(terms[i], ti)) / (terms[i].Q + ti);
    }
  }

  double value(const CVector& theta) const {
    const double tb = t(Side::bob, theta), te = t(Side::eve, theta);
    double v = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double ti = terms[i].side == Side::bob ? tb : te;
      v += 2.0 * y[i] * std::sqrt(u(terms[i], ti)) - y[i] * y[i] * (terms[i].Q + ti);
    }
    return v;
  }

  CVector gradient(const CVector& theta) const {
    const double tb = t(Side::bob, theta), te = t(Side::eve, theta);
    double wb = 0.0, we = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
      const double ti = terms[i].side == Side::bob ? tb : te;
      const double dt = y[i] * (terms[i].U + Mshift) / std::sqrt(u(terms[i], ti)) - y[i] * y[i];
      (terms[i].side == Side::bob ? wb : we) += dt;
    }
    return 2.0 * (wb * scale.bob * (link.R_B * theta) + we * scale.eve * (link.R_E * theta));
  }
};

// Projected gradient ascent on the surrogate with backtracking. Any accepted
// step raises the surrogate and hence NASR.
CVector surrogate_ascent(const Surrogate& s, CVector theta, int steps) {
  double v = s.value(theta);
  for (int it = 0; it < steps; ++it) {
    const CVector g = s.gradient(theta);
    const double gn = g.norm();
    if (!(gn > 0.0)) break;
    double step = std::sqrt(static_cast<double>(theta.size())) / gn;
    bool moved = false;
    for (int b = 0; b < 40; ++b, step *= 0.5) {
      const CVector trial = project_unit_modulus(theta + step * g).theta;
      const double vt = s.value(trial);
      if (vt > v) {
        theta = trial;
        v = vt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  return theta;
}

// Step doubling along the direction of an accepted update, kept while NASR
// keeps rising. The quadratic-transform surrogate is far more curved than the
// objective, so its maximizer lies well short of the objective's.
CVector extrapolate(const Link& link, PowerFactor beta, const FitCoefficients& coeffs, const CVector& from,
                    CVector to, double& F) {
  const CVector d = to - from;
  for (double w = 2.0; w <= 1048576.0; w *= 2.0) {
    const CVector trial = project_unit_modulus(from + w * d).theta;
    const double Ft = nasr(link, {trial}, beta, coeffs);
    if (!(Ft > F)) break;
    F = Ft;
    to = trial;
  }
  return to;
}

}  // namespace

std::vector<RatioTerm> ratio_terms(const FitCoefficients& coeffs, ObjectiveSense sense) {
  const double sign = sense == ObjectiveSense::maximize ? 1.0 : -1.0;
  std::vector<RatioTerm> out;
  out.reserve(2 * coeffs.terms.size());
  for (const auto& t : coeffs.terms) out.push_back({sign * t.zeta, t.xi, Side::bob});
  for (const auto& t : coeffs.terms) out.push_back({-sign * t.zeta, t.xi, Side::eve});
  return out;
}

PhaseProfile project_unit_modulus(const CVector& v) {
  PhaseProfile p;
  p.theta.resize(v.size());
  for (Eigen::Index n = 0; n < v.size(); ++n) p.theta(n) = std::polar(1.0, std::arg(v(n)));
  return p;
}

PhaseProfile baseline_identity(int N) { return {CVector::Ones(N), false}; }

PhaseProfile baseline_random(int N, RandomStream& rng) {
  PhaseProfile p;
  p.theta.resize(N);
  for (int n = 0; n < N; ++n) p.theta(n) = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
  return p;
}

CVector nasr_theta_gradient(const Link& link, const PhaseProfile& theta, PowerFactor beta,
                            const FitCoefficients& coeffs) {
  const SideScale c = side_scale(link, beta);
  const double tb = c.bob * std::max(0.0, quadratic_form(link.R_B, theta.theta));
  const double te = c.eve * std::max(0.0, quadratic_form(link.R_E, theta.theta));
  return 2.0 * (nasr_component_slope(tb, coeffs) * c.bob * (link.R_B * theta.theta) -
                nasr_component_slope(te, coeffs) * c.eve * (link.R_E * theta.theta));
}

// ---------------------------------------------------------------------------
// Dual ascent on the quadratic-transformed sum of shifted ratios.

BeamformResult max_nasr_da(const Link& link, PowerFactor beta, const BeamformOptions& opts) {
  const auto t0 = Clock::now();
  const FitCoefficients coeffs = resolve_coeffs(link, opts);
  const auto terms = ratio_terms(coeffs, ObjectiveSense::maximize);
  const int N = link.config.N;
  const int max_outer = opts.max_outer > 0 ? opts.max_outer : 200;

  Surrogate sur{link, terms, side_scale(link, beta), shift_constant(terms), {}};

  BeamformResult res;
  CVector Phi = initial_profile(link, opts).theta;
  CVector phi = Phi;
  CVector lambda = CVector::Zero(N);
  double rho = opts.rho;
  double F = nasr(link, {Phi}, beta, coeffs);
  res.objective_trace.emplace_back(0, F);
  res.converged = false;

  int outer = 0;
  bool failed = false;
  for (outer = 1; outer <= max_outer; ++outer) {
    sur.update_y(Phi);

    // φ-subproblem: maximize the surrogate with √u linearized at the previous
    // iterate; the concave part has Hessian -2P with P = Σ y_i² c R_side.
    double yb2 = 0.0, ye2 = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) (terms[i].side == Side::bob ? yb2 : ye2) += sur.y[i] * sur.y[i];
    const CMatrix P = yb2 * sur.scale.bob * link.R_B + ye2 * sur.scale.eve * link.R_E;

    Eigen::LLT<CMatrix> llt;
    int escalations = 0;
    for (;;) {
      CMatrix system = 2.0 * P;
      system.diagonal().array() += rho;
      llt.compute(system);
      if (llt.info() == Eigen::Success) break;
      if (++escalations > 5) {
        failed = true;
        break;
      }
      rho *= 2.0;
    }
    if (failed) break;

    // Weights of the linearized √u terms per side.
    auto sqrt_weights = [&](const CVector& v) {
      const double tb = sur.t(Side::bob, v), te = sur.t(Side::eve, v);
      double wb = 0.0, we = 0.0;
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const double ti = terms[i].side == Side::bob ? tb : te;
        const double w = 2.0 * sur.y[i] * (terms[i].U + sur.Mshift) / std::sqrt(sur.u(terms[i], ti));
        (terms[i].side == Side::bob ? wb : we) += w;
      }
      return std::pair{wb, we};
    };

    CVector Phi_inner = Phi;
    for (int inner = 0; inner < opts.max_inner; ++inner) {
      const CVector Phi_prev = Phi_inner;
      Phi_inner = project_unit_modulus(phi - lambda / rho).theta;
      const auto [wb, we] = sqrt_weights(phi);
      const CVector rhs = wb * sur.scale.bob * (link.R_B * phi) + we * sur.scale.eve * (link.R_E * phi) +
                          lambda + rho * Phi_inner;
      phi = llt.solve(rhs);
      lambda += rho * (Phi_inner - phi);
      if ((Phi_inner - Phi_prev).norm() <= opts.inner_tol && inner > 0) break;
    }

    CVector candidate = Phi_inner;
    double F_new = nasr(link, {candidate}, beta, coeffs);
    if (F_new < F) {
      // Inexact inner solve went downhill: take surrogate ascent steps from Φ instead.
      candidate = surrogate_ascent(sur, Phi, 25);
      F_new = nasr(link, {candidate}, beta, coeffs);
      phi = candidate;
      lambda.setZero();
      if (F_new < F) {
        res.converged = true;
        break;
      }
    }
    const double F_step = F_new;
    candidate = extrapolate(link, beta, coeffs, Phi, candidate, F_new);
    if (F_new > F_step) {
      phi = candidate;
      lambda.setZero();
    }
    const double gain = F_new - F;
    Phi = candidate;
    F = F_new;
    res.objective_trace.emplace_back(outer, F);
    if (gain <= 1e-4) {
      res.converged = true;
      break;
    }
  }

  res.theta = project_unit_modulus(Phi);
  res.iterations = std::min(outer, max_outer);
  res.wall_time = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------
// Successive convex approximation on the epigraph form of the minimization.

double ScaConstraint::value(const CVector& theta) const {
  return slope * c * quadratic_form(*R, theta) - offset;
}

double ScaConstraint::linearized(const CVector& theta, const CVector& theta0) const {
  const CVector g0 = 2.0 * c * ((*R) * theta0);
  const double t0 = c * quadratic_form(*R, theta0);
  return slope * (t0 + (g0.adjoint() * (theta - theta0)).value().real()) - offset;
}

namespace {

void project_unit_disk(CVector& v) {
  for (Eigen::Index n = 0; n < v.size(); ++n) {
    const double a = std::abs(v(n));
    if (a > 1.0) v(n) /= a;
  }
}

// min_θ Σ_i w_i f̃_i(θ) over |θ_n| ≤ 1, with f̃_i the exact convex constraint
// for slope > 0 and its linearization at θ0 for slope < 0. With w_i = 1/g_i(θ0)
// this is the first-order model of Σ h_i/g_i around θ0.
CVector sca_subproblem(const std::vector<ScaConstraint>& cons, const CVector& theta0, int steps) {
  auto eval = [&](const CVector& th) {
    double v = 0.0;
    for (const auto& f : cons) v += f.weight * (f.slope > 0.0 ? f.value(th) : f.linearized(th, theta0));
    return v;
  };
  auto gradient = [&](const CVector& th) {
    CVector g = CVector::Zero(th.size());
    for (const auto& f : cons) g += (2.0 * f.weight * f.slope * f.c) * ((*f.R) * (f.slope > 0.0 ? th : theta0));
    return g;
  };

  CVector th = theta0;
  double fbest = eval(th);
  CVector best = th;
  const double step0 = 0.1 * std::sqrt(static_cast<double>(th.size()));
  for (int k = 1; k <= steps; ++k) {
    const CVector g = gradient(th);
    const double gn = g.norm();
    if (!(gn > 0.0)) break;
    th -= (step0 / std::sqrt(static_cast<double>(k)) / gn) * g;
    project_unit_disk(th);
    const double f = eval(th);
    if (f < fbest) {
      fbest = f;
      best = th;
    }
  }
  return best;
}

}  // namespace

BeamformResult max_nasr_sca(const Link& link, PowerFactor beta, const BeamformOptions& opts) {
  const auto t0 = Clock::now();
  const FitCoefficients coeffs = resolve_coeffs(link, opts);
  const auto terms = ratio_terms(coeffs, ObjectiveSense::minimize);
  const SideScale scale = side_scale(link, beta);
  const int max_outer = opts.max_outer > 0 ? opts.max_outer : 100;

  BeamformResult res;
  CVector Phi = initial_profile(link, opts).theta;
  PhaseProfile best = project_unit_modulus(Phi);
  double bestF = nasr(link, best, beta, coeffs);
  res.objective_trace.emplace_back(0, bestF);

  int outer = 0;
  for (outer = 1; outer <= max_outer; ++outer) {
    const double tb = scale.bob * std::max(0.0, quadratic_form(link.R_B, Phi));
    const double te = scale.eve * std::max(0.0, quadratic_form(link.R_E, Phi));
    std::vector<ScaConstraint> cons;
    for (const auto& term : terms) {
      const double t = term.side == Side::bob ? tb : te;
      const double alpha = term.U * t / (term.Q + t);
      const double slope = term.U - alpha;
      if (slope == 0.0) continue;
      cons.push_back({slope, alpha * term.Q, scale(term.side), &link.gram(term.side), 1.0 / (term.Q + t)});
    }
    if (cons.empty()) {
      res.degenerate = true;
      res.converged = true;
      break;
    }

    const CVector next = sca_subproblem(cons, Phi, opts.sca_steps);
    const double moved = (next - Phi).norm();
    Phi = next;

    const PhaseProfile projected = project_unit_modulus(Phi);
    const double F = nasr(link, projected, beta, coeffs);
    res.objective_trace.emplace_back(outer, F);
    if (F > bestF) {
      bestF = F;
      best = projected;
    }
    if (moved <= opts.inner_tol) {
      res.converged = true;
      break;
    }
  }

  res.theta = best;
  res.iterations = std::min(outer, max_outer);
  res.wall_time = seconds_since(t0);
  return res;
}

// ---------------------------------------------------------------------------

BeamformResult max_tasr_sdr(const Link& link, PowerFactor beta, const BeamformOptions& opts) {
  const auto t0 = Clock::now();
  BeamformResult res;

  // Noise-normalized channels; with σ_b² = σ_e² this is a positive rescaling of Ω.
  EffectiveChannels whitened{link.chans.H_Bp / std::sqrt(link.config.sigma_b2),
                             link.chans.H_Ep / std::sqrt(link.config.sigma_e2)};
  const CMatrix Omega = build_omega(whitened, link.syms);
  const double scale = Omega.cwiseAbs().maxCoeff();

  const double ref = (whitened.H_Bp.squaredNorm() + whitened.H_Ep.squaredNorm()) *
                     link.syms.D_agg.cwiseAbs().maxCoeff();
  if (!(scale > 1e-12 * ref)) {
    // Ω = 0: every unit-modulus profile attains the same objective.
    res.theta = initial_profile(link, opts);
    res.degenerate = true;
    res.converged = true;
  } else {
    const SdpSolution sol = sdp_solve(Omega / scale, opts.sdp_tol, opts.sdp_max_iter);
    RandomStream rng = RandomStream::derive(opts.seed, 0x5D12);
    res.theta = gaussian_randomize(sol.Q, Omega, opts.L_randomize, rng);
    res.iterations = sol.iterations;
    res.converged = sol.converged;
  }
  res.objective_trace.emplace_back(res.iterations, tasr(link, res.theta, beta));
  res.wall_time = seconds_since(t0);
  return res;
}

}  // namespace irsssm
