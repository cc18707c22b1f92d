#pragma once

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "irsssm/model.hpp"
#include "irsssm/random.hpp"
#include "irsssm/types.hpp"

namespace irsssm {

/// Coefficients of the sum-of-ratios fit Σ ζ_i γ / (ξ_i + γ).
struct FitCoefficients {
  struct Term {
    double zeta;
    double xi;
  };
  std::vector<Term> terms;
  double rmse = 0.0;
  int M = 0;
  int G = 0;
  bool converged = true;  // false only for refits that missed the RMSE target

  double zeta_sum() const;
};

struct MiEstimate {
  double value_bits = 0.0;
  double std_error_bits = 0.0;
  int n_noise_samples = 0;
};

struct SecrecyEstimate {
  double sr_bits = 0.0;  // max(0, I_B - I_E)
  MiEstimate bob;
  MiEstimate eve;
};

/// A scenario's effective channels together with its symbol alphabet and the
/// pair-Gram matrices R = (H'^H H') ∘ D_aggᵀ, which satisfy
/// θ^H R θ = tr(D_agg Φ^H H'^H H' Φ).
struct Link {
  ScenarioConfig config;
  EffectiveChannels chans;
  SymbolSet syms;
  CMatrix R_B;
  CMatrix R_E;

  Link(const ScenarioConfig& config, EffectiveChannels chans);

  const CMatrix& channel(Side s) const { return s == Side::bob ? chans.H_Bp : chans.H_Ep; }
  const CMatrix& gram(Side s) const { return s == Side::bob ? R_B : R_E; }
  double noise(Side s) const { return s == Side::bob ? config.sigma_b2 : config.sigma_e2; }
  int K() const { return syms.size(); }
};

/// (H^H H) ∘ Dᵀ.
template <typename Derived>
CMatrix pair_gram(const Eigen::MatrixBase<Derived>& Hp, const CMatrix& D_agg) {
  const CMatrix A = Hp.adjoint() * Hp;
  return A.cwiseProduct(D_agg.transpose());
}

/// Real part of θ^H R θ.
template <typename DerivedR, typename DerivedT>
double quadratic_form(const Eigen::MatrixBase<DerivedR>& R, const Eigen::MatrixBase<DerivedT>& theta) {
  return (theta.adjoint() * R * theta).value().real();
}

/// log Σ exp(x) with the maximum shifted out.
template <typename Derived>
double log_sum_exp(const Eigen::DenseBase<Derived>& x) {
  const double m = x.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((x.derived().array() - m).exp().sum());
}

/// γ = P_t tr(D_agg Φ^H H'^H H' Φ) / (4σ²), summed over all ordered supersymbol pairs.
template <typename Derived>
double gamma_stat(const Eigen::MatrixBase<Derived>& Hp, const PhaseProfile& theta, double P_t,
                  double sigma2, const CMatrix& D_agg) {
  const CMatrix HPhi = Hp * theta.theta.asDiagonal();
  const Complex tr = (D_agg * (HPhi.adjoint() * HPhi)).trace();
  return std::max(0.0, P_t * tr.real() / (4.0 * sigma2));
}

/// Pair-averaged statistic γ̄ = γ / (GM)², the argument of the fitted NASR curves.
double mean_pair_gamma(const Link& link, Side side, const PhaseProfile& theta, double P_t);

/// Monte Carlo estimate of I(b_j, s_i; y | H') in bits.
MiEstimate mi_monte_carlo(const CMatrix& Hp, const PhaseProfile& theta, double P_t, double sigma2,
                          const SymbolSet& syms, int n_samples, RandomStream& rng);

/// [I_B - I_E]^+ with both sides driven by the same noise sub-stream.
SecrecyEstimate secrecy_rate_mc(const Link& link, const PhaseProfile& theta, PowerFactor beta,
                                int n_samples, RandomStream& rng);

/// Cut-off rate 2log2(GM) - log2 Σ_{k,l} exp(-P_t ||H'Φ d_kl||² / (4σ²)).
double cutoff_rate(const CMatrix& Hp, const PhaseProfile& theta, double P_t, double sigma2,
                   const SymbolSet& syms);

/// I0_B - I0_E, not clamped.
double tasr(const Link& link, const PhaseProfile& theta, PowerFactor beta);

/// Embedded fitted coefficients for (M, G) ∈ {2,4,8} × {2,4,8,16}.
FitCoefficients coeff_lookup(int M, int G);
std::vector<FitCoefficients> coefficient_table();

double nasr_component(double gamma, const FitCoefficients& coeffs);

/// d/dγ of nasr_component.
double nasr_component_slope(double gamma, const FitCoefficients& coeffs);

/// NASR(γ̄_B) - NASR(γ̄_E).
double nasr(const Link& link, const PhaseProfile& theta, PowerFactor beta, const FitCoefficients& coeffs);

struct GammaSample {
  double gamma;
  double mi_bits;
};

struct RefitOptions {
  int starts = 24;
  int max_iterations = 300;
  double target_rmse = 0.05;
  std::uint64_t seed = 7;
};

/// Nonlinear least-squares fit of a k-term sum of ratios to (γ, MI) samples.
/// Damped Gauss-Newton (Levenberg-Marquardt) with ξ_i = exp(η_i) and
/// multi-start; returns the best-RMSE set.
FitCoefficients refit_coeffs(const std::vector<GammaSample>& samples, int k, const RefitOptions& opts = {});

}  // namespace irsssm
