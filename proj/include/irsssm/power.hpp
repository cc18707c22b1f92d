#pragma once

#include <optional>
#include <string>
#include <vector>

#include "irsssm/metrics.hpp"
#include "irsssm/types.hpp"

namespace irsssm {

enum class TpdKind { nasr, tasr, fixed };

struct TpdOptions {
  TpdKind kind = TpdKind::nasr;
  double fixed_beta = 1.0;
  double mu0 = 0.1;                       // initial TASR step size
  int max_iter = 0;                       // 0 → method default (NASR 200, TASR 500)
  std::optional<double> initial_beta;     // start point; default: best of a coarse scan
  std::optional<FitCoefficients> coeffs;  // overrides coeff_lookup(M, G)
};

struct TpdResult {
  PowerFactor beta;
  double objective_bits = 0.0;
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  std::vector<double> trace;  // objective after each iteration, starting with the initial point
};

/// Quadratic-transform power design on the NASR. Each iteration refreshes y_i
/// and then maximizes the surrogate Σ 2y_i√u_i(x) - y_i² g_i(x) exactly over
/// x = β² ∈ (0, 1].
TpdResult max_nasr_tpd(const Link& link, const PhaseProfile& theta, const TpdOptions& opts = {});

/// One plain quadratic-transform update: y_i at β, then the surrogate's
/// maximizer. max_nasr_tpd returns a fixed point of this map.
double nasr_tpd_update(const Link& link, const PhaseProfile& theta, PowerFactor beta, const FitCoefficients& coeffs);

/// Stationarity residual of the surrogate at β, with y_i recomputed at β.
/// Zero at an interior fixed point of max_nasr_tpd.
double nasr_tpd_residual(const Link& link, const PhaseProfile& theta, PowerFactor beta,
                         const FitCoefficients& coeffs);

/// d TASR / dβ.
double tasr_beta_gradient(const Link& link, const PhaseProfile& theta, PowerFactor beta);

/// Projected gradient ascent on TASR over β ∈ [1e-4, 1] with step halving.
TpdResult max_tasr_tpd(const Link& link, const PhaseProfile& theta, const TpdOptions& opts = {});

/// β = opts.fixed_beta, reported with its NASR.
TpdResult fixed_tpd(const Link& link, const PhaseProfile& theta, const TpdOptions& opts);

/// Dispatch on opts.kind.
TpdResult run_tpd(const Link& link, const PhaseProfile& theta, const TpdOptions& opts);

}  // namespace irsssm
