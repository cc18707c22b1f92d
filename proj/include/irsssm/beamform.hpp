#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "irsssm/metrics.hpp"
#include "irsssm/random.hpp"
#include "irsssm/types.hpp"

namespace irsssm {

struct BeamformResult {
  PhaseProfile theta;
  std::vector<std::pair<int, double>> objective_trace;  // (iteration, objective bits)
  int iterations = 0;
  bool converged = false;
  bool degenerate = false;
  double wall_time = 0.0;  // seconds
};

struct SdpSolution {
  CMatrix Q;
  double primal_objective = 0.0;
  double diag_residual = 0.0;   // max |Q_nn - 1|
  double min_eigenvalue = 0.0;
  int iterations = 0;
  bool converged = false;
};

enum class InitMode { random, identity };

/// Sign convention of the 2k ratio terms U_i t / (Q_i + t).
///   maximize: Bob terms U = +ζ_i, Eve terms U = -ζ_i (NASR itself)
///   minimize: Bob terms U = -ζ_i, Eve terms U = +ζ_i (negated NASR)
enum class ObjectiveSense { maximize, minimize };

struct RatioTerm {
  double U;
  double Q;
  Side side;
};

std::vector<RatioTerm> ratio_terms(const FitCoefficients& coeffs, ObjectiveSense sense);

struct BeamformOptions {
  double rho = 0.5;        // DA penalty
  int L_randomize = 100;   // Gaussian randomization draws
  int max_outer = 0;       // 0 → method default (DA 200, SCA 100)
  int max_inner = 500;     // DA inner loop cap
  double inner_tol = 0.01; // ||Φ_k - Φ_{k-1}|| stopping threshold
  int sca_steps = 500;     // projected subgradient steps per SCA subproblem
  int sdp_max_iter = 2000;
  double sdp_tol = 1e-7;
  InitMode init = InitMode::random;
  std::uint64_t seed = 1;
  std::optional<PhaseProfile> initial;       // overrides `init`
  std::optional<FitCoefficients> coeffs;     // overrides coeff_lookup(M, G)
};

/// Entrywise e^{j angle(v_n)}; zero entries map to 1.
PhaseProfile project_unit_modulus(const CVector& v);

PhaseProfile baseline_identity(int N);
PhaseProfile baseline_random(int N, RandomStream& rng);

/// Gradient of NASR with respect to θ, in the convention
/// NASR(θ + δ) ≈ NASR(θ) + Re(gᴴ δ).
CVector nasr_theta_gradient(const Link& link, const PhaseProfile& theta, PowerFactor beta,
                            const FitCoefficients& coeffs);

BeamformResult max_nasr_da(const Link& link, PowerFactor beta, const BeamformOptions& opts = {});
BeamformResult max_nasr_sca(const Link& link, PowerFactor beta, const BeamformOptions& opts = {});
BeamformResult max_tasr_sdr(const Link& link, PowerFactor beta, const BeamformOptions& opts = {});

/// Ω = Σ_{k,l} diag(d_kl)^H (H_Bp^H H_Bp - H_Ep^H H_Ep) diag(d_kl).
CMatrix build_omega(const EffectiveChannels& chans, const SymbolSet& syms);

/// max tr(ΩQ) s.t. diag(Q) = 1, Q ⪰ 0 by ADMM with PSD-cone projection.
SdpSolution sdp_solve(const CMatrix& Omega, double tol = 1e-7, int max_iter = 2000);

/// Best of L unit-modulus candidates drawn from CN(0, Q), ranked by θ^H Ω θ.
PhaseProfile gaussian_randomize(const CMatrix& Q, const CMatrix& Omega, int L, RandomStream& rng);

// SCA building blocks, exposed for testing.

/// f_i(θ) = (U_i - α_i) t(θ) - α_i Q_i with t(θ) = c θ^H R θ.
struct ScaConstraint {
  double slope;   // U_i - α_i
  double offset;  // α_i Q_i
  double c;       // P_t / (4σ² K²)
  const CMatrix* R;
  double weight = 1.0;  // 1 / g_i(θ0) in the subproblem objective

  double value(const CVector& theta) const;
  /// First-order expansion of f_i around θ0.
  double linearized(const CVector& theta, const CVector& theta0) const;
};

}  // namespace irsssm
