#include <algorithm>
#include <cmath>
#include <limits>

#include "irsssm/beamform.hpp"

namespace irsssm {

namespace {

CMatrix hermitian_part(const CMatrix& A) { return 0.5 * (A + A.adjoint()); }

CMatrix project_psd(const CMatrix& A) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(A));
  const RVector lam = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

CMatrix build_omega(const EffectiveChannels& chans, const SymbolSet& syms) {
  const CMatrix A = chans.H_Bp.adjoint() * chans.H_Bp - chans.H_Ep.adjoint() * chans.H_Ep;
  // Σ diag(d)^H A diag(d) has entries A_mn Σ conj(d_m) d_n = A_mn (D_agg)_nm.
  return hermitian_part(A.cwiseProduct(syms.D_agg.transpose()));
}

SdpSolution sdp_solve(const CMatrix& Omega, double tol, int max_iter) {
  const Eigen::Index N = Omega.rows();
  if (Omega.cols() != N) throw Error("sdp_solve: Omega must be square");
  if ((Omega - Omega.adjoint()).norm() > 1e-8 * (1.0 + Omega.norm()))
    throw Error("sdp_solve: Omega must be Hermitian");

  // Work on a unit-scale copy; the optimizer is scale invariant.
  const double scale = std::max(Omega.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  const CMatrix C = hermitian_part(Omega) / scale;

  // ADMM splitting of  min -tr(CQ) + I_psd(Q) + I_{diag=1}(Z)  s.t. Q = Z.
  double rho = 1.0;
  CMatrix Z = CMatrix::Identity(N, N);
  CMatrix U = CMatrix::Zero(N, N);
  CMatrix Q = Z;
  SdpSolution sol;
  const double sqrtN = std::sqrt(static_cast<double>(N));
  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    Q = project_psd(Z - U + C / rho);
    const CMatrix Z_old = Z;
    Z = Q + U;
    Z.diagonal().setOnes();
    U += Q - Z;

    const double r_primal = (Q - Z).norm() / sqrtN;
    const double r_dual = rho * (Z - Z_old).norm() / sqrtN;
    if (r_primal <= tol && r_dual <= tol) {
      sol.converged = true;
      break;
    }
    if (it % 10 == 0) {
      if (r_primal > 10.0 * r_dual) {
        rho *= 2.0;
        U /= 2.0;
      } else if (r_dual > 10.0 * r_primal) {
        rho /= 2.0;
        U *= 2.0;
      }
    }
  }
  sol.iterations = std::min(it, max_iter);

  // Rescale the PSD iterate to unit diagonal; the congruence keeps Q ⪰ 0.
  RVector d = Q.diagonal().real();
  for (Eigen::Index n = 0; n < N; ++n) {
    if (d(n) > 1e-12) continue;
    Q.row(n).setZero();
    Q.col(n).setZero();
    Q(n, n) = 1.0;
    d(n) = 1.0;
  }
  const RVector inv_sqrt = d.cwiseSqrt().cwiseInverse();
  Q = hermitian_part(inv_sqrt.cast<Complex>().asDiagonal() * Q * inv_sqrt.cast<Complex>().asDiagonal());
  Q.diagonal().setOnes();

  sol.Q = Q;
  sol.primal_objective = (Omega * Q).trace().real();
  sol.diag_residual = (Q.diagonal().real().array() - 1.0).abs().maxCoeff();
  sol.min_eigenvalue = Eigen::SelfAdjointEigenSolver<CMatrix>(Q, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
  return sol;
}

PhaseProfile gaussian_randomize(const CMatrix& Q, const CMatrix& Omega, int L, RandomStream& rng) {
  if (L < 1) throw Error("gaussian_randomize: L must be >= 1");
  const Eigen::Index N = Q.rows();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(Q));
  // Eigenvalues at rounding level are treated as zero so a rank-one Q stays rank one.
  RVector lam = es.eigenvalues();
  const double cut = 1e-12 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  lam = (lam.array() > cut).select(lam, 0.0);
  const CMatrix F = es.eigenvectors() * lam.cwiseSqrt().cast<Complex>().asDiagonal();

  PhaseProfile best;
  double best_value = -std::numeric_limits<double>::infinity();
  CVector z(N);
  for (int l = 0; l < L; ++l) {
    rng.fill_complex_normal(z);
    PhaseProfile cand = project_unit_modulus(F * z);
    const double v = quadratic_form(Omega, cand.theta);
    if (v > best_value) {
      best_value = v;
      best = std::move(cand);
    }
  }
  return best;
}

}  // namespace irsssm
