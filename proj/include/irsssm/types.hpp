#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace irsssm {

template <typename Scalar>
using ComplexT = std::complex<Scalar>;
template <typename Scalar>
using CMatrixT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using CVectorT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>;
template <typename Scalar>
using RVectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Complex = ComplexT<double>;
using CMatrix = CMatrixT<double>;
using CVector = CVectorT<double>;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// System parameters of one transmitter / IRS / Bob / Eve scenario.
///
/// Noise variances and the total power are linear (watts). Alice has a single
/// antenna, so the total transmit power is carried directly by `P_s`.
struct ScenarioConfig {
  int M = 4;  ///< PSK order
  int G = 4;  ///< number of IRS groups
  int N = 16; ///< number of IRS elements
  int N_b = 2;
  int N_e = 2;
  double sigma_b2 = 0.1;
  double sigma_e2 = 0.1;
  double P_s = 1.0;
  std::uint64_t seed = 1;

  int supersymbol_count() const { return G * M; }

  /// Throws irsssm::Error if any invariant is violated.
  void validate() const;
};

/// Raw Rayleigh channels: Alice→IRS, IRS→Bob, IRS→Eve.
struct ChannelSet {
  CVector h_t;  // length N (row vector in the model)
  CMatrix H_B;  // N_b × N
  CMatrix H_E;  // N_e × N
};

/// Cascaded channels H' = H · diag(h_t).
struct EffectiveChannels {
  CMatrix H_Bp;
  CMatrix H_Ep;
};

/// Spatial-modulation alphabet: which group is ON times a PSK symbol.
struct SymbolSet {
  int M = 0;
  int G = 0;
  int N = 0;
  CVector constellation;           // M unit-energy PSK points
  std::vector<RVector> selectors;  // G binary vectors of length N
  CMatrix supersymbols;            // N × GM, column k = s_i b_j (i-major, j-minor)
  CMatrix D_agg;                   // Σ_{k,l} d_kl d_kl^H

  int size() const { return static_cast<int>(supersymbols.cols()); }
};

/// IRS reflection vector θ, the diagonal of Φ.
struct PhaseProfile {
  CVector theta;
  bool relaxed = false;  // true for iterates of |θ_n| ≤ 1 relaxations

  int size() const { return static_cast<int>(theta.size()); }
};

/// Transmit power factor β with P_t = β² P_s.
class PowerFactor {
 public:
  PowerFactor() = default;
  explicit PowerFactor(double beta) : beta_(beta) {
    if (!(beta > 0.0 && beta <= 1.0))
      throw Error("power factor must lie in (0, 1], got " + std::to_string(beta));
  }
  double beta() const { return beta_; }
  double transmit_power(double P_s) const { return beta_ * beta_ * P_s; }

 private:
  double beta_ = 1.0;
};

enum class Side { bob, eve };

}  // namespace irsssm
