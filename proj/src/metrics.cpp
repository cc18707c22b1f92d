#include "irsssm/metrics.hpp"

#include <sstream>
#include <string>

#include "coeff_table.hpp"

namespace irsssm {

double FitCoefficients::zeta_sum() const {
  double s = 0.0;
  for (const auto& t : terms) s += t.zeta;
  return s;
}

Link::Link(const ScenarioConfig& cfg, EffectiveChannels ch)
    : config(cfg), chans(std::move(ch)), syms(build_symbol_set(cfg)) {
  if (chans.H_Bp.cols() != cfg.N || chans.H_Ep.cols() != cfg.N)
    throw Error("Link: channel width does not match N");
  R_B = pair_gram(chans.H_Bp, syms.D_agg);
  R_E = pair_gram(chans.H_Ep, syms.D_agg);
}

double mean_pair_gamma(const Link& link, Side side, const PhaseProfile& theta, double P_t) {
  const double K = link.K();
  const double q = std::max(0.0, quadratic_form(link.gram(side), theta.theta));
  return P_t * q / (4.0 * link.noise(side) * K * K);
}

MiEstimate mi_monte_carlo(const CMatrix& Hp, const PhaseProfile& theta, double P_t, double sigma2,
                          const SymbolSet& syms, int n_samples, RandomStream& rng) {
  if (n_samples < 1) throw Error("mi_monte_carlo: n_samples must be >= 1");
  if (!(sigma2 > 0.0)) throw Error("mi_monte_carlo: sigma2 must be positive");
  if (!(P_t >= 0.0)) throw Error("mi_monte_carlo: P_t must be non-negative");
  if (Hp.cols() != theta.size() || theta.size() != syms.N)
    throw Error("mi_monte_carlo: dimension mismatch");

  const int K = syms.size();
  const Eigen::Index nr = Hp.rows();
  // Noiseless received points, one column per supersymbol.
  const CMatrix A = std::sqrt(P_t) * (Hp * theta.theta.asDiagonal() * syms.supersymbols);

  // ||A_k - A_l + n||² - ||n||² = Δ_kl + 2 Re(p_k - p_l) with p = A^H n.
  RMatrix dist2(K, K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) dist2(k, l) = (A.col(k) - A.col(l)).squaredNorm();

  const double log2K = std::log2(static_cast<double>(K));
  CVector n(nr);
  RVector e(K);
  double mean = 0.0, m2 = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    rng.fill_complex_normal(n, sigma2);
    const RVector p = (A.adjoint() * n).real();
    // Accumulates the deviation of each inner log term from its P_t = 0 value
    // log2(K), so a silent link gives exactly zero.
    double acc = 0.0;
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < K; ++l) e(l) = -(dist2(k, l) + 2.0 * (p(k) - p(l))) / sigma2;
      const double mx = e.maxCoeff();
      acc += (mx / std::numbers::ln2 + std::log2((e.array() - mx).exp().sum())) - log2K;
    }
    const double v = acc / K;
    const double delta = v - mean;
    mean += delta / (s + 1);
    m2 += delta * (v - mean);
  }

  MiEstimate est;
  est.value_bits = -mean;
  est.std_error_bits = n_samples > 1 ? std::sqrt(m2 / (n_samples - 1) / n_samples) : 0.0;
  est.n_noise_samples = n_samples;
  return est;
}

SecrecyEstimate secrecy_rate_mc(const Link& link, const PhaseProfile& theta, PowerFactor beta,
                                int n_samples, RandomStream& rng) {
  const double P_t = beta.transmit_power(link.config.P_s);
  const std::uint64_t noise_seed = rng.next_u64();
  RandomStream bob_rng(noise_seed), eve_rng(noise_seed);
  SecrecyEstimate out;
  out.bob = mi_monte_carlo(link.chans.H_Bp, theta, P_t, link.config.sigma_b2, link.syms, n_samples, bob_rng);
  out.eve = mi_monte_carlo(link.chans.H_Ep, theta, P_t, link.config.sigma_e2, link.syms, n_samples, eve_rng);
  out.sr_bits = std::max(0.0, out.bob.value_bits - out.eve.value_bits);
  return out;
}

double cutoff_rate(const CMatrix& Hp, const PhaseProfile& theta, double P_t, double sigma2,
                   const SymbolSet& syms) {
  if (!(sigma2 > 0.0)) throw Error("cutoff_rate: sigma2 must be positive");
  if (Hp.cols() != theta.size() || theta.size() != syms.N) throw Error("cutoff_rate: dimension mismatch");
  const int K = syms.size();
  const CMatrix A = Hp * theta.theta.asDiagonal() * syms.supersymbols;
  RVector e(static_cast<Eigen::Index>(K) * K);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) e(k * K + l) = -P_t * (A.col(k) - A.col(l)).squaredNorm() / (4.0 * sigma2);
  return 2.0 * std::log2(static_cast<double>(K)) - log_sum_exp(e) / std::numbers::ln2;
}

double tasr(const Link& link, const PhaseProfile& theta, PowerFactor beta) {
  const double P_t = beta.transmit_power(link.config.P_s);
  return cutoff_rate(link.chans.H_Bp, theta, P_t, link.config.sigma_b2, link.syms) -
         cutoff_rate(link.chans.H_Ep, theta, P_t, link.config.sigma_e2, link.syms);
}

std::vector<FitCoefficients> coefficient_table() {
  std::vector<FitCoefficients> rows;
  std::istringstream in(detail::kCoefficientTableCsv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::vector<double> f;
    while (std::getline(ls, tok, ',')) f.push_back(std::stod(tok));
    if (f.size() != 9) throw Error("coefficient table: malformed row '" + line + "'");
    FitCoefficients c;
    c.M = static_cast<int>(f[0]);
    c.G = static_cast<int>(f[1]);
    for (int i = 0; i < 3; ++i) c.terms.push_back({f[2 + i], f[5 + i]});
    c.rmse = f[8];
    rows.push_back(std::move(c));
  }
  return rows;
}

FitCoefficients coeff_lookup(int M, int G) {
  static const std::vector<FitCoefficients> table = coefficient_table();
  for (const auto& row : table)
    if (row.M == M && row.G == G) return row;
  throw Error("no fitted coefficients for (M, G) = (" + std::to_string(M) + ", " + std::to_string(G) +
              "); generate them with refit_coeffs");
}

double nasr_component(double gamma, const FitCoefficients& coeffs) {
  double s = 0.0;
  for (const auto& t : coeffs.terms) s += t.zeta * gamma / (t.xi + gamma);
  return s;
}

double nasr_component_slope(double gamma, const FitCoefficients& coeffs) {
  double s = 0.0;
  for (const auto& t : coeffs.terms) s += t.zeta * t.xi / ((t.xi + gamma) * (t.xi + gamma));
  return s;
}

double nasr(const Link& link, const PhaseProfile& theta, PowerFactor beta, const FitCoefficients& coeffs) {
  const double P_t = beta.transmit_power(link.config.P_s);
  return nasr_component(mean_pair_gamma(link, Side::bob, theta, P_t), coeffs) -
         nasr_component(mean_pair_gamma(link, Side::eve, theta, P_t), coeffs);
}

}  // namespace irsssm
