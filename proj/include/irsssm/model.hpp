#pragma once

#include <iosfwd>
#include <string>

#include "irsssm/random.hpp"
#include "irsssm/types.hpp"

namespace irsssm {

/// Draws iid CN(0,1) entries for h_t, H_B, H_E in that order.
ChannelSet gen_channels(const ScenarioConfig& config, RandomStream& rng);

/// H_Bp = H_B diag(h_t), H_Ep = H_E diag(h_t).
EffectiveChannels effective_channels(const ChannelSet& ch);

SymbolSet build_symbol_set(const ScenarioConfig& config);

/// M-PSK points e^{j2πm/M}, m = 0..M-1.
CVector psk_constellation(int M);

/// log2(M) + log2(G); both must be powers of two.
double spectral_rate(int M, int G);

/// Φ = diag(θ) applied to the columns of H: H diag(θ).
template <typename Derived, typename VecDerived>
CMatrix scale_columns(const Eigen::MatrixBase<Derived>& H, const Eigen::MatrixBase<VecDerived>& v) {
  return H * v.asDiagonal();
}

// Scenario files: JSON with keys exactly M, G, N, N_b, N_e, sigma_b2, sigma_e2, P_s, seed.
ScenarioConfig parse_scenario_json(const std::string& text);
ScenarioConfig load_scenario(const std::string& path);
std::string scenario_to_json(const ScenarioConfig& config);

// Channel dumps: CSV with header `matrix,row,col,re,im`, matrix ∈ {ht, HB, HE}.
void write_channels_csv(std::ostream& out, const ChannelSet& ch);
ChannelSet read_channels_csv(std::istream& in);

/// FNV-1a over the raw bytes of all channel entries.
std::uint64_t channel_hash(const ChannelSet& ch);

}  // namespace irsssm
