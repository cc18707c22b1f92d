#include "irsssm/model.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace irsssm {

namespace {

bool is_power_of_two(int x) { return x > 0 && (x & (x - 1)) == 0; }

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(const std::string& s) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error("malformed number in channel CSV: '" + s + "'");
  return v;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (M != 2 && M != 4 && M != 8) throw Error("M must be one of 2, 4, 8");
  if (G < 2) throw Error("G must be at least 2");
  if (N < G) throw Error("N must be at least G");
  if (N % G != 0) throw Error("N must be a multiple of G");
  if (N_b < 1 || N_e < 1) throw Error("antenna counts must be positive");
  if (!(sigma_b2 > 0.0) || !(sigma_e2 > 0.0)) throw Error("noise variances must be positive");
  if (!(P_s > 0.0)) throw Error("P_s must be positive");
  if (!std::isfinite(sigma_b2) || !std::isfinite(sigma_e2) || !std::isfinite(P_s))
    throw Error("powers must be finite");
}

ChannelSet gen_channels(const ScenarioConfig& config, RandomStream& rng) {
  ChannelSet ch;
  ch.h_t.resize(config.N);
  ch.H_B.resize(config.N_b, config.N);
  ch.H_E.resize(config.N_e, config.N);
  rng.fill_complex_normal(ch.h_t);
  rng.fill_complex_normal(ch.H_B);
  rng.fill_complex_normal(ch.H_E);
  return ch;
}

EffectiveChannels effective_channels(const ChannelSet& ch) {
  if (ch.H_B.cols() != ch.h_t.size() || ch.H_E.cols() != ch.h_t.size())
    throw Error("channel dimension mismatch: h_t has " + std::to_string(ch.h_t.size()) +
                " entries, H_B has " + std::to_string(ch.H_B.cols()) + " columns, H_E has " +
                std::to_string(ch.H_E.cols()));
  return {scale_columns(ch.H_B, ch.h_t), scale_columns(ch.H_E, ch.h_t)};
}

CVector psk_constellation(int M) {
  // Components are snapped to {0, ±√½, ±1} so that symmetric points cancel
  // exactly (Σ b_j = 0 for M ∈ {2,4,8}).
  const double h = std::sqrt(0.5);
  auto snap = [h](double x) {
    for (double c : {0.0, h, -h, 1.0, -1.0})
      if (std::abs(x - c) < 1e-12) return c;
    return x;
  };
  CVector b(M);
  for (int m = 0; m < M; ++m) {
    const Complex p = std::polar(1.0, 2.0 * std::numbers::pi * m / M);
    b(m) = {snap(p.real()), snap(p.imag())};
  }
  return b;
}

SymbolSet build_symbol_set(const ScenarioConfig& config) {
  config.validate();
  SymbolSet s;
  s.M = config.M;
  s.G = config.G;
  s.N = config.N;
  s.constellation = psk_constellation(config.M);

  const int per_group = config.N / config.G;
  for (int i = 0; i < config.G; ++i) {
    RVector sel = RVector::Zero(config.N);
    sel.segment(i * per_group, per_group).setOnes();
    s.selectors.push_back(std::move(sel));
  }

  const int K = config.G * config.M;
  s.supersymbols.resize(config.N, K);
  for (int i = 0; i < config.G; ++i)
    for (int j = 0; j < config.M; ++j)
      s.supersymbols.col(i * config.M + j) = s.selectors[i].cast<Complex>() * s.constellation(j);

  s.D_agg = CMatrix::Zero(config.N, config.N);
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < K; ++l) {
      const CVector d = s.supersymbols.col(k) - s.supersymbols.col(l);
      s.D_agg.noalias() += d * d.adjoint();
    }
  return s;
}

double spectral_rate(int M, int G) {
  if (!is_power_of_two(M) || !is_power_of_two(G))
    throw Error("spectral_rate: M and G must be powers of two");
  return std::log2(static_cast<double>(M)) + std::log2(static_cast<double>(G));
}

ScenarioConfig parse_scenario_json(const std::string& text) {
  static const std::set<std::string> kKeys{"M",        "G",        "N",   "N_b", "N_e",
                                           "sigma_b2", "sigma_e2", "P_s", "seed"};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("scenario JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error("scenario JSON must be an object");
  for (const auto& [key, value] : j.items())
    if (!kKeys.count(key)) throw Error("scenario JSON: unknown key '" + key + "'");
  for (const auto& key : kKeys)
    if (!j.contains(key)) throw Error("scenario JSON: missing key '" + key + "'");

  ScenarioConfig c;
  try {
    c.M = j.at("M").get<int>();
    c.G = j.at("G").get<int>();
    c.N = j.at("N").get<int>();
    c.N_b = j.at("N_b").get<int>();
    c.N_e = j.at("N_e").get<int>();
    c.sigma_b2 = j.at("sigma_b2").get<double>();
    c.sigma_e2 = j.at("sigma_e2").get<double>();
    c.P_s = j.at("P_s").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("scenario JSON: ") + e.what());
  }
  c.validate();
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario_json(ss.str());
}

std::string scenario_to_json(const ScenarioConfig& c) {
  nlohmann::ordered_json j;
  j["M"] = c.M;
  j["G"] = c.G;
  j["N"] = c.N;
  j["N_b"] = c.N_b;
  j["N_e"] = c.N_e;
  j["sigma_b2"] = c.sigma_b2;
  j["sigma_e2"] = c.sigma_e2;
  j["P_s"] = c.P_s;
  j["seed"] = c.seed;
  return j.dump(2);
}

void write_channels_csv(std::ostream& out, const ChannelSet& ch) {
  out << "matrix,row,col,re,im\n";
  auto emit = [&](const char* name, Eigen::Index r, Eigen::Index c, Complex v) {
    out << name << ',' << r << ',' << c << ',' << format_double(v.real()) << ','
        << format_double(v.imag()) << '\n';
  };
  for (Eigen::Index n = 0; n < ch.h_t.size(); ++n) emit("ht", 0, n, ch.h_t(n));
  for (Eigen::Index r = 0; r < ch.H_B.rows(); ++r)
    for (Eigen::Index c = 0; c < ch.H_B.cols(); ++c) emit("HB", r, c, ch.H_B(r, c));
  for (Eigen::Index r = 0; r < ch.H_E.rows(); ++r)
    for (Eigen::Index c = 0; c < ch.H_E.cols(); ++c) emit("HE", r, c, ch.H_E(r, c));
}

ChannelSet read_channels_csv(std::istream& in) {
  struct Entry {
    std::string matrix;
    long row, col;
    Complex value;
  };
  std::string line;
  if (!std::getline(in, line) || line != "matrix,row,col,re,im")
    throw Error("channel CSV: bad or missing header");

  std::vector<Entry> entries;
  long n = 0, nb = 0, ne = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != 5) throw Error("channel CSV: expected 5 fields in '" + line + "'");
    Entry e{f[0], std::stol(f[1]), std::stol(f[2]), {parse_double(f[3]), parse_double(f[4])}};
    if (e.row < 0 || e.col < 0) throw Error("channel CSV: negative index");
    if (e.matrix == "ht") {
      if (e.row != 0) throw Error("channel CSV: ht is a row vector");
      n = std::max(n, e.col + 1);
    } else if (e.matrix == "HB") {
      nb = std::max(nb, e.row + 1);
      n = std::max(n, e.col + 1);
    } else if (e.matrix == "HE") {
      ne = std::max(ne, e.row + 1);
      n = std::max(n, e.col + 1);
    } else {
      throw Error("channel CSV: unknown matrix '" + e.matrix + "'");
    }
    entries.push_back(std::move(e));
  }
  if (static_cast<long>(entries.size()) != n + nb * n + ne * n)
    throw Error("channel CSV: entry count does not match the implied dimensions");

  ChannelSet ch;
  ch.h_t = CVector::Constant(n, Complex(std::nan(""), 0));
  ch.H_B = CMatrix::Constant(nb, n, Complex(std::nan(""), 0));
  ch.H_E = CMatrix::Constant(ne, n, Complex(std::nan(""), 0));
  for (const auto& e : entries) {
    if (e.matrix == "ht")
      ch.h_t(e.col) = e.value;
    else if (e.matrix == "HB")
      ch.H_B(e.row, e.col) = e.value;
    else
      ch.H_E(e.row, e.col) = e.value;
  }
  auto finite = [](const auto& m) { return m.array().isFinite().all(); };
  if (!finite(ch.h_t.real()) || !finite(ch.H_B.real()) || !finite(ch.H_E.real()))
    throw Error("channel CSV: missing or duplicated entries");
  return ch;
}

std::uint64_t channel_hash(const ChannelSet& ch) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const Complex* data, Eigen::Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < static_cast<std::size_t>(count) * sizeof(Complex); ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  };
  feed(ch.h_t.data(), ch.h_t.size());
  feed(ch.H_B.data(), ch.H_B.size());
  feed(ch.H_E.data(), ch.H_E.size());
  return h;
}

}  // namespace irsssm
