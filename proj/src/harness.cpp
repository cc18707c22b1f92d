#include "irsssm/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iostream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "irsssm/model.hpp"

namespace irsssm {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

BeamformerKind parse_beamformer(const std::string& tag) {
  if (tag == "da") return BeamformerKind::da;
  if (tag == "sca") return BeamformerKind::sca;
  if (tag == "sdr") return BeamformerKind::sdr;
  if (tag == "identity") return BeamformerKind::identity;
  if (tag == "random") return BeamformerKind::random;
  throw Error("unknown beamformer '" + tag + "' (expected da, sca, sdr, identity, random)");
}

std::string beamformer_tag(BeamformerKind kind) {
  switch (kind) {
    case BeamformerKind::da: return "da";
    case BeamformerKind::sca: return "sca";
    case BeamformerKind::sdr: return "sdr";
    case BeamformerKind::identity: return "identity";
    case BeamformerKind::random: return "random";
  }
  return "?";
}

TpdOptions parse_tpd(const std::string& tag) {
  TpdOptions o;
  if (tag == "nasr") {
    o.kind = TpdKind::nasr;
  } else if (tag == "tasr") {
    o.kind = TpdKind::tasr;
  } else if (tag == "fixed" || tag.rfind("fixed:", 0) == 0) {
    o.kind = TpdKind::fixed;
    if (tag.size() > 6) {
      const std::string v = tag.substr(6);
      auto res = std::from_chars(v.data(), v.data() + v.size(), o.fixed_beta);
      if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw Error("malformed fixed power tag '" + tag + "'");
    }
    PowerFactor check(o.fixed_beta);
    (void)check;
  } else {
    throw Error("unknown tpd '" + tag + "' (expected nasr, tasr, fixed:<beta>)");
  }
  return o;
}

std::string tpd_tag(const TpdOptions& opts) {
  switch (opts.kind) {
    case TpdKind::nasr: return "nasr";
    case TpdKind::tasr: return "tasr";
    case TpdKind::fixed: return "fixed:" + format_number(opts.fixed_beta);
  }
  return "?";
}

// ---------------------------------------------------------------------------

namespace {

double pipeline_objective(const Link& link, const Pipeline& pipe, const PhaseProfile& theta, PowerFactor beta) {
  if (pipe.uses_tasr()) return tasr(link, theta, beta);
  return nasr(link, theta, beta, pipe.bf.coeffs ? *pipe.bf.coeffs : coeff_lookup(link.config.M, link.config.G));
}

BeamformResult run_beamformer(const Link& link, const Pipeline& pipe, PowerFactor beta,
                              const PhaseProfile& start) {
  BeamformOptions o = pipe.bf;
  switch (pipe.beamformer) {
    case BeamformerKind::da:
      o.initial = start;
      return max_nasr_da(link, beta, o);
    case BeamformerKind::sca:
      o.initial = start;
      return max_nasr_sca(link, beta, o);
    case BeamformerKind::sdr: return max_tasr_sdr(link, beta, o);
    case BeamformerKind::identity:
    case BeamformerKind::random: {
      BeamformResult r;
      r.theta = start;
      r.converged = true;
      return r;
    }
  }
  throw Error("unknown beamformer");
}

PhaseProfile starting_profile(const Link& link, const Pipeline& pipe) {
  if (pipe.bf.initial) return project_unit_modulus(pipe.bf.initial->theta);
  if (pipe.beamformer == BeamformerKind::identity || pipe.bf.init == InitMode::identity)
    return baseline_identity(link.config.N);
  RandomStream rng = RandomStream::derive(pipe.bf.seed, 0x1A17);
  return baseline_random(link.config.N, rng);
}

}  // namespace

AlternatingResult alternate_optimize(const Link& link, const Pipeline& pipe) {
  AlternatingResult res;
  res.theta = starting_profile(link, pipe);
  res.beta = PowerFactor(pipe.tpd.kind == TpdKind::fixed ? pipe.tpd.fixed_beta : 1.0);
  double F = pipeline_objective(link, pipe, res.theta, res.beta);
  res.trace.push_back(F);

  TpdOptions tpd = pipe.tpd;
  if (!tpd.coeffs && pipe.bf.coeffs) tpd.coeffs = pipe.bf.coeffs;

  for (int round = 1; round <= pipe.max_rounds; ++round) {
    PhaseProfile theta = res.theta;
    PowerFactor beta = res.beta;
    try {
      auto beam_step = [&] {
        const BeamformResult br = run_beamformer(link, pipe, beta, theta);
        theta = br.theta;
        res.inner_iterations += br.iterations;
      };
      auto power_step = [&] {
        const TpdResult tr = run_tpd(link, theta, tpd);
        beta = tr.beta;
        res.inner_iterations += tr.iterations;
      };
      if (pipe.tpd_first) {
        power_step();
        beam_step();
      } else {
        beam_step();
        power_step();
      }
    } catch (const Error&) {
      res.flagged = true;
      break;
    }
    res.rounds = round;
    const double F_new = pipeline_objective(link, pipe, theta, beta);
    if (!(F_new >= F)) break;
    const double gain = F_new - F;
    res.theta = theta;
    res.beta = beta;
    F = F_new;
    res.trace.push_back(F);
    if (gain <= pipe.tol) break;
  }
  return res;
}

// ---------------------------------------------------------------------------

SweepVariable parse_sweep_variable(const std::string& name) {
  if (name == "snr") return SweepVariable::snr;
  if (name == "N") return SweepVariable::N;
  if (name == "N_e") return SweepVariable::N_e;
  if (name == "beta_grid" || name == "beta") return SweepVariable::beta_grid;
  throw Error("unknown sweep variable '" + name + "' (expected snr, N, N_e, beta_grid)");
}

void SweepSpec::validate() const {
  if (grid.empty()) throw Error("sweep grid is empty");
  if (trials < 1) throw Error("trials must be >= 1");
  if (pipelines.empty()) throw Error("no pipelines to run");
  if (mi_samples < 1) throw Error("mi-samples must be >= 1");
  for (double v : grid) {
    if (!std::isfinite(v)) throw Error("sweep grid values must be finite");
    if ((variable == SweepVariable::N || variable == SweepVariable::N_e) && (v < 1 || v != std::floor(v)))
      throw Error("N and N_e sweeps need positive integer grid values");
    if (variable == SweepVariable::beta_grid) PowerFactor check(v);
  }
}

std::vector<double> make_grid(double start, double stop, double step) {
  if (!(step > 0.0)) throw Error("grid step must be positive");
  if (stop < start) throw Error("grid stop must not be below start");
  std::vector<double> g;
  const long n = static_cast<long>(std::floor((stop - start) / step + 0.5));
  for (long i = 0; i <= n; ++i) g.push_back(start + static_cast<double>(i) * step);
  return g;
}

namespace {

struct PointSetup {
  ScenarioConfig config;
  std::vector<Pipeline> pipelines;
  std::string suffix;
};

PointSetup setup_point(const SweepSpec& spec, const ScenarioConfig& base, double v) {
  PointSetup p{base, spec.pipelines, ""};
  switch (spec.variable) {
    case SweepVariable::snr:
      p.config.sigma_b2 = p.config.sigma_e2 = base.P_s / std::pow(10.0, v / 10.0);
      break;
    case SweepVariable::N:
      p.config.N = static_cast<int>(v);
      p.suffix = ":N=" + format_number(v);
      break;
    case SweepVariable::N_e:
      p.config.N_e = static_cast<int>(v);
      p.suffix = ":N_e=" + format_number(v);
      break;
    case SweepVariable::beta_grid:
      for (auto& pipe : p.pipelines) {
        pipe.tpd.kind = TpdKind::fixed;
        pipe.tpd.fixed_beta = v;
      }
      break;
  }
  p.config.validate();
  return p;
}

double snr_of(const ScenarioConfig& c) { return 10.0 * std::log10(c.P_s / c.sigma_b2); }

std::vector<ExperimentRow> run_trial(const SweepSpec& spec, const PointSetup& p, std::uint64_t seed,
                                     std::size_t point, int trial) {
  RandomStream chan_rng = RandomStream::derive(seed, 2 * point, static_cast<std::uint64_t>(trial));
  const ChannelSet ch = gen_channels(p.config, chan_rng);
  const std::uint64_t hash = channel_hash(ch);
  const Link link(p.config, effective_channels(ch));
  const std::uint64_t bf_seed = RandomStream::derive(seed, 2 * point + 1, static_cast<std::uint64_t>(trial)).next_u64();
  const std::uint64_t mi_seed = RandomStream::derive(bf_seed, 0x3C1).next_u64();

  std::vector<FitCoefficients> coeffs;
  try {
    coeffs.push_back(coeff_lookup(p.config.M, p.config.G));
  } catch (const Error&) {
  }

  std::vector<ExperimentRow> rows;
  for (const Pipeline& base_pipe : p.pipelines) {
    Pipeline pipe = base_pipe;
    pipe.bf.seed = bf_seed;
    ExperimentRow row;
    row.snr_db = snr_of(p.config);
    row.method = pipe.tag() + p.suffix;
    row.trial = trial;
    row.channel_hash = hash;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const AlternatingResult ar = alternate_optimize(link, pipe);
      RandomStream mi_rng(mi_seed);
      row.sr_bits = secrecy_rate_mc(link, ar.theta, ar.beta, spec.mi_samples, mi_rng).sr_bits;
      const FitCoefficients* c = pipe.bf.coeffs ? &*pipe.bf.coeffs : (coeffs.empty() ? nullptr : &coeffs[0]);
      row.nasr_bits = c ? nasr(link, ar.theta, ar.beta, *c) : std::nan("");
      row.tasr_bits = tasr(link, ar.theta, ar.beta);
      row.beta = ar.beta.beta();
      row.iterations = ar.flagged ? -1 : ar.inner_iterations;
      if (ar.flagged) std::cerr << "warning: " << row.method << " trial " << trial << " hit a sub-optimizer failure\n";
    } catch (const Error& e) {
      std::cerr << "warning: " << row.method << " trial " << trial << " failed: " << e.what() << '\n';
      row.iterations = -1;
      row.sr_bits = row.nasr_bits = row.tasr_bits = 0.0;
    }
    if (spec.timing)
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<ExperimentRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& config) {
  spec.validate();
  config.validate();

  std::vector<PointSetup> points;
  for (double v : spec.grid) points.push_back(setup_point(spec, config, v));

  const std::size_t n_tasks = points.size() * static_cast<std::size_t>(spec.trials);
  std::vector<std::vector<ExperimentRow>> results(n_tasks);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;

  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= n_tasks) return;
      const std::size_t point = task / spec.trials;
      const int trial = static_cast<int>(task % spec.trials);
      results[task] = run_trial(spec, points[point], config.seed, point, trial);
      if (spec.verbose) {
        std::lock_guard lock(log_mutex);
        std::cerr << "point " << point + 1 << "/" << points.size() << " trial " << trial + 1 << "/"
                  << spec.trials << " done\n";
      }
    }
  };

  unsigned n_threads = spec.threads > 0 ? static_cast<unsigned>(spec.threads) : std::thread::hardware_concurrency();
  n_threads = std::max(1u, std::min<unsigned>(n_threads, static_cast<unsigned>(n_tasks)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  std::vector<ExperimentRow> rows;
  for (auto& r : results) std::move(r.begin(), r.end(), std::back_inserter(rows));
  return rows;
}

// ---------------------------------------------------------------------------

void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows, bool with_hash) {
  out << "snr_db,method,trial,sr_bits,nasr_bits,tasr_bits,beta,iterations,wall_ms";
  if (with_hash) out << ",channel_hash";
  out << '\n';
  for (const auto& r : rows) {
    out << format_number(r.snr_db) << ',' << r.method << ',' << r.trial << ',' << format_number(r.sr_bits) << ','
        << format_number(r.nasr_bits) << ',' << format_number(r.tasr_bits) << ',' << format_number(r.beta) << ','
        << r.iterations << ',' << format_number(r.wall_ms);
    if (with_hash) {
      std::ostringstream h;
      h << std::hex << r.channel_hash;
      out << ',' << h.str();
    }
    out << '\n';
  }
}

std::vector<ExperimentRow> read_rows_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("snr_db,method,trial,sr_bits,nasr_bits,tasr_bits,beta,iterations,wall_ms", 0) != 0)
    throw Error("results CSV: bad or missing header");
  const bool with_hash = line.find(",channel_hash") != std::string::npos;
  const std::size_t n_fields = with_hash ? 10 : 9;

  std::vector<ExperimentRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string tok;
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() != n_fields) throw Error("results CSV: wrong field count in '" + line + "'");
    try {
      ExperimentRow r;
      r.snr_db = std::stod(f[0]);
      r.method = f[1];
      r.trial = std::stoi(f[2]);
      r.sr_bits = std::stod(f[3]);
      r.nasr_bits = std::stod(f[4]);
      r.tasr_bits = std::stod(f[5]);
      r.beta = std::stod(f[6]);
      r.iterations = std::stoi(f[7]);
      r.wall_ms = std::stod(f[8]);
      if (with_hash) r.channel_hash = std::stoull(f[9], nullptr, 16);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error("results CSV: malformed row '" + line + "'");
    }
  }
  return rows;
}

std::vector<CdfPoint> cdf_report(const std::vector<ExperimentRow>& rows) {
  std::vector<std::string> order;
  std::vector<std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find(order.begin(), order.end(), r.method);
    if (it == order.end()) {
      order.push_back(r.method);
      values.emplace_back();
      it = order.end() - 1;
    }
    values[it - order.begin()].push_back(r.sr_bits);
  }
  if (order.empty()) throw Error("cdf_report: no rows");

  std::vector<CdfPoint> out;
  for (std::size_t m = 0; m < order.size(); ++m) {
    auto& v = values[m];
    if (v.size() < 10)
      throw Error("cdf_report: method '" + order[m] + "' has " + std::to_string(v.size()) + " rows, need >= 10");
    std::sort(v.begin(), v.end());
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      // Ties collapse onto the last index so the CDF is right-continuous.
      if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
      out.push_back({order[m], v[i], static_cast<double>(i + 1) / n});
    }
  }
  return out;
}

void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& cdf) {
  out << "method,sr_bits,cdf\n";
  for (const auto& p : cdf) out << p.method << ',' << format_number(p.sr_bits) << ',' << format_number(p.cdf) << '\n';
}

// ---------------------------------------------------------------------------

std::vector<Fig2Point> fig2_curve(const Fig2Spec& spec) {
  if (spec.draws < 1) throw Error("fig2: draws must be >= 1");
  ScenarioConfig cfg;
  cfg.M = spec.M;
  cfg.G = spec.G;
  cfg.N = spec.N;
  cfg.P_s = 1.0;
  cfg.seed = spec.seed;
  cfg.validate();
  const FitCoefficients coeffs = coeff_lookup(spec.M, spec.G);
  const SymbolSet syms = build_symbol_set(cfg);
  const double K2 = static_cast<double>(syms.size()) * syms.size();
  const PhaseProfile theta = baseline_identity(cfg.N);

  std::vector<Fig2Point> out;
  for (std::size_t p = 0; p < spec.snr_db.size(); ++p) {
    const double sigma2 = cfg.P_s / std::pow(10.0, spec.snr_db[p] / 10.0);
    Fig2Point pt{spec.snr_db[p], 0.0, 0.0, 0.0, 0.0};
    double var_sum = 0.0;
    for (int d = 0; d < spec.draws; ++d) {
      // Same channel draw d at every SNR point.
      RandomStream chan_rng = RandomStream::derive(spec.seed, 0xF16, static_cast<std::uint64_t>(d));
      const ChannelSet ch = gen_channels(cfg, chan_rng);
      const CMatrix Hp = effective_channels(ch).H_Bp;
      const double g = gamma_stat(Hp, theta, cfg.P_s, sigma2, syms.D_agg) / K2;
      RandomStream mi_rng = RandomStream::derive(spec.seed, 0xF17 + p, static_cast<std::uint64_t>(d));
      const MiEstimate mi = mi_monte_carlo(Hp, theta, cfg.P_s, sigma2, syms, spec.mi_samples, mi_rng);
      pt.gamma_bar += g;
      pt.mi_bits += mi.value_bits;
      pt.nasr_bits += nasr_component(g, coeffs);
      var_sum += mi.std_error_bits * mi.std_error_bits;
    }
    pt.gamma_bar /= spec.draws;
    pt.mi_bits /= spec.draws;
    pt.nasr_bits /= spec.draws;
    pt.mi_stderr = std::sqrt(var_sum) / spec.draws;
    out.push_back(pt);
  }
  return out;
}

void write_fig2_csv(std::ostream& out, const std::vector<Fig2Point>& pts) {
  out << "snr_db,gamma_bar,mi_bits,mi_stderr,nasr_bits\n";
  for (const auto& p : pts)
    out << format_number(p.snr_db) << ',' << format_number(p.gamma_bar) << ',' << format_number(p.mi_bits) << ','
        << format_number(p.mi_stderr) << ',' << format_number(p.nasr_bits) << '\n';
}

}  // namespace irsssm
