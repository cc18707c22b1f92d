// Command-line front end: sweeps, MI-vs-fit curves, CDF reports, channel dumps.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "irsssm/harness.hpp"
#include "irsssm/model.hpp"

namespace {

using namespace irsssm;

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  if (out.empty()) throw Error("empty tag list '" + s + "'");
  return out;
}

template <typename F>
void with_output(const std::string& path, F&& write) {
  if (path == "-") {
    write(std::cout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write(out);
  if (!out) throw Error("write to '" + path + "' failed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS-aided secure spatial modulation: optimizers and experiment sweeps"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Sweep one variable and write per-trial results");
  std::string config_path, beamformers = "da", tpds = "nasr", sweep = "snr", out_path = "results.csv", init = "random";
  double start = -10, stop = 20, step = 5, rho = 0.5, inner_tol = 0.01, fixed_beta = 1.0, mu0 = 0.1;
  int trials = 100, mi_samples = 10000, L = 100, max_outer = 0, threads = 0;
  std::uint64_t seed = 0;
  bool verbose = false, timing = false;
  run->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--beamformer", beamformers, "da|sca|sdr|identity|random, comma list for paired runs");
  run->add_option("--tpd", tpds, "nasr|tasr|fixed:<beta>, comma list for paired runs");
  run->add_option("--sweep", sweep, "snr|N|N_e|beta_grid");
  run->add_option("--start", start);
  run->add_option("--stop", stop);
  run->add_option("--step", step);
  run->add_option("--trials", trials)->check(CLI::PositiveNumber);
  run->add_option("--mi-samples", mi_samples)->check(CLI::PositiveNumber);
  run->add_option("--out", out_path, "Output CSV, '-' for stdout");
  auto* seed_opt = run->add_option("--seed", seed, "Overrides the scenario seed");
  run->add_flag("--verbose", verbose, "Progress on stderr and a channel_hash column");
  run->add_flag("--timing", timing, "Record wall_ms (output is then not reproducible)");
  run->add_option("--threads", threads, "Worker threads, 0 = all cores");
  run->add_option("--rho", rho)->check(CLI::PositiveNumber);
  run->add_option("--L_randomize", L)->check(CLI::PositiveNumber);
  run->add_option("--max_outer", max_outer)->check(CLI::NonNegativeNumber);
  run->add_option("--inner_tol", inner_tol)->check(CLI::PositiveNumber);
  run->add_option("--init", init)->check(CLI::IsMember({"random", "identity"}));
  run->add_option("--fixed_beta", fixed_beta, "β used by a bare 'fixed' tpd");
  run->add_option("--mu0", mu0, "Initial step of the TASR power design")->check(CLI::PositiveNumber);

  // fig2
  auto* fig2 = app.add_subcommand("fig2", "Monte Carlo MI against the fitted NASR curve");
  Fig2Spec f2;
  std::string fig2_out = "mi_fit.csv";
  int fig2_N = 0;
  fig2->add_option("--M", f2.M)->required();
  fig2->add_option("--G", f2.G)->required();
  fig2->add_option("--N", fig2_N, "IRS elements, default max(8, G)");
  fig2->add_option("--draws", f2.draws)->check(CLI::PositiveNumber);
  fig2->add_option("--mi-samples", f2.mi_samples)->check(CLI::PositiveNumber);
  fig2->add_option("--seed", f2.seed);
  fig2->add_option("--out", fig2_out);

  // cdf
  auto* cdf = app.add_subcommand("cdf", "Empirical CDF of sr_bits per method");
  std::string cdf_in, cdf_out = "cdf.csv";
  cdf->add_option("--in", cdf_in)->required()->check(CLI::ExistingFile);
  cdf->add_option("--out", cdf_out);

  // dump-channels
  auto* dump = app.add_subcommand("dump-channels", "Write the channel draw of one (point, trial) as CSV");
  std::string dump_config, dump_out = "-";
  int dump_trial = 0, dump_point = 0;
  dump->add_option("--config", dump_config)->required()->check(CLI::ExistingFile);
  dump->add_option("--point", dump_point)->check(CLI::NonNegativeNumber);
  dump->add_option("--trial", dump_trial)->check(CLI::NonNegativeNumber);
  dump->add_option("--out", dump_out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig cfg = load_scenario(config_path);
      if (*seed_opt) cfg.seed = seed;

      SweepSpec spec;
      spec.variable = parse_sweep_variable(sweep);
      spec.grid = make_grid(start, stop, step);
      spec.trials = trials;
      spec.mi_samples = mi_samples;
      spec.timing = timing;
      spec.verbose = verbose;
      spec.threads = threads;
      for (const auto& b : split_commas(beamformers))
        for (const auto& t : split_commas(tpds)) {
          Pipeline p;
          p.beamformer = parse_beamformer(b);
          p.tpd = parse_tpd(t == "fixed" ? "fixed:" + format_number(fixed_beta) : t);
          p.tpd.mu0 = mu0;
          p.bf.rho = rho;
          p.bf.L_randomize = L;
          p.bf.max_outer = max_outer;
          p.bf.inner_tol = inner_tol;
          p.bf.init = init == "identity" ? InitMode::identity : InitMode::random;
          spec.pipelines.push_back(std::move(p));
        }
      const auto rows = run_sweep(spec, cfg);
      with_output(out_path, [&](std::ostream& o) { write_rows_csv(o, rows, verbose); });
    } else if (*fig2) {
      f2.N = fig2_N > 0 ? fig2_N : std::max(8, f2.G);
      const auto pts = fig2_curve(f2);
      with_output(fig2_out, [&](std::ostream& o) { write_fig2_csv(o, pts); });
    } else if (*cdf) {
      std::ifstream in(cdf_in);
      const auto points = cdf_report(read_rows_csv(in));
      with_output(cdf_out, [&](std::ostream& o) { write_cdf_csv(o, points); });
    } else if (*dump) {
      const ScenarioConfig cfg = load_scenario(dump_config);
      RandomStream rng = RandomStream::derive(cfg.seed, 2 * static_cast<std::uint64_t>(dump_point),
                                              static_cast<std::uint64_t>(dump_trial));
      const ChannelSet ch = gen_channels(cfg, rng);
      with_output(dump_out, [&](std::ostream& o) { write_channels_csv(o, ch); });
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
