#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "irsssm/beamform.hpp"
#include "irsssm/power.hpp"
#include "irsssm/types.hpp"

namespace irsssm {

enum class BeamformerKind { da, sca, sdr, identity, random };

BeamformerKind parse_beamformer(const std::string& tag);
std::string beamformer_tag(BeamformerKind kind);

/// "nasr", "tasr", "fixed:<beta>" (bare "fixed" means β = 1).
TpdOptions parse_tpd(const std::string& tag);
std::string tpd_tag(const TpdOptions& opts);

struct Pipeline {
  BeamformerKind beamformer = BeamformerKind::da;
  TpdOptions tpd;
  BeamformOptions bf;
  int max_rounds = 20;
  double tol = 1e-4;
  bool tpd_first = false;

  std::string tag() const { return beamformer_tag(beamformer) + "+" + tpd_tag(tpd); }
  /// TASR for the sdr/tasr pairing, NASR otherwise.
  bool uses_tasr() const { return beamformer == BeamformerKind::sdr && tpd.kind == TpdKind::tasr; }
};

struct AlternatingResult {
  PhaseProfile theta;
  PowerFactor beta;
  std::vector<double> trace;  // accepted objective per round, starting with the initial point
  int rounds = 0;
  int inner_iterations = 0;
  bool flagged = false;  // a sub-optimizer threw or reported failure
};

/// Alternates the beamformer (β fixed) and the power design (θ fixed); a round
/// is kept only if it does not lower the objective.
AlternatingResult alternate_optimize(const Link& link, const Pipeline& pipe);

struct ExperimentRow {
  double snr_db = 0.0;
  std::string method;
  int trial = 0;
  double sr_bits = 0.0;
  double nasr_bits = 0.0;
  double tasr_bits = 0.0;
  double beta = 1.0;
  int iterations = 0;  // -1 marks a failed trial
  double wall_ms = 0.0;
  std::uint64_t channel_hash = 0;
};

enum class SweepVariable { snr, N, N_e, beta_grid };

SweepVariable parse_sweep_variable(const std::string& name);

struct SweepSpec {
  SweepVariable variable = SweepVariable::snr;
  std::vector<double> grid;
  int trials = 1;
  std::vector<Pipeline> pipelines;  // compared on identical channel draws
  int mi_samples = 10000;
  bool timing = false;   // record wall_ms; off keeps output reproducible
  bool verbose = false;  // progress on stderr
  int threads = 0;       // 0 → hardware concurrency

  void validate() const;
};

/// Grid start, start+step, ... up to stop (inclusive within half a step).
std::vector<double> make_grid(double start, double stop, double step);

/// Runs every pipeline on every (point, trial); rows come back in
/// (point, trial, pipeline) order whatever the thread schedule.
std::vector<ExperimentRow> run_sweep(const SweepSpec& spec, const ScenarioConfig& config);

void write_rows_csv(std::ostream& out, const std::vector<ExperimentRow>& rows, bool with_hash);
std::vector<ExperimentRow> read_rows_csv(std::istream& in);

struct CdfPoint {
  std::string method;
  double sr_bits;
  double cdf;
};

/// Empirical CDF of sr_bits per method, methods in first-appearance order.
std::vector<CdfPoint> cdf_report(const std::vector<ExperimentRow>& rows);
void write_cdf_csv(std::ostream& out, const std::vector<CdfPoint>& cdf);

struct Fig2Point {
  double snr_db;
  double gamma_bar;  // mean over draws
  double mi_bits;    // mean over draws
  double mi_stderr;
  double nasr_bits;  // mean of nasr_component(γ̄) over draws
};

struct Fig2Spec {
  int M = 2;
  int G = 4;
  int N = 8;
  std::vector<double> snr_db = make_grid(-10.0, 30.0, 5.0);
  int draws = 20;
  int mi_samples = 10000;
  std::uint64_t seed = 1;
};

/// MI against the fitted curve along an SNR grid, identity reflection.
std::vector<Fig2Point> fig2_curve(const Fig2Spec& spec);
void write_fig2_csv(std::ostream& out, const std::vector<Fig2Point>& pts);

/// Shortest round-trip decimal form.
std::string format_number(double v);

}  // namespace irsssm
