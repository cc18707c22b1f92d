#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "irsssm/harness.hpp"
#include "oracles.hpp"

using namespace irsssm;

TEST_CASE("tag parsing") {
  CHECK(parse_beamformer("sdr") == BeamformerKind::sdr);
  CHECK_THROWS_AS(parse_beamformer("foo"), Error);
  CHECK(parse_tpd("nasr").kind == TpdKind::nasr);
  CHECK(parse_tpd("fixed:0.5").fixed_beta == 0.5);
  CHECK(parse_tpd("fixed").fixed_beta == 1.0);
  CHECK_THROWS_AS(parse_tpd("fixed:2"), Error);
  CHECK_THROWS_AS(parse_tpd("fixed:abc"), Error);
  CHECK_THROWS_AS(parse_tpd("max"), Error);
  Pipeline p;
  p.beamformer = BeamformerKind::sdr;
  p.tpd = parse_tpd("tasr");
  CHECK(p.tag() == "sdr+tasr");
  CHECK(p.uses_tasr());
  CHECK(parse_sweep_variable("N_e") == SweepVariable::N_e);
  CHECK_THROWS_AS(parse_sweep_variable("M"), Error);
  CHECK(make_grid(-10, 20, 5).size() == 7);
  CHECK(make_grid(0, 1, 0.1).size() == 11);
  CHECK_THROWS_AS(make_grid(0, 1, 0), Error);
}

TEST_CASE("alternate_optimize") {
  const ScenarioConfig c = oracle::small_config(4, 4, 8);

  SUBCASE("identity with fixed power returns its inputs after one round") {
    const Link l = oracle::random_link(c, 1, 0);
    Pipeline p;
    p.beamformer = BeamformerKind::identity;
    p.tpd = parse_tpd("fixed:1");
    const AlternatingResult r = alternate_optimize(l, p);
    CHECK(r.rounds == 1);
    CHECK(r.beta.beta() == 1.0);
    CHECK(r.theta.theta == CVector::Ones(8));
  }
  SUBCASE("objective trace is non-decreasing") {
    std::vector<double> gaps;
    for (int k = 0; k < 20; ++k) {
      const Link l = oracle::random_link(c, 2, k);
      Pipeline p;
      p.bf.seed = k;
      const AlternatingResult r = alternate_optimize(l, p);
      CHECK(!r.flagged);
      CHECK(r.rounds <= 20);
      for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1] - 1e-3);
      CHECK(r.trace.back() == doctest::Approx(nasr(l, r.theta, r.beta, coeff_lookup(4, 4))));

      Pipeline q = p;
      q.tpd_first = true;
      gaps.push_back(std::abs(alternate_optimize(l, q).trace.back() - r.trace.back()));
    }
    std::nth_element(gaps.begin(), gaps.begin() + 10, gaps.end());
    MESSAGE("median |objective(TPD first) - objective(beamformer first)| = " << gaps[10] << " bits");
  }
  SUBCASE("sdr with tasr power tracks TASR") {
    const Link l = oracle::random_link(c, 3, 0);
    Pipeline p;
    p.beamformer = BeamformerKind::sdr;
    p.tpd = parse_tpd("tasr");
    const AlternatingResult r = alternate_optimize(l, p);
    CHECK(r.trace.back() == doctest::Approx(tasr(l, r.theta, r.beta)));
  }
}

namespace {

SweepSpec small_spec() {
  SweepSpec s;
  s.grid = {0.0, 10.0};
  s.trials = 2;
  s.mi_samples = 200;
  Pipeline p;
  p.beamformer = BeamformerKind::identity;
  p.tpd = parse_tpd("fixed:1");
  s.pipelines = {p};
  return s;
}

std::string to_csv(const std::vector<ExperimentRow>& rows, bool hash) {
  std::ostringstream o;
  write_rows_csv(o, rows, hash);
  return o.str();
}

}  // namespace

TEST_CASE("run_sweep") {
  ScenarioConfig c = oracle::small_config(4, 4, 8);
  c.seed = 5;

  SUBCASE("row count and order") {
    const auto rows = run_sweep(small_spec(), c);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].snr_db == 0.0);
    CHECK(rows[1].trial == 1);
    CHECK(rows[2].snr_db == doctest::Approx(10.0));
    for (const auto& r : rows) {
      CHECK(r.sr_bits >= 0.0);
      CHECK(std::isfinite(r.tasr_bits));
      CHECK(r.wall_ms == 0.0);
      CHECK(r.method == "identity+fixed:1");
    }
    const std::string csv = to_csv(rows, false);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
    CHECK(csv.rfind("snr_db,method,trial,sr_bits,nasr_bits,tasr_bits,beta,iterations,wall_ms\n", 0) == 0);
  }
  SUBCASE("same seed, same bytes, whatever the thread count") {
    SweepSpec s = small_spec();
    Pipeline da;
    s.pipelines.push_back(da);
    s.threads = 1;
    const std::string a = to_csv(run_sweep(s, c), true);
    s.threads = 3;
    const std::string b = to_csv(run_sweep(s, c), true);
    CHECK(a == b);
    c.seed = 6;
    CHECK(to_csv(run_sweep(s, c), true) != a);
  }
  SUBCASE("methods share channel draws") {
    SweepSpec s = small_spec();
    for (const char* b : {"da", "sdr", "random"}) {
      Pipeline p;
      p.beamformer = parse_beamformer(b);
      s.pipelines.push_back(p);
    }
    const auto rows = run_sweep(s, c);
    REQUIRE(rows.size() == 16);
    for (std::size_t i = 0; i < rows.size(); i += 4) {
      std::set<std::uint64_t> hashes;
      for (std::size_t j = i; j < i + 4; ++j) hashes.insert(rows[j].channel_hash);
      CHECK(hashes.size() == 1);
    }
    CHECK(rows[0].channel_hash != rows[4].channel_hash);
  }
  SUBCASE("N, N_e and β sweeps") {
    SweepSpec s = small_spec();
    s.variable = SweepVariable::N;
    s.grid = {4, 8};
    auto rows = run_sweep(s, c);
    CHECK(rows[0].method == "identity+fixed:1:N=4");
    CHECK(rows[2].method == "identity+fixed:1:N=8");
    s.grid = {6};
    CHECK_THROWS_AS(run_sweep(s, c), Error);

    s.variable = SweepVariable::beta_grid;
    s.grid = {0.25, 0.5};
    rows = run_sweep(s, c);
    CHECK(rows[0].beta == 0.25);
    CHECK(rows[3].beta == 0.5);
    CHECK(rows[3].method == "identity+fixed:0.5");
  }
  SUBCASE("invalid specs") {
    SweepSpec s = small_spec();
    s.grid.clear();
    CHECK_THROWS_AS(run_sweep(s, c), Error);
    s = small_spec();
    s.trials = 0;
    CHECK_THROWS_AS(run_sweep(s, c), Error);
  }
}

TEST_CASE("results CSV round trip") {
  ExperimentRow r;
  r.snr_db = -7.5;
  r.method = "da+fixed:0.3";
  r.trial = 12;
  r.sr_bits = 0.1 + 0.2;
  r.nasr_bits = -1e-300;
  r.tasr_bits = 3.25;
  r.beta = 0.3;
  r.iterations = 41;
  r.channel_hash = 0xdeadbeefcafe1234ULL;
  std::stringstream ss(to_csv({r, r}, true));
  const auto back = read_rows_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].sr_bits == r.sr_bits);
  CHECK(back[0].nasr_bits == r.nasr_bits);
  CHECK(back[1].method == r.method);
  CHECK(back[1].channel_hash == r.channel_hash);
  std::stringstream bad("a,b\n");
  CHECK_THROWS_AS(read_rows_csv(bad), Error);
}

namespace {

std::vector<ExperimentRow> rows_with(const std::string& method, const std::vector<double>& sr) {
  std::vector<ExperimentRow> rows;
  for (std::size_t i = 0; i < sr.size(); ++i) {
    ExperimentRow r;
    r.method = method;
    r.trial = static_cast<int>(i);
    r.sr_bits = sr[i];
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("cdf_report") {
  SUBCASE("constant rates give a single step") {
    const auto cdf = cdf_report(rows_with("a", std::vector<double>(12, 0.7)));
    REQUIRE(cdf.size() == 1);
    CHECK(cdf[0].sr_bits == 0.7);
    CHECK(cdf[0].cdf == 1.0);
  }
  SUBCASE("monotone, ends at one, per method") {
    RandomStream rng(1);
    std::vector<double> a, b;
    for (int i = 0; i < 30; ++i) a.push_back(rng.uniform());
    for (int i = 0; i < 15; ++i) b.push_back(2 * rng.uniform());
    auto rows = rows_with("b", b);
    const auto ra = rows_with("a", a);
    rows.insert(rows.end(), ra.begin(), ra.end());
    const auto cdf = cdf_report(rows);
    CHECK(cdf.front().method == "b");
    CHECK(cdf.back().method == "a");
    for (std::size_t i = 1; i < cdf.size(); ++i)
      if (cdf[i].method == cdf[i - 1].method) {
        CHECK(cdf[i].sr_bits > cdf[i - 1].sr_bits);
        CHECK(cdf[i].cdf > cdf[i - 1].cdf);
      }
    CHECK(cdf.back().cdf == 1.0);
    CHECK(cdf[14].cdf == 1.0);
  }
  SUBCASE("uniform rates stay within the DKW band") {
    RandomStream rng(2);
    std::vector<double> u;
    for (int i = 0; i < 100; ++i) u.push_back(rng.uniform());
    for (const auto& p : cdf_report(rows_with("u", u))) CHECK(std::abs(p.cdf - p.sr_bits) <= 0.1);
  }
  SUBCASE("too few rows") {
    CHECK_THROWS_AS(cdf_report(rows_with("a", std::vector<double>(9, 1.0))), Error);
    CHECK_THROWS_AS(cdf_report({}), Error);
  }
}

TEST_CASE("fig2 output") {
  Fig2Spec s;
  s.M = 4;
  s.G = 4;
  s.draws = 2;
  s.mi_samples = 300;
  s.snr_db = {-10.0, 0.0, 10.0};
  const auto pts = fig2_curve(s);
  REQUIRE(pts.size() == 3);
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK(pts[i].gamma_bar == doctest::Approx(10.0 * pts[i - 1].gamma_bar));
  std::ostringstream o;
  write_fig2_csv(o, pts);
  CHECK(o.str().rfind("snr_db,gamma_bar,mi_bits,mi_stderr,nasr_bits\n", 0) == 0);
  s.G = 3;
  CHECK_THROWS_AS(fig2_curve(s), Error);
}

TEST_CASE("fig2 BPSK fit tracks the Monte Carlo MI" * doctest::may_fail()) {
  // Known to miss: the (2,4) fitted curve sits about 0.45 bits under the
  // simulated MI near 0 dB. Kept visible rather than loosened.
  Fig2Spec s;
  s.M = 2;
  s.G = 4;
  s.N = 8;
  s.draws = 20;
  s.mi_samples = 10000;
  double worst = 0.0;
  for (const auto& p : fig2_curve(s)) worst = std::max(worst, std::abs(p.mi_bits - p.nasr_bits));
  MESSAGE("max |MI - fit| = " << worst);
  CHECK(worst <= 0.15);
}
