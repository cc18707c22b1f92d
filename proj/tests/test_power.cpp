#include <doctest.h>

#include "irsssm/beamform.hpp"
#include "irsssm/power.hpp"
#include "oracles.hpp"

using namespace irsssm;

namespace {

struct Instance {
  Link link;
  PhaseProfile theta;
};

Instance instance(std::uint64_t seed, int k, double snr_db = 10.0) {
  Link l = oracle::random_link(oracle::small_config(4, 4, 8, snr_db), seed, k);
  RandomStream rng(seed + k);
  PhaseProfile t = baseline_random(8, rng);
  return {std::move(l), std::move(t)};
}

double grid_max(const std::function<double(double)>& f) {
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) best = std::max(best, f(std::max(1e-4, i / 1000.0)));
  return best;
}

}  // namespace

TEST_CASE("max_nasr_tpd") {
  const FitCoefficients co = coeff_lookup(4, 4);
  SUBCASE("fixed point, optimality against β = 1 and the grid, monotone trace") {
    int interior = 0;
    for (int k = 0; k < 20; ++k) {
      Instance in = instance(10, k);
      // Optimized beams make Bob dominant, which gives interior optima.
      BeamformOptions o;
      o.seed = k;
      in.theta = max_nasr_da(in.link, PowerFactor(1.0), o).theta;
      const TpdResult r = max_nasr_tpd(in.link, in.theta);
      const double b = r.beta.beta();
      CHECK(b > 0.0);
      CHECK(b <= 1.0);
      CHECK(r.objective_bits == doctest::Approx(nasr(in.link, in.theta, r.beta, co)));
      CHECK(r.objective_bits >= nasr(in.link, in.theta, PowerFactor(1.0 - 1e-6), co) - 1e-3);
      for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1] - 1e-6);
      const double g = grid_max([&](double x) { return nasr(in.link, in.theta, PowerFactor(x), co); });
      CHECK(r.objective_bits >= g - 0.05);
      if (b < 1.0 && b > 1e-3) {
        ++interior;
        CHECK(std::abs(nasr_tpd_update(in.link, in.theta, r.beta, co) - b) <= 1e-6);
        CHECK(std::abs(nasr_tpd_residual(in.link, in.theta, r.beta, co)) <= 1e-6);
        const double h = 1e-5;
        const double dF = (nasr(in.link, in.theta, PowerFactor(b + h), co) -
                           nasr(in.link, in.theta, PowerFactor(b - h), co)) / (2 * h);
        CHECK(std::abs(dF) <= 1e-4);
      }
    }
    CHECK(interior >= 10);
  }
  SUBCASE("tiny power budget clamps to β = 1") {
    // With a deaf Eve and γ̄ near 0 the NASR is increasing in β, so the
    // unconstrained stationary point lies beyond β = 1.
    Instance in = instance(11, 0);
    in.link.config.P_s = 1e-9;
    in.link.R_E.setZero();
    const TpdResult r = max_nasr_tpd(in.link, in.theta);
    CHECK(r.beta.beta() == 1.0);
    TpdOptions o;
    o.initial_beta = 0.3;
    CHECK(max_nasr_tpd(in.link, in.theta, o).beta.beta() == 1.0);
  }
  SUBCASE("zero channels are degenerate") {
    Instance in = instance(12, 0);
    in.link.R_B.setZero();
    in.link.R_E.setZero();
    const TpdResult r = max_nasr_tpd(in.link, in.theta);
    CHECK(r.degenerate);
    CHECK(r.beta.beta() == 1.0);
  }
}

TEST_CASE("tasr_beta_gradient") {
  for (int k = 0; k < 20; ++k) {
    const Instance in = instance(20, k, -5.0 + k);
    RandomStream rng(k);
    const double b = 0.1 + 0.85 * rng.uniform();
    const double h = 1e-5;
    const double fd = (tasr(in.link, in.theta, PowerFactor(b + h)) - tasr(in.link, in.theta, PowerFactor(b - h))) / (2 * h);
    const double g = tasr_beta_gradient(in.link, in.theta, PowerFactor(b));
    CAPTURE(fd);
    CHECK(std::abs(g - fd) <= 1e-3 * std::abs(fd));
  }
  Instance same = instance(21, 0);
  same.link.chans.H_Ep = same.link.chans.H_Bp;
  CHECK(tasr_beta_gradient(same.link, same.theta, PowerFactor(0.6)) == 0.0);
  Instance off = instance(22, 0);
  off.link.config.P_s = 0.0;
  CHECK(tasr_beta_gradient(off.link, off.theta, PowerFactor(0.6)) == 0.0);
}

TEST_CASE("max_tasr_tpd") {
  SUBCASE("grid oracle and feasibility") {
    for (int k = 0; k < 20; ++k) {
      const Instance in = instance(30, k);
      const TpdResult r = max_tasr_tpd(in.link, in.theta);
      CHECK(r.beta.beta() > 0.0);
      CHECK(r.beta.beta() <= 1.0);
      for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
      const double g = grid_max([&](double x) { return tasr(in.link, in.theta, PowerFactor(x)); });
      CHECK(r.objective_bits >= g - 0.02);
    }
  }
  SUBCASE("starting at an interior optimum stays there") {
    for (int k = 0; k < 20; ++k) {
      const Instance in = instance(31, k);
      double best_b = 1.0, best = -1e300;
      for (int i = 1; i <= 1000; ++i) {
        const double v = tasr(in.link, in.theta, PowerFactor(i / 1000.0));
        if (v > best) best = v, best_b = i / 1000.0;
      }
      if (best_b >= 0.999 || best_b <= 0.002) continue;
      // Refine the grid point to a stationary point by bisection on the gradient.
      double lo = best_b - 1e-3, hi = best_b + 1e-3;
      if (!(tasr_beta_gradient(in.link, in.theta, PowerFactor(lo)) > 0 &&
            tasr_beta_gradient(in.link, in.theta, PowerFactor(hi)) < 0))
        continue;
      for (int it = 0; it < 60; ++it) {
        const double m = 0.5 * (lo + hi);
        (tasr_beta_gradient(in.link, in.theta, PowerFactor(m)) > 0 ? lo : hi) = m;
      }
      TpdOptions o;
      o.kind = TpdKind::tasr;
      o.initial_beta = 0.5 * (lo + hi);
      const TpdResult r = max_tasr_tpd(in.link, in.theta, o);
      CHECK(std::abs(r.beta.beta() - *o.initial_beta) <= 1e-3);
      CHECK(r.iterations <= 2);
    }
  }
  Instance in = instance(32, 0);
  TpdOptions bad;
  bad.mu0 = 0.0;
  CHECK_THROWS_AS(max_tasr_tpd(in.link, in.theta, bad), Error);
}

TEST_CASE("fixed power and dispatch") {
  const Instance in = instance(40, 0);
  TpdOptions o;
  o.kind = TpdKind::fixed;
  o.fixed_beta = 0.25;
  const TpdResult r = run_tpd(in.link, in.theta, o);
  CHECK(r.beta.beta() == 0.25);
  CHECK(r.objective_bits == doctest::Approx(nasr(in.link, in.theta, PowerFactor(0.25), coeff_lookup(4, 4))));
  o.fixed_beta = 1.5;
  CHECK_THROWS_AS(run_tpd(in.link, in.theta, o), Error);
}
