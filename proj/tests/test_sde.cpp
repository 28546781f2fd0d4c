#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "tidlab/error.hpp"
#include "tidlab/laws.hpp"
#include "tidlab/mc_stats.hpp"
#include "tidlab/sde.hpp"

using namespace tidlab;

namespace {

Params P(double rho, double alpha, double beta, double x0 = 0.0) {
  Params p;
  p.rho = rho;
  p.alpha = alpha;
  p.beta = beta;
  p.x0 = x0;
  return p;
}

SimConfig C(double dt, std::uint64_t seed = 1, bool full = false) {
  SimConfig c;
  c.dt = dt;
  c.seed = seed;
  c.store_full_path = full;
  return c;
}

}  // namespace

TEST_CASE("scheme dispatch") {
  CHECK(resolve_scheme(P(1, 2, 0), Scheme::Auto) == Scheme::DirectEM);
  CHECK(resolve_scheme(P(1, -0.5, 0), Scheme::Auto) == Scheme::DirectEM);
  CHECK(resolve_scheme(P(1, -1, 0), Scheme::Auto) == Scheme::SquaredProcess);
  CHECK(resolve_scheme(P(1, -2, 0), Scheme::Auto) == Scheme::PositivityPreserving);
  CHECK(resolve_scheme(P(0, -2, 0), Scheme::Auto) == Scheme::DirectEM);
  CHECK_THROWS_AS(resolve_scheme(P(1, -2, 0), Scheme::DirectEM), Error);
  CHECK_THROWS_AS(resolve_scheme(P(1, 0, 0), Scheme::SquaredProcess), Error);
}

TEST_CASE("preconditions") {
  CHECK_THROWS_AS(simulate(P(-1, -2, 0), C(1e-2), 2.0), Error);
  CHECK_THROWS_AS(simulate(P(1, 1, 0), C(1e-2), 1.0), Error);
  SimConfig bad = C(0.0);
  CHECK_THROWS_AS(simulate(P(1, 1, 0), bad, 2.0), Error);
  SimConfig low = C(1e-2);
  low.explosion_threshold = 0.5;
  CHECK_THROWS_AS(simulate(P(1, 1, 0), low, 2.0), Error);
}

TEST_CASE("rho = 0 is Brownian motion from (1, x0)") {
  const int n = 10000;
  std::vector<double> inc(n);
  for (int i = 0; i < n; ++i) inc[i] = simulate(P(0, 3, 1, 0.5), C(1e-2, 4), 2.0, i).path.values.back() - 0.5;
  double m = 0, v = 0;
  for (double x : inc) m += x;
  m /= n;
  for (double x : inc) v += (x - m) * (x - m);
  v /= n - 1;
  CHECK(std::abs(m) / std::sqrt(1.0 / n) < 4);
  CHECK(std::abs(v - 1.0) < 0.05);
  CHECK(std::abs(v - 1.0) / std::sqrt(2.0 / n) < 4);
}

TEST_CASE("grid and reproducibility") {
  const SimResult a = simulate(P(-1, 1, 1, 1), C(1e-2, 9, true), 5.0, 3);
  const SimResult b = simulate(P(-1, 1, 1, 1), C(1e-2, 9, true), 5.0, 3);
  CHECK(a.path.values == b.path.values);
  CHECK(a.path.times == b.path.times);
  CHECK(a.path.times.front() == 1.0);
  CHECK(a.path.times.back() == 5.0);
  CHECK(a.path.size() == 401);
  CHECK(std::is_sorted(a.path.times.begin(), a.path.times.end()));
  CHECK(std::adjacent_find(a.path.times.begin(), a.path.times.end()) == a.path.times.end());

  // Compensated clock: 10^6 steps of 1e-3 land exactly on the horizon.
  const SimResult c = simulate(P(0, 0, 0), C(1e-3, 1, true), 1001.0);
  CHECK(c.path.size() == 1000001);
  CHECK(std::abs(c.path.times[500000] - 501.0) < 1e-9);
}

TEST_CASE("zero-noise blow-up time") {
  SimConfig c = C(1e-3);
  c.scheme = Scheme::ZeroNoiseODE;
  const SimResult r = simulate(P(1, 3, 0, 1), c, 3.0);
  REQUIRE(r.report.exploded);
  CHECK(std::abs(*r.report.tau_e_estimate - 1.5) < 1e-3);
  CHECK(*r.path.killing_time == *r.report.tau_e_estimate);

  // t* = 1 + x0^(1 - alpha) / ((alpha - 1) rho) for other parameters.
  const SimResult r2 = simulate(P(2, 2, 0, 0.5), c, 5.0);
  REQUIRE(r2.report.exploded);
  CHECK(std::abs(*r2.report.tau_e_estimate - 2.0) < 1e-3);
}

TEST_CASE("explosion report coherence") {
  for (std::uint64_t i = 0; i < 50; ++i) {
    const SimResult r = simulate(P(1, 3, 0), C(1e-3, 2, true), 50.0, i);
    REQUIRE(r.report.exploded);
    CHECK(std::abs(r.report.last_value) >= 1e8);
    CHECK(*r.report.tau_e_estimate > 1.0);
    CHECK(*r.report.tau_e_estimate <= r.report.censored_at);
    CHECK(*r.report.tau_e_estimate > r.path.times.back());
    // Profile inversion from the pre-crossing state: tau - t = |x|^-2 / 2.
    const double x_last = r.path.values.back();
    CHECK(*r.report.tau_e_estimate == doctest::Approx(r.path.times.back() + 0.5 / (x_last * x_last)).epsilon(1e-12));
    for (double v : r.path.values) REQUIRE(std::abs(v) < 1e8);
  }
  const SimResult calm = simulate(P(-1, 3, 0), C(1e-2), 5.0);
  CHECK_FALSE(calm.report.exploded);
  CHECK_FALSE(calm.report.tau_e_estimate);
}

TEST_CASE("zero-noise attractive drift shrinks |X|") {
  SimConfig c = C(1e-2, 0, true);
  c.scheme = Scheme::ZeroNoiseODE;
  for (double beta : {0.0, -0.5}) {
    for (double alpha : {0.5, 1.0, 2.0}) {
      const SimResult r = simulate(P(-1, alpha, beta, 3), c, 20.0);
      for (std::size_t i = 1; i < r.path.size(); ++i) REQUIRE(std::abs(r.path.values[i]) <= std::abs(r.path.values[i - 1]));
    }
  }
}

TEST_CASE("positivity of the singular schemes") {
  std::size_t steps = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const SimResult bessel = simulate(P(1, -1, 0), C(1e-2, 3, true), 51.0, i);
    for (double v : bessel.path.values) REQUIRE(v >= 0.0);
    const SimResult sing = simulate(P(0.5, -2, 0, 0.0), C(1e-2, 3, true), 51.0, i);
    for (std::size_t k = 1; k < sing.path.size(); ++k) REQUIRE(sing.path.values[k] > 0.0);
    steps += bessel.path.size() + sing.path.size();
  }
  CHECK(steps >= 100000);
}

TEST_CASE("clamped scheme stays finite for -1 < alpha < 0") {
  for (std::uint64_t i = 0; i < 20; ++i) {
    const SimResult r = simulate(P(-1, -0.5, 0), C(1e-2, 5, true), 20.0, i);
    for (double v : r.path.values) REQUIRE(std::isfinite(v));
  }
}

TEST_CASE("transformed clock: Ornstein-Uhlenbeck limits") {
  const int n = 4000;
  std::vector<double> free_ou(n), pulled(n);
  const TimeChange e = make_exponential();
  for (int i = 0; i < n; ++i) {
    free_ou[i] = simulate_transformed(P(0, 1, 1), e, C(1e-2, 6), 10.0, i).values.back();
    pulled[i] = simulate_transformed(P(-0.5, 1, 1), e, C(1e-2, 6), 10.0, i).values.back();
  }
  CHECK(ks_distance(free_ou, [](double x) { return LimitLaw(LimitLawDescriptor::gaussian(0, 1)).cdf(x); }).pass);
  const LimitLaw half(LimitLawDescriptor::gaussian(0, 0.5));
  CHECK(ks_distance(pulled, [&](double x) { return half.cdf(x); }).pass);
}

TEST_CASE("transformed and direct clocks agree in law") {
  const int n = 4000;
  const double T = std::exp(4.0);
  const Params p = P(-1, 1, 1);
  const TimeChange e = make_exponential();
  std::vector<double> direct(n), mapped(n);
  for (int i = 0; i < n; ++i) {
    direct[i] = simulate(p, C(1e-2, 10), T, i).path.values.back();
    const KilledPath y = simulate_transformed(p, e, C(1e-3, 11), 4.0, i);
    const KilledPath x = scaling_invert(e, y);
    CHECK(x.times.back() == doctest::Approx(T));
    mapped[i] = x.values.back();
  }
  std::sort(mapped.begin(), mapped.end());
  auto ecdf = [&](double x) {
    return static_cast<double>(std::upper_bound(mapped.begin(), mapped.end(), x) - mapped.begin()) / n;
  };
  CHECK(ks_distance(direct, ecdf).statistic < 0.05);
}

TEST_CASE("transformed simulation preconditions") {
  CHECK_THROWS_AS(simulate_transformed(P(1, 3, 3), make_power(3, 3), C(1e-3), 2.0), Error);
  CHECK_THROWS_AS(simulate_transformed(P(1, -2, 0), make_exponential(), C(1e-3), 1.0), Error);
}

TEST_CASE("bridge functional") {
  const Params p = P(1, 3, 3);
  ZeroNormalSource zero;
  const BridgeDraw d = simulate_bridge(p, C(1e-3), default_eps_cut(p), zero);
  CHECK(d.weight == 1.0);
  CHECK(d.b_end == 0.0);

  for (std::uint64_t i = 0; i < 100; ++i) {
    const double w = simulate_bridge_functional(P(1e-9, 3, 3), C(1e-3, 8), default_eps_cut(p), i);
    CHECK(std::abs(w - 1.0) < 1e-6);
    CHECK(simulate_bridge_functional(p, C(1e-3, 8), default_eps_cut(p), i) > 0.0);
  }
  CHECK_THROWS_AS(simulate_bridge_functional(P(1, 3, 1), C(1e-3), 1e-4), Error);
  CHECK_THROWS_AS(simulate_bridge_functional(P(1, 3, 3), C(1e-3), 3.0), Error);
  CHECK(default_eps_cut(p) == doctest::Approx(2e-4));
}

TEST_CASE("bridge endpoint shrinks with the tail cut") {
  const Params p = P(1, 3, 3);
  auto median_end = [&](double eps) {
    std::vector<double> ends;
    for (std::uint64_t i = 0; i < 500; ++i) {
      StreamNormalSource noise({12, i});
      ends.push_back(std::abs(simulate_bridge(p, C(1e-3), eps, noise).b_end));
    }
    return quantile(ends, 0.5);
  };
  const double a = median_end(2e-2), b = median_end(2e-3), c = median_end(2e-4);
  CHECK(b < a);
  CHECK(c < b);
}
