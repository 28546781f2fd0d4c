#include <doctest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "tidlab/error.hpp"
#include "tidlab/laws.hpp"
#include "tidlab/mc_stats.hpp"

using namespace tidlab;
using D = LimitLawDescriptor;

namespace {

Params P(double rho, double alpha, double beta, double x0 = 0.0) {
  Params p;
  p.rho = rho;
  p.alpha = alpha;
  p.beta = beta;
  p.x0 = x0;
  return p;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no exception");
  return ErrorCode::IoError;
}

double gauss_cdf(double x, double var) { return 0.5 * std::erfc(-x / std::sqrt(2.0 * var)); }

// Independent check of total mass: double-exponential quadrature on each half line.
double total_mass(const LimitLaw& law) {
  auto f = [&](double x) { return law.pdf(x); };
  boost::math::quadrature::exp_sinh<double> tail;
  boost::math::quadrature::tanh_sinh<double> body;
  double mass = body.integrate(f, 0.0, 1.0) + tail.integrate(f, 1.0, std::numeric_limits<double>::infinity());
  if (law.descriptor().support == Support::R) {
    auto g = [&](double x) { return law.pdf(-x); };
    mass += body.integrate(g, 0.0, 1.0) + tail.integrate(g, 1.0, std::numeric_limits<double>::infinity());
  }
  return mass;
}

std::vector<D> all_kinds() {
  return {D::gaussian(0.3, 2.0), D::half_gaussian(),   D::sqrt_gamma(1.5, 2.0), D::sqrt_gamma(0.7, 2.0),
          D::lambda(-1, 1),      D::lambda(0.5, 0.5),  D::lambda(-0.7, 2.5),   D::lambda(0.3, -0.5),
          D::lambda(1, -1),      D::lambda(0.4, -2.0), D::pi(-1, 1),           D::pi(-0.5, 0.5),
          D::pi(-2, -0.5),       D::pi(-1, 3)};
}

}  // namespace

TEST_CASE("normalizer closed forms") {
  const double pi = std::numbers::pi;
  CHECK(std::abs(normalizer(0, 0.3, NormalizerKind::Lambda) - std::sqrt(2 * pi)) < 1e-8);
  CHECK(std::abs(normalizer(0, 2.0, NormalizerKind::Lambda) - std::sqrt(2 * pi)) < 1e-8);
  CHECK(std::abs(normalizer(-1, 1, NormalizerKind::Lambda) - std::sqrt(2 * pi / 3)) < 1e-8);
  CHECK(std::abs(normalizer(-1, 1, NormalizerKind::Pi) - std::sqrt(pi)) < 1e-8);

  // Pi: int exp(-c |x|^p) dx = 2 Gamma(1 + 1/p) c^(-1/p), p = alpha + 1, c = -2 rho / p.
  for (double alpha : {-0.5, 0.5, 2.0, 3.0}) {
    for (double rho : {-0.3, -1.0, -2.5}) {
      const double pw = alpha + 1, c = -2 * rho / pw;
      const double want = 2 * std::tgamma(1 + 1 / pw) * std::pow(c, -1 / pw);
      CHECK(normalizer(rho, alpha, NormalizerKind::Pi) == doctest::Approx(want).epsilon(1e-9));
    }
  }
  // alpha = -1 on (0, inf): int x^(2 rho) exp(-x^2 / 2) dx = 2^(rho - 1/2) Gamma(rho + 1/2).
  for (double rho : {0.0, 0.25, 1.0, 2.0}) {
    CHECK(normalizer(rho, -1, NormalizerKind::Lambda) ==
          doctest::Approx(std::pow(2.0, rho - 0.5) * std::tgamma(rho + 0.5)).epsilon(1e-9));
  }
  // alpha = 1: Gaussian with variance 1 / (1 - 2 rho).
  for (double rho : {-3.0, 0.1, 0.45}) {
    CHECK(normalizer(rho, 1, NormalizerKind::Lambda) == doctest::Approx(std::sqrt(2 * pi / (1 - 2 * rho))).epsilon(1e-9));
  }
}

TEST_CASE("integrability guards") {
  CHECK(lambda_integrable(5, 0.5));
  CHECK(lambda_integrable(0.49, 1));
  CHECK_FALSE(lambda_integrable(0.5, 1));
  CHECK(lambda_integrable(0, 2));
  CHECK_FALSE(lambda_integrable(0.1, 2));
  CHECK_FALSE(lambda_integrable(-1, -1));
  CHECK(pi_integrable(-1, 0));
  CHECK_FALSE(pi_integrable(0, 1));
  CHECK_FALSE(pi_integrable(-1, -1));
  CHECK(code_of([] { normalizer(0.5, 1, NormalizerKind::Lambda); }) == ErrorCode::NonIntegrable);
  CHECK(code_of([] { normalizer(1, 1, NormalizerKind::Pi); }) == ErrorCode::NonIntegrable);
  CHECK(code_of([] { LimitLaw(D::lambda(1, 2)); }) == ErrorCode::NonIntegrable);
}

TEST_CASE("cdf examples") {
  CHECK(law_cdf(D::gaussian(0, 1), 0) == 0.5);
  CHECK(law_cdf(D::half_gaussian(), 0) == 0.0);
  CHECK(law_cdf(D::lambda(-1, 1), 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(law_cdf(D::point_mass_zero(), -1e-9) == 0.0);
  CHECK(law_cdf(D::point_mass_zero(), 0) == 1.0);
  CHECK(law_cdf(D::deterministic(2), 1.9) == 0.0);
  CHECK(law_cdf(D::deterministic(2), 2) == 1.0);
  // SqrtGamma(k, theta): P(X <= x) = P(Gamma(k, theta) <= x^2); k = 1/2, theta = 2 is |N(0,1)|.
  for (double x : {0.1, 0.7, 1.5, 3.0}) {
    CHECK(law_cdf(D::sqrt_gamma(0.5, 2), x) == doctest::Approx(2 * gauss_cdf(x, 1) - 1).epsilon(1e-12));
    CHECK(law_cdf(D::half_gaussian(), x) == doctest::Approx(2 * gauss_cdf(x, 1) - 1).epsilon(1e-12));
  }
  // Shape 1: exponential of x^2 with mean 2.
  CHECK(law_cdf(D::sqrt_gamma(1, 2), 1.3) == doctest::Approx(1 - std::exp(-1.69 / 2)).epsilon(1e-12));
}

TEST_CASE("densities integrate to one") {
  for (const D& d : all_kinds()) {
    if (d.kind == LawKind::Gaussian) continue;
    CAPTURE(describe(d));
    const LimitLaw law(d);
    CHECK(std::abs(total_mass(law) - 1.0) < 1e-7);
  }
}

TEST_CASE("cdf is monotone with limits 0 and 1") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-8, 8);
  for (const D& d : all_kinds()) {
    CAPTURE(describe(d));
    const LimitLaw law(d);
    CHECK(law.cdf(-1e3) == doctest::Approx(0.0));
    CHECK(law.cdf(1e3) == doctest::Approx(1.0));
    for (int i = 0; i < 10000; ++i) {
      double x = u(gen), y = u(gen);
      if (x > y) std::swap(x, y);
      REQUIRE(law.cdf(x) <= law.cdf(y));
    }
  }
}

TEST_CASE("Lambda and Pi reduce to Gaussians") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-5, 5);
  const LimitLaw l0a(D::lambda(0, 0.5)), l0b(D::lambda(0, 2.0)), l0c(D::lambda(0, -0.5));
  const LimitLaw l1(D::lambda(-1, 1)), l2(D::lambda(0.3, 1));
  const LimitLaw p1(D::pi(-1, 1)), p2(D::pi(-0.25, 1));
  double worst = 0;
  for (int i = 0; i < 2000; ++i) {
    const double x = u(gen);
    for (const LimitLaw* l : {&l0a, &l0b, &l0c}) worst = std::max(worst, std::abs(l->cdf(x) - gauss_cdf(x, 1)));
    worst = std::max(worst, std::abs(l1.cdf(x) - gauss_cdf(x, 1.0 / 3)));
    worst = std::max(worst, std::abs(l2.cdf(x) - gauss_cdf(x, 1.0 / 0.4)));
    worst = std::max(worst, std::abs(p1.cdf(x) - gauss_cdf(x, 0.5)));
    worst = std::max(worst, std::abs(p2.cdf(x) - gauss_cdf(x, 2.0)));
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("quantile inverts the cdf") {
  for (const D& d : all_kinds()) {
    CAPTURE(describe(d));
    const LimitLaw law(d);
    for (double q : {0.01, 0.2, 0.5, 0.77, 0.99}) CHECK(law.cdf(law.quantile(q)) == doctest::Approx(q).epsilon(1e-6));
  }
}

TEST_CASE("samplers agree with their cdfs") {
  for (const D& d : all_kinds()) {
    CAPTURE(describe(d));
    const LimitLaw law(d);
    const std::vector<double> xs = law.sample({21, 0}, 10000);
    CHECK(ks_distance(xs, [&](double x) { return law.cdf(x); }).statistic < 0.025);
    CHECK(law.sample({21, 0}, 100) == law.sample({21, 0}, 100));
  }
  const std::vector<double> g = law_sample(D::gaussian(0, 1), {5, 1}, 100000);
  double m = 0;
  for (double x : g) m += x;
  CHECK(std::abs(m / g.size()) < 0.02);

  const std::vector<double> sg = law_sample(D::sqrt_gamma(1.5, 2), {5, 2}, 10000);
  double m2 = 0;
  for (double x : sg) m2 += x * x;
  CHECK(m2 / sg.size() == doctest::Approx(3.0).epsilon(0.05));

  const std::vector<double> lam = law_sample(D::lambda(-1, 1), {5, 3}, 10000);
  const LimitLaw lam_law(D::lambda(-1, 1));
  CHECK(ks_distance(lam, [&](double x) { return lam_law.cdf(x); }).statistic < 0.02);
}

TEST_CASE("limit packages") {
  const LimitPackage a = limit_package(classify(P(-1, 1, 1)), P(-1, 1, 1));
  CHECK(a.normalization == Normalization::sqrt_t());
  for (double x : {-1.0, 0.2, 0.9}) CHECK(law_cdf(a.law, x) == doctest::Approx(gauss_cdf(x, 1.0 / 3)).epsilon(1e-8));

  const LimitPackage b = limit_package(classify(P(0.5, 1, 1)), P(0.5, 1, 1));
  CHECK(b.normalization == Normalization::sqrt_t_log_t());
  CHECK(b.law == D::gaussian(0, 1));
  CHECK(b.normalization(std::exp(1.0)) == doctest::Approx(std::sqrt(std::exp(1.0))));

  const LimitPackage c = limit_package(classify(P(-1, 1, 0)), P(-1, 1, 0));
  CHECK(c.normalization(7.0) == doctest::Approx(1.0));
  for (double x : {-1.0, 0.2, 0.9}) CHECK(law_cdf(c.law, x) == doctest::Approx(gauss_cdf(x, 0.5)).epsilon(1e-8));

  CHECK(code_of([] { limit_package(classify(P(1, 3, 0)), P(1, 3, 0)); }) == ErrorCode::NoLimitLaw);
  // Partially explosive: the package conditional on survival.
  const LimitPackage d = limit_package(classify(P(1, 3, 3)), P(1, 3, 3));
  CHECK(d.normalization == Normalization::sqrt_t());
}

TEST_CASE("blow-up profile") {
  CHECK(blowup_profile(P(1, 3, 2), 2, 1.999) == doctest::Approx(2 / std::sqrt(0.002)).epsilon(1e-12));
  CHECK(blowup_profile(P(1, 3, 2), 2, 1.999) == doctest::Approx(44.721).epsilon(1e-4));
  CHECK(blowup_profile(P(1, 3, 2), 5, 4.98) / blowup_profile(P(1, 3, 2), 5, 4.99) ==
        doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  // rho^(-1/(alpha - 1)) scaling at fixed t.
  for (const Params& base : {P(1, 3, 2), P(1, 2.5, 0.5), P(1, 4, -1)}) {
    for (double rho : {0.3, 2.0, 7.0}) {
      Params q = base;
      q.rho = rho;
      CHECK(blowup_profile(q, 3, 2.5) ==
            doctest::Approx(blowup_profile(base, 3, 2.5) * std::pow(rho, -1 / (base.alpha - 1))).epsilon(1e-12));
    }
  }
  // Below the line the time-change factors collapse to tau^(beta / (alpha - 1)).
  for (const Params& p : {P(1, 3, 1), P(2, 2.5, 0.5), P(0.5, 4, -1), P(1, 3, 0)}) {
    const double tau = 3.7, t = 3.2;
    const double want = std::pow(tau, p.beta / (p.alpha - 1)) / std::pow(p.rho * (p.alpha - 1) * (tau - t), 1 / (p.alpha - 1));
    CHECK(blowup_profile(p, tau, t) == doctest::Approx(want).epsilon(1e-10));
  }
  CHECK(code_of([] { blowup_profile(P(1, 3, 3), 2, 1.5); }) == ErrorCode::InvalidParameters);
  CHECK(code_of([] { blowup_profile(P(-1, 3, 0), 2, 1.5); }) == ErrorCode::InvalidParameters);
  CHECK(code_of([] { blowup_profile(P(1, 3, 0), 2, 2.5); }) == ErrorCode::InvalidParameters);
}

TEST_CASE("transient rate") {
  const TransientRate a = transient_rate(P(1, 0, 0));
  CHECK(a.ell == doctest::Approx(1));
  CHECK(a.nu == doctest::Approx(1));
  const TransientRate b = transient_rate(P(2, -1, 0));
  CHECK(b.ell == doctest::Approx(2));
  CHECK(b.nu == doctest::Approx(0.5));
  const TransientRate c = transient_rate(P(1, 0.5, 0));
  CHECK(c.ell == doctest::Approx(0.25));
  CHECK(c.nu == doctest::Approx(2));
  CHECK(code_of([] { transient_rate(P(-1, 0, 0)); }) == ErrorCode::InvalidParameters);
  CHECK(code_of([] { transient_rate(P(1, 1, 0)); }) == ErrorCode::InvalidParameters);
}

TEST_CASE("linear case parameters") {
  const LinearCaseParams a = linear_case_params(P(1, 1, 0, 1));
  CHECK(a.m == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(a.sigma2 == doctest::Approx(std::exp(-2.0) / 2).epsilon(1e-10));
  CHECK(linear_case_params(P(1, 1, 0, 0)).m == 0.0);

  // beta = 1/2: int_1^inf exp(-4 sqrt(s)) ds = e^-4 (1/2 + 1/8) exactly.
  const double s_exact = std::exp(-4.0) * (0.5 + 0.125);
  const LinearCaseParams b = linear_case_params(P(1, 1, 0.5));
  Quadrature loose;
  loose.abs_tol = 2e-10;
  loose.rel_tol = 2e-10;
  CHECK(std::abs(b.sigma2 - linear_case_params(P(1, 1, 0.5), loose).sigma2) < 1e-8);
  CHECK(b.sigma2 == doctest::Approx(s_exact).epsilon(1e-9));
  CHECK(code_of([] { linear_case_params(P(1, 0.5, 0)); }) == ErrorCode::NonIntegrable);
  CHECK(code_of([] { linear_case_params(P(1, 1, 1.5)); }) == ErrorCode::NonIntegrable);
}

TEST_CASE("describe") {
  CHECK(describe(D::half_gaussian()) == "|N(0,1)|");
  CHECK(describe(D::point_mass_zero()) == "delta_0");
  CHECK(to_string(LawKind::Lambda) == "Lambda");
}
