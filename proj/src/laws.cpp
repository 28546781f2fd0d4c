#include "tidlab/laws.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tidlab/error.hpp"
#include "tidlab/time_change.hpp"

namespace tidlab {

LimitLawDescriptor LimitLawDescriptor::gaussian(double mean, double variance) {
  LimitLawDescriptor d;
  d.kind = LawKind::Gaussian;
  d.mean = mean;
  d.variance = variance;
  return d;
}

LimitLawDescriptor LimitLawDescriptor::half_gaussian() {
  LimitLawDescriptor d;
  d.kind = LawKind::HalfGaussian;
  d.support = Support::HalfLinePos;
  return d;
}

LimitLawDescriptor LimitLawDescriptor::sqrt_gamma(double shape, double scale) {
  LimitLawDescriptor d;
  d.kind = LawKind::SqrtGamma;
  d.support = Support::HalfLinePos;
  d.shape = shape;
  d.scale = scale;
  return d;
}

LimitLawDescriptor LimitLawDescriptor::lambda(double rho, double alpha) {
  LimitLawDescriptor d;
  d.kind = LawKind::Lambda;
  d.rho = rho;
  d.alpha = alpha;
  d.support = alpha > -1.0 && !on_boundary(alpha, -1.0) ? Support::R : Support::HalfLinePos;
  return d;
}

LimitLawDescriptor LimitLawDescriptor::pi(double rho, double alpha) {
  LimitLawDescriptor d = lambda(rho, alpha);
  d.kind = LawKind::Pi;
  return d;
}

LimitLawDescriptor LimitLawDescriptor::point_mass_zero() {
  LimitLawDescriptor d;
  d.kind = LawKind::PointMassZero;
  return d;
}

LimitLawDescriptor LimitLawDescriptor::deterministic(double ell) {
  LimitLawDescriptor d;
  d.kind = LawKind::DeterministicLimit;
  d.support = Support::HalfLinePos;
  d.ell = ell;
  return d;
}

std::string to_string(LawKind kind) {
  switch (kind) {
    case LawKind::Gaussian: return "Gaussian";
    case LawKind::HalfGaussian: return "HalfGaussian";
    case LawKind::SqrtGamma: return "SqrtGamma";
    case LawKind::Lambda: return "Lambda";
    case LawKind::Pi: return "Pi";
    case LawKind::PointMassZero: return "PointMassZero";
    case LawKind::DeterministicLimit: return "DeterministicLimit";
  }
  return "?";
}

std::string describe(const LimitLawDescriptor& law) {
  std::ostringstream os;
  os.precision(6);
  switch (law.kind) {
    case LawKind::Gaussian: os << "N(" << law.mean << "," << law.variance << ")"; break;
    case LawKind::HalfGaussian: os << "|N(0,1)|"; break;
    case LawKind::SqrtGamma: os << "sqrtGamma(" << law.shape << "," << law.scale << ")"; break;
    case LawKind::Lambda: os << "Lambda(" << law.rho << "," << law.alpha << ")"; break;
    case LawKind::Pi: os << "Pi(" << law.rho << "," << law.alpha << ")"; break;
    case LawKind::PointMassZero: os << "delta_0"; break;
    case LawKind::DeterministicLimit: os << "deterministic(" << law.ell << ")"; break;
  }
  return os.str();
}

bool lambda_integrable(double rho, double alpha) {
  if (alpha <= -1.0 || on_boundary(alpha, -1.0)) return rho >= 0.0;
  if (on_boundary(alpha, 1.0)) return rho < 0.5;
  if (alpha < 1.0) return true;
  return rho <= 0.0;
}

bool pi_integrable(double rho, double alpha) { return rho < 0.0 && alpha > -1.0 && !on_boundary(alpha, -1.0); }

namespace {

using boost::math::quadrature::gauss_kronrod;
using boost::math::quadrature::tanh_sinh;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Integrates f over [a, b] within [0, inf); [0, 1] pieces use tanh-sinh to
// absorb the cusp of |x|^(alpha+1) at 0.
template <class F>
double integrate_half_line(F f, double a, double b, const Quadrature& q, double* err_out = nullptr) {
  double total = 0.0;
  double err_total = 0.0;
  double l1_total = 0.0;
  if (a < 1.0) {
    const double hi = std::min(b, 1.0);
    if (hi > a) {
      thread_local tanh_sinh<double> integrator;
      double err = 0.0, l1 = 0.0;
      total += integrator.integrate(f, a, hi, q.rel_tol, &err, &l1);
      err_total += err;
      l1_total += l1;
    }
  }
  if (b > 1.0) {
    const double lo = std::max(a, 1.0);
    if (b > lo) {
      double err = 0.0, l1 = 0.0;
      total += gauss_kronrod<double, 61>::integrate(f, lo, b, q.max_subdivisions, q.rel_tol, &err, &l1);
      err_total += err;
      l1_total += l1;
    }
  }
  if (err_out) *err_out = err_total;
  if (err_total > std::max(q.abs_tol, q.rel_tol * l1_total)) {
    throw Error(ErrorCode::ToleranceNotMet, "quadrature error bound above tolerance");
  }
  return total;
}

struct Kernel {
  double rho;
  double alpha;
  bool gaussian_factor;
  double shift = 0.0;

  double exponent_term(double u) const {
    if (rho == 0.0) return 0.0;
    if (on_boundary(alpha, -1.0)) return 2.0 * rho * std::log(u);
    return 2.0 * rho * std::pow(u, alpha + 1.0) / (alpha + 1.0);
  }

  // log of the unnormalized density at |x| = u >= 0.
  double log_value(double u) const {
    double h = exponent_term(u);
    if (gaussian_factor) h -= 0.5 * u * u;
    return h;
  }

  double operator()(double u) const {
    const double h = log_value(u) - shift;
    return std::isnan(h) ? 0.0 : std::exp(h);
  }
};

Kernel make_kernel(double rho, double alpha, bool gaussian_factor) {
  Kernel k{rho, alpha, gaussian_factor};
  double best = k.log_value(0.0);
  if (std::isnan(best)) best = -kInf;
  if (gaussian_factor && rho > 0.0 && alpha < 1.0) {
    // Mode of 2 rho u^(alpha+1)/(alpha+1) - u^2/2 solves u^(1-alpha) = 2 rho.
    const double mode = std::pow(2.0 * rho, 1.0 / (1.0 - alpha));
    best = std::max(best, k.log_value(mode));
  }
  k.shift = std::isfinite(best) ? best : 0.0;
  return k;
}

void check_integrable(double rho, double alpha, NormalizerKind kind) {
  const bool ok = kind == NormalizerKind::Lambda ? lambda_integrable(rho, alpha) : pi_integrable(rho, alpha);
  if (!ok) throw Error(ErrorCode::NonIntegrable, "density is not integrable for these (rho, alpha)");
}

bool symmetric_support(double alpha) { return alpha > -1.0 && !on_boundary(alpha, -1.0); }

double erf_inv_clamped(double v) { return boost::math::erf_inv(std::clamp(v, -1.0 + 1e-16, 1.0 - 1e-16)); }

}  // namespace

double normalizer(double rho, double alpha, NormalizerKind kind, const Quadrature& q) {
  check_integrable(rho, alpha, kind);
  const Kernel k = make_kernel(rho, alpha, kind == NormalizerKind::Lambda);
  const double half = integrate_half_line(k, 0.0, kInf, q);
  return (symmetric_support(alpha) ? 2.0 : 1.0) * half * std::exp(k.shift);
}

LimitLaw::LimitLaw(const LimitLawDescriptor& descriptor, const Quadrature& q) : descriptor_(descriptor), quad_(q) {
  switch (descriptor_.kind) {
    case LawKind::Gaussian:
      if (!(descriptor_.variance > 0.0)) throw Error(ErrorCode::InvalidParameters, "Gaussian variance must be > 0");
      break;
    case LawKind::SqrtGamma:
      if (!(descriptor_.shape > 0.0 && descriptor_.scale > 0.0)) {
        throw Error(ErrorCode::InvalidParameters, "SqrtGamma needs shape, scale > 0");
      }
      break;
    case LawKind::Lambda:
    case LawKind::Pi: {
      const auto kind = descriptor_.kind == LawKind::Lambda ? NormalizerKind::Lambda : NormalizerKind::Pi;
      check_integrable(descriptor_.rho, descriptor_.alpha, kind);
      const Kernel k = make_kernel(descriptor_.rho, descriptor_.alpha, kind == NormalizerKind::Lambda);
      log_shift_ = k.shift;
      const double half = integrate_half_line(k, 0.0, kInf, quad_);
      z_ = (symmetric_support(descriptor_.alpha) ? 2.0 : 1.0) * half * std::exp(log_shift_);
      build_table();
      break;
    }
    default: break;
  }
}

double LimitLaw::log_kernel(double x) const {
  const Kernel k = make_kernel(descriptor_.rho, descriptor_.alpha, descriptor_.kind == LawKind::Lambda);
  return k.log_value(std::abs(x));
}

// Unnormalized mass of [knots_[i-1], b] for b inside cell i. The first cell
// holds the cusp at 0 and gets tanh-sinh; the others are smooth.
double LimitLaw::cell_integral(std::size_t i, double b) const {
  const Kernel k{descriptor_.rho, descriptor_.alpha, descriptor_.kind == LawKind::Lambda, log_shift_};
  const double a = knots_[i - 1];
  if (b <= a) return 0.0;
  if (i == 1) {
    thread_local tanh_sinh<double> integrator;
    return integrator.integrate(k, a, b);
  }
  return boost::math::quadrature::gauss<double, 15>::integrate(k, a, b);
}

double LimitLaw::half_line_cdf(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= knots_.back()) return 1.0;
  const std::size_t i = static_cast<std::size_t>(std::upper_bound(knots_.begin(), knots_.end(), u) - knots_.begin());
  return std::min(1.0, table_cdf_[i - 1] + cell_integral(i, u) / table_mass_);
}

void LimitLaw::build_table() {
  const Kernel k{descriptor_.rho, descriptor_.alpha, descriptor_.kind == LawKind::Lambda, log_shift_};
  // Right end of the table: first doubling point past the mode where the
  // density has dropped by e^-50.
  double u_max = 1.0;
  if (descriptor_.kind == LawKind::Lambda && descriptor_.rho > 0.0) {
    u_max = std::max(u_max, std::pow(2.0 * descriptor_.rho, 1.0 / (1.0 - descriptor_.alpha)));
  }
  while (k.log_value(u_max) - log_shift_ > -50.0) u_max *= 1.25;

  // sinh spacing: fine near the origin, geometric in the tail.
  constexpr double stretch = 3.0;
  knots_.resize(kTableKnots);
  table_cdf_.assign(kTableKnots, 0.0);
  const double denom = std::sinh(stretch);
  for (std::size_t i = 0; i < kTableKnots; ++i) {
    knots_[i] = u_max * std::sinh(stretch * static_cast<double>(i) / (kTableKnots - 1)) / denom;
  }
  for (std::size_t i = 1; i < kTableKnots; ++i) table_cdf_[i] = table_cdf_[i - 1] + cell_integral(i, knots_[i]);
  table_mass_ = table_cdf_.back();
  for (auto& c : table_cdf_) c /= table_mass_;
  table_cdf_.back() = 1.0;
}

double LimitLaw::pdf(double x) const {
  const auto& d = descriptor_;
  switch (d.kind) {
    case LawKind::Gaussian: {
      const double z = (x - d.mean) / std::sqrt(d.variance);
      return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi * d.variance);
    }
    case LawKind::HalfGaussian:
      return x < 0.0 ? 0.0 : std::sqrt(2.0 / std::numbers::pi) * std::exp(-0.5 * x * x);
    case LawKind::SqrtGamma:
      if (x <= 0.0) return 0.0;
    {
      // Density of sqrt(G), G ~ Gamma(k, theta), in log form (x^(2k-1) blows up at 0 for k < 1/2).
      const double lx = std::log(x), ls = std::log(d.scale);
      return std::exp(std::log(2.0) + (2.0 * d.shape - 1.0) * lx - d.shape * ls - x * x / d.scale - std::lgamma(d.shape));
    }
    case LawKind::Lambda:
    case LawKind::Pi:
      if (d.support == Support::HalfLinePos && x <= 0.0) return 0.0;
      return std::exp(log_kernel(x) - log_shift_) * std::exp(log_shift_) / z_;
    case LawKind::PointMassZero:
    case LawKind::DeterministicLimit: return 0.0;
  }
  return 0.0;
}

double LimitLaw::cdf(double x) const {
  const auto& d = descriptor_;
  switch (d.kind) {
    case LawKind::Gaussian: return 0.5 * std::erfc(-(x - d.mean) / std::sqrt(2.0 * d.variance));
    case LawKind::HalfGaussian: return x <= 0.0 ? 0.0 : std::erf(x / std::numbers::sqrt2);
    case LawKind::SqrtGamma: return x <= 0.0 ? 0.0 : boost::math::gamma_p(d.shape, x * x / d.scale);
    case LawKind::Lambda:
    case LawKind::Pi: {
      if (d.support == Support::HalfLinePos) return half_line_cdf(x);
      const double part = 0.5 * half_line_cdf(std::abs(x));
      return x >= 0.0 ? 0.5 + part : 0.5 - part;
    }
    case LawKind::PointMassZero: return x < 0.0 ? 0.0 : 1.0;
    case LawKind::DeterministicLimit: return x < d.ell ? 0.0 : 1.0;
  }
  return 0.0;
}

double LimitLaw::quantile(double u) const {
  const auto& d = descriptor_;
  switch (d.kind) {
    case LawKind::Gaussian: return d.mean + std::sqrt(2.0 * d.variance) * erf_inv_clamped(2.0 * u - 1.0);
    case LawKind::HalfGaussian: return std::numbers::sqrt2 * erf_inv_clamped(u);
    case LawKind::SqrtGamma: return std::sqrt(d.scale * boost::math::gamma_p_inv(d.shape, std::clamp(u, 0.0, 1.0)));
    case LawKind::Lambda:
    case LawKind::Pi: {
      const bool symmetric = d.support == Support::R;
      const double v = symmetric ? std::abs(2.0 * u - 1.0) : u;
      const auto it = std::upper_bound(table_cdf_.begin(), table_cdf_.end(), v);
      double r;
      if (it == table_cdf_.end()) {
        r = knots_.back();
      } else {
        const std::size_t i = static_cast<std::size_t>(it - table_cdf_.begin());
        const double c0 = table_cdf_[i - 1], c1 = table_cdf_[i];
        const double w = c1 > c0 ? (v - c0) / (c1 - c0) : 0.0;
        const double lo = knots_[i - 1], hi = knots_[i];
        r = lo + w * (hi - lo);
        // Newton polish inside the cell.
        const Kernel k{d.rho, d.alpha, d.kind == LawKind::Lambda, log_shift_};
        for (int it_n = 0; it_n < 3; ++it_n) {
          const double f = k(r) / table_mass_;
          if (!(f > 0.0)) break;
          r = std::clamp(r - (c0 + cell_integral(i, r) / table_mass_ - v) / f, lo, hi);
        }
      }
      return symmetric && u < 0.5 ? -r : r;
    }
    case LawKind::PointMassZero: return 0.0;
    case LawKind::DeterministicLimit: return d.ell;
  }
  return 0.0;
}

std::vector<double> LimitLaw::sample(const RngStreamSpec& rng, std::size_t n) const {
  if (n == 0) throw Error(ErrorCode::InvalidParameters, "sample size must be >= 1");
  RandomStream stream(rng);
  std::vector<double> out(n);
  const auto& d = descriptor_;
  for (auto& x : out) {
    switch (d.kind) {
      case LawKind::Gaussian: x = d.mean + std::sqrt(d.variance) * stream.normal(); break;
      case LawKind::HalfGaussian: x = std::abs(stream.normal()); break;
      default: x = quantile(stream.uniform()); break;
    }
  }
  return out;
}

double law_cdf(const LimitLawDescriptor& law, double x, const Quadrature& q) { return LimitLaw(law, q).cdf(x); }

std::vector<double> law_sample(const LimitLawDescriptor& law, const RngStreamSpec& rng, std::size_t n) {
  return LimitLaw(law).sample(rng, n);
}

LimitPackage limit_package(const Regime& regime, const Params& p) {
  (void)p;
  if (regime.recurrence == Recurrence::ExplodesAS) {
    throw Error(ErrorCode::NoLimitLaw, "almost surely explosive regime: use the blow-up profile");
  }
  if (regime.recurrence == Recurrence::ExplodesWithPartialProbability) {
    const auto& c = *regime.conditional_on_nonexplosion;
    return {c.normalization, c.limit_law};
  }
  if (!regime.limit_law) throw Error(ErrorCode::NoLimitLaw, "regime carries no limit law");
  return {regime.normalization, *regime.limit_law};
}

double blowup_profile(const Params& p, double tau_e, double t) {
  if (!(p.rho > 0.0 && p.alpha > 1.0) || 2.0 * p.beta > p.alpha + 1.0 + 1e-12 * std::max(1.0, p.alpha + 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "blow-up profile needs rho > 0, alpha > 1, 2 beta <= alpha + 1");
  }
  if (!(t < tau_e) || !(tau_e > 1.0)) throw Error(ErrorCode::InvalidParameters, "need 1 < tau_e and t < tau_e");
  const double a = p.alpha;
  const double denom = std::pow(p.rho * (a - 1.0) * (tau_e - t), 1.0 / (a - 1.0));
  if (on_boundary(2.0 * p.beta, a + 1.0)) {
    return std::pow(tau_e, (a + 1.0) / (2.0 * (a - 1.0))) / denom;
  }
  const TimeChange tc = make_power(a, p.beta);
  const double g = tc.gamma;
  const double phi_at = phi(tc, phi_inverse(tc, tau_e));
  return std::pow(phi_at, g / (a - 1.0)) * std::pow(tau_e, g / 2.0) / denom;
}

TransientRate transient_rate(const Params& p) {
  if (!(p.rho > 0.0 && p.alpha < 1.0 && p.beta < 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "transient rate needs rho > 0, alpha < 1, beta < 1");
  }
  const double ell = std::pow(p.rho * (1.0 - p.alpha) / (1.0 - p.beta), 1.0 / (1.0 - p.alpha));
  return {ell, (1.0 - p.beta) / (1.0 - p.alpha)};
}

LinearCaseParams linear_case_params(const Params& p, const Quadrature& q) {
  if (!(on_boundary(p.alpha, 1.0) && p.rho > 0.0 && p.beta < 1.0)) {
    throw Error(ErrorCode::NonIntegrable, "linear-case limit needs alpha = 1, rho > 0, beta < 1");
  }
  const double m = p.x0 * std::exp(p.rho / (p.beta - 1.0));
  const double c = 2.0 * p.rho / (p.beta - 1.0);
  const double e = 1.0 - p.beta;
  auto f = [&](double s) { return std::exp(c * std::pow(s, e)); };
  double err = 0.0, l1 = 0.0;
  const double sigma2 = gauss_kronrod<double, 61>::integrate(f, 1.0, kInf, q.max_subdivisions, q.rel_tol, &err, &l1);
  if (err > std::max(q.abs_tol, q.rel_tol * l1)) {
    throw Error(ErrorCode::ToleranceNotMet, "variance quadrature error above tolerance");
  }
  return {m, sigma2};
}

}  // namespace tidlab
