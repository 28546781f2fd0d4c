#include "tidlab/time_change.hpp"

#include <cmath>

#include "tidlab/error.hpp"

namespace tidlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Evaluation is capped here to keep (1 + (1 - gamma) s) away from zero.
constexpr double kEndpointCap = 1.0 - 1e-12;

double capped(const TimeChange& tc, double s) {
  if (tc.bounded_domain()) return std::min(s, tc.t1 * kEndpointCap);
  return s;
}

void check_domain(const TimeChange& tc, double s) {
  if (!(s >= 0.0)) throw Error(ErrorCode::OutOfDomain, "s must be >= 0");
  if (s >= tc.t1) throw Error(ErrorCode::OutOfDomain, "s must be < t1");
}

// ln phi(s)
double log_phi(const TimeChange& tc, double s) {
  if (tc.exponential_like()) return s;
  const double g = tc.gamma;
  return std::log1p((1.0 - g) * s) / (1.0 - g);
}

}  // namespace

bool TimeChange::exponential_like() const { return kind == TimeChangeKind::Exponential || gamma == 1.0; }

TimeChange make_exponential() { return TimeChange{}; }

TimeChange make_power(double alpha, double beta) {
  if (on_boundary(alpha, -1.0)) throw Error(ErrorCode::DegenerateExponent, "gamma undefined at alpha = -1");
  TimeChange tc;
  tc.kind = TimeChangeKind::Power;
  tc.gamma = 2.0 * beta / (alpha + 1.0);
  if (on_boundary(tc.gamma, 1.0)) tc.gamma = 1.0;
  if (tc.gamma > 1.0) {
    tc.t1 = 1.0 / (tc.gamma - 1.0);
    tc.delta = tc.gamma / (2.0 * (tc.gamma - 1.0));
  } else {
    tc.t1 = kInf;
  }
  return tc;
}

double phi(const TimeChange& tc, double s) {
  check_domain(tc, s);
  return std::exp(log_phi(tc, capped(tc, s)));
}

PhiDerivatives eval(const TimeChange& tc, double s) {
  check_domain(tc, s);
  s = capped(tc, s);
  if (tc.exponential_like()) {
    const double e = std::exp(s);
    return {e, e, e};
  }
  const double lp = log_phi(tc, s);
  const double g = tc.gamma;
  return {std::exp(lp), std::exp(g * lp), g * std::exp((2.0 * g - 1.0) * lp)};
}

double phi_inverse(const TimeChange& tc, double t) {
  if (!(t >= 1.0)) throw Error(ErrorCode::OutOfDomain, "phi^{-1} needs t >= 1");
  if (t == kInf) return tc.t1;
  const double lt = std::log(t);
  if (tc.exponential_like()) return lt;
  const double g = tc.gamma;
  return std::expm1((1.0 - g) * lt) / (1.0 - g);
}

KilledPath scaling_apply(const TimeChange& tc, const KilledPath& path) {
  if (path.t_start != 1.0) throw Error(ErrorCode::InvalidParameters, "scaling_apply needs a path started at t = 1");
  KilledPath out;
  out.t_start = 0.0;
  out.times.reserve(path.size());
  out.values.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double s = phi_inverse(tc, path.times[i]);
    out.times.push_back(s);
    out.values.push_back(path.values[i] / std::sqrt(eval(tc, s).phi_prime));
  }
  if (!out.times.empty()) out.times.front() = 0.0;
  if (path.killing_time) out.killing_time = phi_inverse(tc, *path.killing_time);
  return out;
}

KilledPath scaling_invert(const TimeChange& tc, const KilledPath& path) {
  if (path.t_start != 0.0) throw Error(ErrorCode::InvalidParameters, "scaling_invert needs a path started at s = 0");
  KilledPath out;
  out.t_start = 1.0;
  out.times.reserve(path.size());
  out.values.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const auto d = eval(tc, path.times[i]);
    out.times.push_back(d.phi);
    out.values.push_back(std::sqrt(d.phi_prime) * path.values[i]);
  }
  if (!out.times.empty()) out.times.front() = 1.0;
  // Killing at t1 means the original path lives forever.
  if (path.killing_time && *path.killing_time < tc.t1) out.killing_time = phi(tc, *path.killing_time);
  return out;
}

double transformed_coefficient(const Params& p, const TimeChange& tc, double s) {
  const double lp = log_phi(tc, capped(tc, s));
  const double log_phi_prime = tc.exponential_like() ? s : tc.gamma * lp;
  return std::exp(0.5 * (p.alpha + 1.0) * log_phi_prime - p.beta * lp);
}

double transformed_drift(const Params& p, const TimeChange& tc, double s, double y) {
  check_domain(tc, s);
  if (p.alpha < 0.0 && y == 0.0) throw Error(ErrorCode::SingularPoint, "transformed drift is singular at 0");
  const auto d = eval(tc, s);
  const double main = p.rho == 0.0 ? 0.0 : p.rho * transformed_coefficient(p, tc, s) * signed_power(y, p.alpha);
  return main - (d.phi_second / d.phi_prime) * y / 2.0;
}

KilledPath flip_sign(KilledPath path) {
  for (auto& v : path.values) v = -v;
  return path;
}

}  // namespace tidlab
