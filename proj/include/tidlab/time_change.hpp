#pragma once

#include <limits>
#include <optional>
#include <vector>

#include "tidlab/model.hpp"

namespace tidlab {

enum class TimeChangeKind { Exponential, Power };

/// Change of time phi : [0, t1) -> [1, inf) with phi(0) = 1.
///
/// Power changes solve phi' = phi^gamma, gamma = 2 beta / (alpha + 1):
///   phi(s) = (1 + (1 - gamma) s)^(1 / (1 - gamma)),   gamma != 1
///   phi(s) = e^s,                                     gamma == 1
/// and blow up at t1 = 1 / (gamma - 1) when gamma > 1.
struct TimeChange {
  TimeChangeKind kind = TimeChangeKind::Exponential;
  double gamma = 1.0;
  double t1 = std::numeric_limits<double>::infinity();
  std::optional<double> delta;

  bool exponential_like() const;
  bool bounded_domain() const { return t1 < std::numeric_limits<double>::infinity(); }
};

struct PhiDerivatives {
  double phi;
  double phi_prime;
  double phi_second;
};

/// A continuous trajectory on its life interval. Grid points at or after the
/// killing time are not stored.
struct KilledPath {
  double t_start = 1.0;
  std::vector<double> times;
  std::vector<double> values;
  std::optional<double> killing_time;

  std::size_t size() const { return times.size(); }
};

TimeChange make_exponential();

/// Throws DegenerateExponent at alpha = -1.
TimeChange make_power(double alpha, double beta);

PhiDerivatives eval(const TimeChange& tc, double s);
double phi(const TimeChange& tc, double s);
/// phi^{-1}(t) for t >= 1; maps +inf to t1.
double phi_inverse(const TimeChange& tc, double t);

KilledPath scaling_apply(const TimeChange& tc, const KilledPath& path);
KilledPath scaling_invert(const TimeChange& tc, const KilledPath& path);

/// Drift of the transformed equation dY = dW + b(s, Y) ds.
double transformed_drift(const Params& p, const TimeChange& tc, double s, double y);

/// Time-dependent coefficient multiplying rho sgn(y)|y|^alpha in the
/// transformed drift.
double transformed_coefficient(const Params& p, const TimeChange& tc, double s);

/// Reflects a path through the origin (x -> -x).
KilledPath flip_sign(KilledPath path);

}  // namespace tidlab
