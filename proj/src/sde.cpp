#include "tidlab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tidlab/error.hpp"

namespace tidlab {

namespace {

// Under refinement a drift step may change |x| by at most this fraction.
constexpr double kRelativeDriftStep = 0.01;
// Under refinement a step may cover at most this fraction of t1 - s.
constexpr double kEndpointStepFraction = 0.05;
constexpr std::size_t kMaxFloorSteps = 1'000'000;

// Clock kept as an offset from its origin with compensated summation.
class Clock {
 public:
  Clock(double origin, double end) : origin_(origin), span_(end - origin) {}

  double now() const { return origin_ + sum_; }
  double remaining() const { return (span_ - sum_) - comp_; }
  bool done() const { return finished_; }

  void advance(double h, bool last) {
    if (last) {
      sum_ = span_;
      comp_ = 0.0;
      finished_ = true;
      return;
    }
    const double y = h - comp_;
    const double t = sum_ + y;
    comp_ = (t - sum_) - y;
    sum_ = t;
  }

 private:
  double origin_;
  double span_;
  double sum_ = 0.0;
  double comp_ = 0.0;
  bool finished_ = false;
};

class PathRecorder {
 public:
  PathRecorder(bool full, double t0, double x0) : full_(full) {
    path_.t_start = t0;
    path_.times.push_back(t0);
    path_.values.push_back(x0);
  }

  void push(double t, double x) {
    if (full_) {
      path_.times.push_back(t);
      path_.values.push_back(x);
    } else {
      last_t_ = t;
      last_x_ = x;
      has_last_ = true;
    }
  }

  KilledPath finish(std::optional<double> killing_time) {
    if (!full_ && has_last_) {
      path_.times.push_back(last_t_);
      path_.values.push_back(last_x_);
    }
    path_.killing_time = killing_time;
    return std::move(path_);
  }

 private:
  bool full_;
  KilledPath path_;
  double last_t_ = 0.0;
  double last_x_ = 0.0;
  bool has_last_ = false;
};

double time_power(double t, double beta) {
  if (beta == 0.0) return 1.0;
  if (beta == 1.0) return t;
  return std::pow(t, beta);
}

bool can_explode(const Params& p) { return p.rho > 0.0 && p.alpha > 1.0; }

// Pre-crossing state -> explosion time, from |x|^{-(alpha-1)} ~ a (alpha-1) (tau - t)
// with a the current coefficient of sgn(x)|x|^alpha.
double invert_profile(double t, double x, double coefficient, double alpha) {
  const double ax = std::abs(x);
  if (ax == 0.0 || coefficient <= 0.0) return std::numeric_limits<double>::infinity();
  return t + std::pow(ax, 1.0 - alpha) / (coefficient * (alpha - 1.0));
}

// The profile places tau_e after the threshold crossing; only the life
// interval (t_prev, horizon] bounds it.
double killing_between(double estimate, double t_prev, double horizon) {
  const double lo = std::nextafter(t_prev, std::numeric_limits<double>::infinity());
  return std::clamp(estimate, lo, std::max(lo, horizon));
}

struct StepRule {
  double dt;
  double floor;
  bool adapt;

  // Caps h so that h |b| <= eta |x| when the drift is superlinear.
  double limit_by_drift(double h, double x, double b, double alpha) const {
    if (!adapt || alpha <= 1.0 || x == 0.0 || b == 0.0) return h;
    return std::min(h, std::max(kRelativeDriftStep * std::abs(x) / std::abs(b), floor));
  }
};

class OriginalClockSimulator {
 public:
  OriginalClockSimulator(const Params& p, const SimConfig& cfg, double horizon, NormalSource& noise)
      : p_(p), cfg_(cfg), horizon_(horizon), noise_(noise), rule_{cfg.dt, cfg.refine_floor(), cfg.adapt},
        clamp_cap_(1.0 / std::sqrt(cfg.dt)) {}

  SimResult run(Scheme scheme) {
    Clock clock(1.0, horizon_);
    double x = p_.x0;
    if (scheme == Scheme::SquaredProcess) x = p_.x0 * p_.x0;
    PathRecorder rec(cfg_.store_full_path, 1.0, p_.x0);
    ExplosionReport report;
    report.censored_at = horizon_;
    std::size_t floor_steps = 0;
    std::optional<double> killing;

    while (!clock.done()) {
      const double t = clock.now();
      const double remaining = clock.remaining();
      double h = rule_.limit_by_drift(cfg_.dt, x, drift_at(t, x), p_.alpha);
      const bool at_floor = rule_.adapt && h <= rule_.floor && h < cfg_.dt;
      floor_steps = at_floor ? floor_steps + 1 : 0;
      if (floor_steps > kMaxFloorSteps) {
        report.nonconvergent = true;
        report.censored_at = t;
        break;
      }
      bool last = false;
      if (h >= remaining * (1.0 - 1e-12)) {
        h = remaining;
        last = true;
      }

      double x_new = 0.0;
      double h_used = h;
      switch (scheme) {
        case Scheme::DirectEM: x_new = euler_step(t, x, h); break;
        case Scheme::ZeroNoiseODE: x_new = rk4_step(t, x, h); break;
        case Scheme::SquaredProcess: x_new = squared_step(t, x, h); break;
        case Scheme::PositivityPreserving: x_new = positive_step(t, x, h, h_used); break;
        case Scheme::Auto: break;
      }
      if (h_used < h) last = false;
      clock.advance(h_used, last);
      const double t_new = clock.now();
      const double x_out = scheme == Scheme::SquaredProcess ? std::sqrt(x_new) : x_new;

      if (can_explode(p_) && !(std::abs(x_out) < cfg_.explosion_threshold)) {
        report.exploded = true;
        report.threshold_crossing_time = t_new;
        report.last_value = std::isfinite(x_out) ? x_out : std::copysign(std::numeric_limits<double>::max(), x_out);
        const double coefficient = p_.rho / time_power(t, p_.beta);
        const double est = invert_profile(t, x, coefficient, p_.alpha);
        killing = killing_between(est, t, horizon_);
        report.tau_e_estimate = killing;
        break;
      }
      x = x_new;
      rec.push(t_new, x_out);
      report.last_value = x_out;
    }
    if (!report.exploded && !report.nonconvergent) report.last_value = scheme == Scheme::SquaredProcess ? std::sqrt(x) : x;
    return {rec.finish(killing), report};
  }

 private:
  double drift_at(double t, double x) const {
    double b = p_.rho * signed_power(x, p_.alpha) / time_power(t, p_.beta);
    if (p_.alpha < 0.0) b = std::clamp(b, -clamp_cap_, clamp_cap_);
    return b;
  }

  double euler_step(double t, double x, double h) {
    const double z = noise_.next();
    return x + drift_at(t, x) * h + std::sqrt(h) * z;
  }

  double rk4_step(double t, double x, double h) const {
    const double k1 = drift_at(t, x);
    const double k2 = drift_at(t + 0.5 * h, x + 0.5 * h * k1);
    const double k3 = drift_at(t + 0.5 * h, x + 0.5 * h * k2);
    const double k4 = drift_at(t + h, x + h * k3);
    const double x_new = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
    if (p_.rho >= 0.0 || (x_new * x > 0.0 && std::abs(x_new) <= std::abs(x))) return x_new;
    // RK4 overshoot near 0 under attraction: fall back to the exact flow with
    // the time factor frozen at the midpoint. For alpha < 1 it reaches 0 in
    // finite time and stays there.
    if (p_.alpha >= 1.0 || x == 0.0) return x_new * x > 0.0 ? x : 0.0;
    const double q = 1.0 - p_.alpha;
    const double r = std::pow(std::abs(x), q) + q * p_.rho * h / time_power(t + 0.5 * h, p_.beta);
    return r <= 0.0 ? 0.0 : std::copysign(std::pow(r, 1.0 / q), x);
  }

  // Y = X^2 with full truncation of the square root.
  double squared_step(double t, double y, double h) {
    const double z = noise_.next();
    const double yp = std::max(y, 0.0);
    const double y_new = y + (2.0 * p_.rho / time_power(t, p_.beta) + 1.0) * h + 2.0 * std::sqrt(yp) * std::sqrt(h) * z;
    return std::max(y_new, 0.0);
  }

  // Exact flow of x' = rho x^alpha / t^beta (frozen t) then the Gaussian
  // increment; steps landing at or below 0 are retried at half the step.
  double positive_step(double t, double x, double h, double& h_used) {
    const double q = 1.0 - p_.alpha;
    const double tb = time_power(t, p_.beta);
    double h_try = h;
    for (;;) {
      const double y = std::pow(std::pow(x, q) + q * p_.rho * h_try / tb, 1.0 / q);
      const double z = noise_.next();
      const double x_new = y + std::sqrt(h_try) * z;
      if (x_new > 0.0) {
        h_used = h_try;
        return x_new;
      }
      if (h_try * 0.5 < rule_.floor) {
        h_used = h_try;
        return y;
      }
      h_try *= 0.5;
    }
  }

  const Params& p_;
  const SimConfig& cfg_;
  double horizon_;
  NormalSource& noise_;
  StepRule rule_;
  double clamp_cap_;
};

void check_simulable(const Params& p) {
  check_well_formed(p);
  if (validate(p) == ValidityClass::Invalid) throw Error(ErrorCode::InvalidParameters, "parameters outside P");
}

}  // namespace

void check_config(const SimConfig& cfg, const Params& p) {
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw Error(ErrorCode::InvalidParameters, "dt must be > 0");
  if (!(cfg.explosion_threshold > std::max(std::abs(p.x0), 1.0))) {
    throw Error(ErrorCode::InvalidParameters, "explosion threshold must exceed max(|x0|, 1)");
  }
  if (cfg.blowup_refine_floor < 0.0) throw Error(ErrorCode::InvalidParameters, "refine floor must be >= 0");
}

Scheme resolve_scheme(const Params& p, Scheme requested) {
  const bool at_minus_one = on_boundary(p.alpha, -1.0);
  switch (requested) {
    case Scheme::Auto:
      if (p.rho == 0.0 || p.alpha > -1.0) return at_minus_one && p.rho != 0.0 ? Scheme::SquaredProcess : Scheme::DirectEM;
      return at_minus_one ? Scheme::SquaredProcess : Scheme::PositivityPreserving;
    case Scheme::SquaredProcess:
      if (!at_minus_one) throw Error(ErrorCode::InvalidParameters, "squared-process scheme needs alpha = -1");
      return requested;
    case Scheme::PositivityPreserving:
      if (!(p.alpha < 0.0 && p.rho > 0.0)) {
        throw Error(ErrorCode::InvalidParameters, "positivity-preserving scheme needs alpha < 0 and rho > 0");
      }
      return requested;
    case Scheme::DirectEM:
      if (p.alpha <= -1.0 && p.rho != 0.0) {
        throw Error(ErrorCode::InvalidParameters, "direct Euler is not defined for alpha <= -1");
      }
      return requested;
    case Scheme::ZeroNoiseODE:
      return requested;
  }
  return requested;
}

SimResult simulate(const Params& p, const SimConfig& cfg, double horizon, NormalSource& noise) {
  check_simulable(p);
  check_config(cfg, p);
  if (!(horizon > 1.0)) throw Error(ErrorCode::InvalidParameters, "horizon must be > 1");
  const Scheme scheme = resolve_scheme(p, cfg.scheme);
  return OriginalClockSimulator(p, cfg, horizon, noise).run(scheme);
}

SimResult simulate(const Params& p, const SimConfig& cfg, double horizon, std::uint64_t path_index) {
  StreamNormalSource noise({cfg.seed, path_index});
  return simulate(p, cfg, horizon, noise);
}

KilledPath simulate_transformed(const Params& p, const TimeChange& tc, const SimConfig& cfg, double s_horizon,
                                NormalSource& noise) {
  check_simulable(p);
  check_config(cfg, p);
  if (p.alpha <= -1.0 && p.rho != 0.0) {
    throw Error(ErrorCode::InvalidParameters, "transformed simulation needs alpha > -1");
  }
  if (!(s_horizon > 0.0) || !(s_horizon < tc.t1)) throw Error(ErrorCode::OutOfDomain, "need 0 < s_horizon < t1");

  const StepRule rule{cfg.dt, cfg.refine_floor(), cfg.adapt};
  const double cap = 1.0 / std::sqrt(cfg.dt);
  Clock clock(0.0, s_horizon);
  PathRecorder rec(cfg.store_full_path, 0.0, p.x0);
  double y = p.x0;
  std::optional<double> killing;
  std::size_t floor_steps = 0;

  auto main_drift = [&](double s, double v) {
    if (p.rho == 0.0) return 0.0;
    double b = p.rho * transformed_coefficient(p, tc, s) * signed_power(v, p.alpha);
    if (p.alpha < 0.0) b = std::clamp(b, -cap, cap);
    return b;
  };

  while (!clock.done()) {
    const double s = clock.now();
    const double remaining = clock.remaining();
    const auto d = eval(tc, s);
    const double main = main_drift(s, y);
    double h = rule.limit_by_drift(cfg.dt, y, main, p.alpha);
    if (cfg.adapt && tc.bounded_domain()) h = std::min(h, std::max(kEndpointStepFraction * (tc.t1 - s), rule.floor));
    floor_steps = (cfg.adapt && h <= rule.floor && h < cfg.dt) ? floor_steps + 1 : 0;
    if (floor_steps > kMaxFloorSteps) break;
    bool last = false;
    if (h >= remaining * (1.0 - 1e-12)) {
      h = remaining;
      last = true;
    }
    const double z = noise.next();
    const double y_new = y + (main - 0.5 * (d.phi_second / d.phi_prime) * y) * h + std::sqrt(h) * z;
    clock.advance(h, last);
    const double s_new = clock.now();
    if (can_explode(p) && !(std::abs(y_new) < cfg.explosion_threshold)) {
      const double coefficient = p.rho * transformed_coefficient(p, tc, s);
      killing = killing_between(invert_profile(s, y, coefficient, p.alpha), s, s_horizon);
      break;
    }
    y = y_new;
    rec.push(s_new, y);
  }
  return rec.finish(killing);
}

KilledPath simulate_transformed(const Params& p, const TimeChange& tc, const SimConfig& cfg, double s_horizon,
                                std::uint64_t path_index) {
  StreamNormalSource noise({cfg.seed, path_index});
  return simulate_transformed(p, tc, cfg, s_horizon, noise);
}

double default_eps_cut(const Params& p) { return make_power(p.alpha, p.beta).t1 * 1e-4; }

BridgeDraw simulate_bridge(const Params& p, const SimConfig& cfg, double eps_cut, NormalSource& noise) {
  check_well_formed(p);
  if (!(p.rho > 0.0 && p.alpha > 1.0 && 2.0 * p.beta > p.alpha + 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "bridge functional needs rho > 0, alpha > 1, 2 beta > alpha + 1");
  }
  if (!(cfg.dt > 0.0)) throw Error(ErrorCode::InvalidParameters, "dt must be > 0");
  const TimeChange tc = make_power(p.alpha, p.beta);
  const double t1 = tc.t1;
  const double delta = *tc.delta;
  if (!(eps_cut > 0.0 && eps_cut < t1)) throw Error(ErrorCode::InvalidParameters, "need 0 < eps_cut < t1");

  const double floor = cfg.refine_floor();
  Clock clock(0.0, t1 - eps_cut);
  double b = p.x0;
  double exponent = 0.0;
  while (!clock.done()) {
    const double s = clock.now();
    const double remaining = clock.remaining();
    double h = cfg.dt;
    if (cfg.adapt) h = std::min(h, std::max(kEndpointStepFraction * (t1 - s), floor));
    bool last = false;
    if (h >= remaining * (1.0 - 1e-12)) {
      h = remaining;
      last = true;
    }
    const double dw = std::sqrt(h) * noise.next();
    const double a = p.rho * signed_power(b, p.alpha);
    exponent += a * dw - 0.5 * a * a * h;
    b += dw - delta * b / (t1 - s) * h;
    clock.advance(h, last);
  }
  return {std::exp(exponent), b};
}

double simulate_bridge_functional(const Params& p, const SimConfig& cfg, double eps_cut, std::uint64_t path_index) {
  StreamNormalSource noise({cfg.seed, path_index});
  return simulate_bridge(p, cfg, eps_cut, noise).weight;
}

}  // namespace tidlab
