#include "tidlab/mc_stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <string>
#include <thread>

#include "tidlab/error.hpp"
#include "tidlab/laws.hpp"

namespace tidlab {

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  unsigned n = 0;
  if (const char* env = std::getenv("TIDLAB_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0') n = static_cast<unsigned>(std::min<unsigned long>(v, 1024));
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

enum class SlotStatus { Ok, Exploded, Failed };

struct Slot {
  SlotStatus status = SlotStatus::Ok;
  double value = 0.0;
  std::string message;
};

// Path in the original clock plus whether it was killed before the horizon.
struct OriginalPath {
  KilledPath path;
  bool exploded = false;
};

OriginalPath produce_path(const EnsembleSpec& spec, std::size_t i, bool full_path) {
  SimConfig cfg = spec.cfg;
  cfg.store_full_path = full_path;
  if (spec.route.time_change) {
    const TimeChange& tc = *spec.route.time_change;
    const double s_horizon = phi_inverse(tc, spec.horizon);
    KilledPath y = simulate_transformed(spec.params, tc, cfg, s_horizon, i);
    const bool exploded = y.killing_time.has_value();
    return {scaling_invert(tc, y), exploded};
  }
  SimResult r = simulate(spec.params, cfg, spec.horizon, i);
  return {std::move(r.path), r.report.exploded};
}

double terminal_divisor(const EnsembleSpec& spec, const Regime* regime) {
  if (spec.norm_value) return *spec.norm_value;
  if (spec.normalization) return (*spec.normalization)(spec.horizon);
  const Normalization n = regime->conditional_on_nonexplosion ? regime->conditional_on_nonexplosion->normalization
                                                               : regime->normalization;
  if (n.kind == NormalizationKind::None) throw Error(ErrorCode::NoLimitLaw, "regime has no normalization");
  return n(spec.horizon);
}

void check_spec(const EnsembleSpec& spec) {
  check_well_formed(spec.params);
  if (validate(spec.params) == ValidityClass::Invalid) {
    throw Error(ErrorCode::InvalidParameters, "parameters outside the validity region");
  }
  if (spec.n_paths == 0) throw Error(ErrorCode::InvalidParameters, "n_paths must be >= 1");
  if (!(spec.horizon > 1.0)) throw Error(ErrorCode::InvalidParameters, "horizon must be > 1");
  check_config(spec.cfg, spec.params);
}

}  // namespace

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
  check_spec(spec);
  const Functional f = spec.functional;

  std::optional<Regime> regime;
  if (f == Functional::TerminalNormalized && !spec.norm_value && !spec.normalization) regime = classify(spec.params);
  if ((f == Functional::RateRatio && !spec.rate_exponent) || (f == Functional::EnvelopeSup && !spec.envelope)) {
    regime = classify(spec.params);
  }

  double divisor = 1.0;
  if (f == Functional::TerminalNormalized) divisor = terminal_divisor(spec, regime ? &*regime : nullptr);
  double nu = 0.0;
  if (f == Functional::RateRatio) nu = spec.rate_exponent ? *spec.rate_exponent : transient_rate(spec.params).nu;
  EnvelopeSpec envelope;
  if (f == Functional::EnvelopeSup) {
    if (spec.envelope) {
      envelope = *spec.envelope;
    } else if (regime->limsup_envelope) {
      envelope = *regime->limsup_envelope;
    } else {
      throw Error(ErrorCode::InvalidParameters, "regime carries no limsup envelope");
    }
    if (!(spec.horizon / 2.0 > std::exp(1.0))) {
      throw Error(ErrorCode::InvalidParameters, "envelope window [T/2, T] needs T/2 > e");
    }
  }
  double eps_cut = 0.0;
  if (f == Functional::GirsanovWeight) eps_cut = spec.eps_cut ? *spec.eps_cut : default_eps_cut(spec.params);

  std::vector<Slot> slots(spec.n_paths);
  parallel_for(spec.n_paths, worker_count(spec.threads), [&](std::size_t i) {
    Slot& slot = slots[i];
    try {
      if (f == Functional::GirsanovWeight) {
        slot.value = simulate_bridge_functional(spec.params, spec.cfg, eps_cut, i);
        return;
      }
      const OriginalPath op = produce_path(spec, i, f == Functional::EnvelopeSup);
      if (f == Functional::ExplosionIndicator) {
        slot.value = op.exploded ? 1.0 : 0.0;
        if (op.exploded) slot.status = SlotStatus::Exploded;
        return;
      }
      if (op.exploded) {
        slot.status = SlotStatus::Exploded;
        return;
      }
      const double x_t = op.path.values.back();
      switch (f) {
        case Functional::TerminalNormalized: slot.value = x_t / divisor; break;
        case Functional::TerminalRaw: slot.value = x_t; break;
        case Functional::RateRatio: slot.value = std::abs(x_t) / std::pow(spec.horizon, nu); break;
        case Functional::EnvelopeSup: {
          double sup = 0.0;
          for (std::size_t k = 0; k < op.path.size(); ++k) {
            const double t = op.path.times[k];
            if (t < spec.horizon / 2.0) continue;
            sup = std::max(sup, std::abs(op.path.values[k]) / envelope_value(envelope, spec.params, t));
          }
          slot.value = sup;
          break;
        }
        default: break;
      }
    } catch (const Error& e) {
      slot.status = SlotStatus::Failed;
      slot.message = e.what();
    }
  });

  EnsembleResult out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const Slot& s = slots[i];
    if (s.status == SlotStatus::Failed) {
      out.failures.push_back({i, s.message});
      continue;
    }
    if (s.status == SlotStatus::Exploded) {
      ++out.n_exploded;
      if (f != Functional::ExplosionIndicator) continue;
    } else {
      ++out.n_survivors;
    }
    out.samples.push_back(s.value);
    out.path_indices.push_back(i);
  }
  return out;
}

EstimateWithCI wilson_interval(std::size_t successes, std::size_t n, double z) {
  if (n == 0) throw Error(ErrorCode::EmptySample, "Wilson interval of an empty sample");
  if (successes > n) throw Error(ErrorCode::InvalidParameters, "successes exceed trials");
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  EstimateWithCI e;
  e.value = p;
  e.ci_low = std::clamp(std::min(centre - half, p), 0.0, 1.0);
  e.ci_high = std::clamp(std::max(centre + half, p), 0.0, 1.0);
  e.n = n;
  e.method = CiMethod::Wilson;
  return e;
}

EstimateWithCI mean_ci(std::span<const double> samples, double z) {
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "mean of an empty sample");
  const double n = static_cast<double>(samples.size());
  const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double half = z * sd / std::sqrt(n);
  return {mean, mean - half, mean + half, samples.size(), CiMethod::NormalApprox};
}

KSReport ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf,
                     std::optional<double> threshold) {
  if (samples.empty()) throw Error(ErrorCode::EmptySample, "KS distance of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, std::abs(static_cast<double>(i + 1) / n - f), std::abs(static_cast<double>(i) / n - f)});
  }
  KSReport r;
  r.statistic = std::min(d, 1.0);
  r.n = sorted.size();
  r.threshold = threshold ? *threshold : 1.63 / std::sqrt(n);
  r.pass = r.statistic < r.threshold;
  return r;
}

ExplosionEstimate explosion_prob_direct(const Params& p, const SimConfig& cfg, std::size_t n, double horizon,
                                        unsigned threads) {
  check_well_formed(p);
  if (validate(p) == ValidityClass::Invalid) throw Error(ErrorCode::InvalidParameters, "parameters outside validity region");
  if (n == 0) throw Error(ErrorCode::InvalidParameters, "n must be >= 1");
  if (!(horizon > 1.0)) throw Error(ErrorCode::InvalidParameters, "horizon must be > 1");
  ExplosionEstimate out;
  if (!(p.rho > 0.0 && p.alpha > 1.0)) {
    out.at_horizon = wilson_interval(0, n);
    out.at_double_horizon = out.at_horizon;
    return out;
  }
  check_config(cfg, p);

  // Each path runs to 2T once; the explosion time then decides both counts.
  const bool use_power_clock = 2.0 * p.beta > p.alpha + 1.0 && !on_boundary(2.0 * p.beta, p.alpha + 1.0);
  std::optional<TimeChange> tc;
  if (use_power_clock) tc = make_power(p.alpha, p.beta);
  SimConfig c = cfg;
  c.store_full_path = false;

  std::vector<double> killing(n, std::numeric_limits<double>::infinity());
  parallel_for(n, worker_count(threads), [&](std::size_t i) {
    if (tc) {
      const KilledPath y = simulate_transformed(p, *tc, c, phi_inverse(*tc, 2.0 * horizon), i);
      if (y.killing_time) killing[i] = phi(*tc, *y.killing_time);
    } else {
      const SimResult r = simulate(p, c, 2.0 * horizon, i);
      if (r.report.exploded) killing[i] = *r.path.killing_time;
    }
  });

  std::size_t by_t = 0, by_2t = 0;
  for (double k : killing) {
    if (k <= horizon) ++by_t;
    if (k <= 2.0 * horizon) ++by_2t;
  }
  out.at_horizon = wilson_interval(by_t, n);
  out.at_double_horizon = wilson_interval(by_2t, n);
  out.doubling_delta = out.at_double_horizon.value - out.at_horizon.value;
  return out;
}

GirsanovEstimate explosion_prob_girsanov(const Params& p, const SimConfig& cfg, std::size_t n,
                                         std::optional<double> eps_cut, unsigned threads) {
  check_well_formed(p);
  if (!(p.rho > 0.0 && p.alpha > 1.0 && 2.0 * p.beta > p.alpha + 1.0)) {
    throw Error(ErrorCode::InvalidParameters, "Girsanov estimator needs rho > 0, alpha > 1, 2 beta > alpha + 1");
  }
  if (n == 0) throw Error(ErrorCode::InvalidParameters, "n must be >= 1");
  const double eps = eps_cut ? *eps_cut : default_eps_cut(p);
  std::vector<double> w(n);
  parallel_for(n, worker_count(threads), [&](std::size_t i) { w[i] = simulate_bridge_functional(p, cfg, eps, i); });

  GirsanovEstimate g;
  g.estimate = mean_ci(w);
  const double m = g.estimate.value;
  double m2 = 0.0, m4 = 0.0;
  for (double x : w) {
    const double d2 = (x - m) * (x - m);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= static_cast<double>(n);
  m4 /= static_cast<double>(n);
  g.kurtosis = m2 > 0.0 ? m4 / (m2 * m2) : 0.0;
  g.heavy_tail_warning = g.kurtosis > 100.0;
  g.min_weight = *std::min_element(w.begin(), w.end());
  return g;
}

RateCheck rate_check(const Params& p, const SimConfig& cfg, std::size_t n, double horizon, unsigned threads) {
  const Regime regime = classify(p);
  EnsembleSpec spec;
  spec.params = p;
  spec.cfg = cfg;
  spec.n_paths = n;
  spec.horizon = horizon;
  spec.threads = threads;

  RateCheck rc;
  const bool deterministic = regime.limit_law && regime.limit_law->kind == LawKind::DeterministicLimit;
  const bool linear_gaussian = on_boundary(p.alpha, 1.0) && p.rho > 0.0 && regime.recurrence == Recurrence::Transient &&
                               regime.limit_law && regime.limit_law->kind == LawKind::Gaussian;
  if (deterministic) {
    const TransientRate tr = transient_rate(p);
    spec.functional = Functional::RateRatio;
    spec.rate_exponent = tr.nu;
    const EnsembleResult r = run_ensemble(spec);
    rc.ratio = mean_ci(r.samples);
    rc.predicted = tr.ell;
    rc.law = *regime.limit_law;
    rc.n_used = r.samples.size();
    return rc;
  }
  if (linear_gaussian) {
    spec.functional = Functional::TerminalNormalized;
    spec.normalization = regime.normalization;
    // On the critical line the exponential clock makes the drift linear and
    // time-homogeneous, so long horizons cost O(log T) steps.
    if (on_boundary(2.0 * p.beta, p.alpha + 1.0)) spec.route = Route::transformed(make_exponential());
    const EnsembleResult r = run_ensemble(spec);
    const LimitLaw law(*regime.limit_law);
    rc.ks = ks_distance(r.samples, [&](double x) { return law.cdf(x); });
    rc.predicted = regime.limit_law->mean;
    rc.law = *regime.limit_law;
    rc.n_used = r.samples.size();
    return rc;
  }
  throw Error(ErrorCode::InvalidParameters, "rate check needs a deterministic-rate or linear Gaussian regime");
}

EnvelopeSummary envelope_diagnostic(const Params& p, const SimConfig& cfg, std::size_t n, double horizon,
                                    const EnvelopeSpec& spec, unsigned threads) {
  EnsembleSpec es;
  es.params = p;
  es.cfg = cfg;
  es.n_paths = n;
  es.horizon = horizon;
  es.functional = Functional::EnvelopeSup;
  es.envelope = spec;
  es.threads = threads;
  const EnsembleResult r = run_ensemble(es);
  if (r.samples.empty()) throw Error(ErrorCode::EmptySample, "no surviving paths");
  return {quantile(r.samples, 0.5), quantile(r.samples, 0.1), quantile(r.samples, 0.9), r.samples.size()};
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::EmptySample, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorCode::InvalidParameters, "slope needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw Error(ErrorCode::DomainError, "x values are all equal");
  return sxy / sxx;
}

}  // namespace tidlab
