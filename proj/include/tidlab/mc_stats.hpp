#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tidlab/model.hpp"
#include "tidlab/sde.hpp"
#include "tidlab/time_change.hpp"

namespace tidlab {

enum class Functional {
  TerminalNormalized,
  TerminalRaw,
  ExplosionIndicator,
  GirsanovWeight,
  RateRatio,
  EnvelopeSup,
};

/// How paths are produced: directly in the original clock, or in the clock
/// of a change of time and mapped back through the inverse scaling.
struct Route {
  std::optional<TimeChange> time_change;

  static Route direct() { return {}; }
  static Route transformed(TimeChange tc) { return {tc}; }
};

struct EnsembleSpec {
  Params params;
  SimConfig cfg;
  std::size_t n_paths = 1;
  double horizon = 2.0;
  Functional functional = Functional::TerminalNormalized;
  Route route;
  /// n(T) for TerminalNormalized; defaults to the regime's normalization.
  std::optional<Normalization> normalization;
  /// Constant divisor that overrides `normalization` when set.
  std::optional<double> norm_value;
  /// Exponent of T for RateRatio; defaults to the transient rate exponent.
  std::optional<double> rate_exponent;
  /// Envelope for EnvelopeSup.
  std::optional<EnvelopeSpec> envelope;
  /// Tail cut for GirsanovWeight; defaults to t1 * 1e-4.
  std::optional<double> eps_cut;
  /// Worker count; 0 reads TIDLAB_THREADS (0 or unset = hardware concurrency).
  unsigned threads = 0;
};

struct PathFailure {
  std::size_t path_index;
  std::string message;
};

struct EnsembleResult {
  /// Functional values in path_index order (dropped paths omitted).
  std::vector<double> samples;
  std::vector<std::size_t> path_indices;
  std::size_t n_exploded = 0;
  std::size_t n_survivors = 0;
  std::vector<PathFailure> failures;
};

/// Worker count from TIDLAB_THREADS (0 or unset = hardware concurrency).
unsigned worker_count(unsigned requested = 0);

/// Runs body(i) for i in [0, n) on up to `threads` workers. Results must be
/// written to slots keyed by i.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

EnsembleResult run_ensemble(const EnsembleSpec& spec);

enum class CiMethod { Wilson, NormalApprox };

struct EstimateWithCI {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n = 0;
  CiMethod method = CiMethod::NormalApprox;

  bool overlaps(const EstimateWithCI& other) const {
    return ci_low <= other.ci_high && other.ci_low <= ci_high;
  }
};

EstimateWithCI wilson_interval(std::size_t successes, std::size_t n, double z = 1.959963984540054);
EstimateWithCI mean_ci(std::span<const double> samples, double z = 1.959963984540054);

struct KSReport {
  double statistic = 0.0;
  std::size_t n = 0;
  bool pass = false;
  double threshold = 0.0;
};

/// Kolmogorov-Smirnov distance between the sample and a continuous CDF.
/// Default threshold 1.63 / sqrt(n).
KSReport ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf,
                     std::optional<double> threshold = std::nullopt);

struct ExplosionEstimate {
  /// Fraction exploded by the horizon (estimates P(tau_e <= horizon)).
  EstimateWithCI at_horizon;
  /// Same paths continued to twice the horizon.
  EstimateWithCI at_double_horizon;
  double doubling_delta = 0.0;
};

/// Requires rho > 0, alpha > 1 (other parameters give a zero fraction
/// without simulation when rho < 0 or alpha <= 1). When 2 beta > alpha + 1
/// paths are run in the power-change clock, which maps [1, T] onto
/// [0, phi^{-1}(T)] and preserves explosion.
ExplosionEstimate explosion_prob_direct(const Params& p, const SimConfig& cfg, std::size_t n, double horizon,
                                        unsigned threads = 0);

struct GirsanovEstimate {
  /// Estimates P(tau_e = infinity).
  EstimateWithCI estimate;
  double kurtosis = 0.0;
  bool heavy_tail_warning = false;
  double min_weight = 0.0;
};

GirsanovEstimate explosion_prob_girsanov(const Params& p, const SimConfig& cfg, std::size_t n,
                                         std::optional<double> eps_cut = std::nullopt, unsigned threads = 0);

struct RateCheck {
  /// alpha < 1: mean of |X_T| / T^nu against `predicted` (= ell).
  std::optional<EstimateWithCI> ratio;
  double predicted = 0.0;
  /// alpha = 1: KS of X_T / n(T) against the predicted Gaussian.
  std::optional<KSReport> ks;
  LimitLawDescriptor law;
  std::size_t n_used = 0;
};

RateCheck rate_check(const Params& p, const SimConfig& cfg, std::size_t n, double horizon, unsigned threads = 0);

struct EnvelopeSummary {
  double median = 0.0;
  double q10 = 0.0;
  double q90 = 0.0;
  std::size_t n = 0;
};

/// Finite-horizon diagnostic: distribution of sup_{t in [T/2, T]} |X_t| / envelope(t).
/// Ratios of order one that concentrate slowly are expected; the a.s. limsup
/// statement itself is not testable at finite T.
EnvelopeSummary envelope_diagnostic(const Params& p, const SimConfig& cfg, std::size_t n, double horizon,
                                    const EnvelopeSpec& spec, unsigned threads = 0);

double quantile(std::vector<double> values, double q);

/// Least-squares slope of y on x.
double ols_slope(std::span<const double> x, std::span<const double> y);

}  // namespace tidlab
