#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tidlab/law_types.hpp"

namespace tidlab {

/// Parameters of dX = dB + rho sgn(X)|X|^alpha / t^beta dt started at (t0, x0).
/// The start time is always 1 and x0 >= 0; symmetry and Brownian scaling
/// reduce every other initial condition to this one.
struct Params {
  double rho = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double x0 = 0.0;
  double t0 = 1.0;

  bool operator==(const Params&) const = default;
};

/// Throws InvalidParameters unless every field is finite, t0 == 1 and x0 >= 0.
void check_well_formed(const Params& p);

enum class ValidityClass { AttractiveP_minus, RepulsiveP_plus, BrownianBoundary, Invalid };

enum class Recurrence {
  RecurrentOnR,
  RecurrentOnClosedHalfLine,
  RecurrentOnOpenHalfLine,
  Transient,
  ConvergesToZeroAS,
  ExplodesAS,
  ExplodesWithPartialProbability,
};

enum class NormalizationKind { SqrtT, TPow, SqrtTLogT, ExpPower, None };

/// t -> n(t). TPow uses `exponent`; ExpPower is exp(rho t^(1-beta) / (1-beta)).
struct Normalization {
  NormalizationKind kind = NormalizationKind::None;
  double exponent = 0.0;
  double rho = 0.0;
  double beta = 0.0;

  static Normalization sqrt_t() { return {NormalizationKind::SqrtT}; }
  static Normalization t_pow(double e) { return {NormalizationKind::TPow, e}; }
  static Normalization sqrt_t_log_t() { return {NormalizationKind::SqrtTLogT}; }
  static Normalization exp_power(double rho, double beta) {
    return {NormalizationKind::ExpPower, 1.0 - beta, rho, beta};
  }
  static Normalization none() { return {}; }

  double operator()(double t) const;
  bool operator==(const Normalization&) const = default;
};

enum class EnvelopeKind { L, L_rho_alpha, L_rho_alpha_beta, scaled_L };

struct EnvelopeSpec {
  EnvelopeKind kind = EnvelopeKind::L;
  double constant = 1.0;

  bool operator==(const EnvelopeSpec&) const = default;
};

/// Asymptotic description valid under P(. | tau_e = infinity) in the
/// partially explosive regime.
struct ConditionalRegime {
  Recurrence recurrence = Recurrence::RecurrentOnR;
  Normalization normalization;
  LimitLawDescriptor limit_law;
  std::optional<EnvelopeSpec> limsup_envelope;

  bool operator==(const ConditionalRegime&) const = default;
};

struct Regime {
  ValidityClass validity = ValidityClass::Invalid;
  Recurrence recurrence = Recurrence::RecurrentOnR;
  Normalization normalization;
  /// Absent in the almost surely explosive regimes.
  std::optional<LimitLawDescriptor> limit_law;
  std::optional<EnvelopeSpec> limsup_envelope;
  std::optional<EnvelopeSpec> liminf_envelope;
  std::optional<ConditionalRegime> conditional_on_nonexplosion;
  /// Rule that decided the verdict, e.g. "critical-line/attractive".
  std::string rule;
  std::vector<std::string> notes;

  bool has_note(const std::string& tag) const;
  bool operator==(const Regime&) const = default;
};

ValidityClass validate(const Params& p);

/// Phase-diagram verdict for p. Throws InvalidParameters outside the
/// validity region.
Regime classify(const Params& p);

/// rho sgn(x)|x|^alpha / t^beta, with sgn(0) = 0.
double drift(const Params& p, double t, double x);

/// Potential V with -1/2 dV/dx = drift; logarithmic at alpha = -1.
double potential(const Params& p, double t, double x);

double envelope_value(const EnvelopeSpec& spec, const Params& p, double t);

// Constants multiplying the iterated-logarithm envelopes.
double c_rho_alpha(double rho, double alpha);
double c_rho_alpha_beta(double rho, double alpha, double beta);

/// sgn(x)|x|^a with sgn(0) = 0; fast paths for small integer exponents.
double signed_power(double x, double a);

/// Tolerant comparison used to place parameters on lines such as 2 beta = alpha + 1.
bool on_boundary(double a, double b);

std::string to_string(ValidityClass v);
std::string to_string(Recurrence r);
std::string to_string(EnvelopeKind k);
std::string describe(const Normalization& n);
std::string describe(const EnvelopeSpec& e);

}  // namespace tidlab
