#include "tidlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tidlab/error.hpp"
#include "tidlab/laws.hpp"

namespace tidlab {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameters: return "InvalidParameters";
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::DegenerateExponent: return "DegenerateExponent";
    case ErrorCode::NonIntegrable: return "NonIntegrable";
    case ErrorCode::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorCode::NoLimitLaw: return "NoLimitLaw";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::NonConvergentStep: return "NonConvergentStep";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool on_boundary(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

void check_well_formed(const Params& p) {
  if (!std::isfinite(p.rho) || !std::isfinite(p.alpha) || !std::isfinite(p.beta) || !std::isfinite(p.x0) ||
      !std::isfinite(p.t0)) {
    throw Error(ErrorCode::InvalidParameters, "parameters must be finite");
  }
  if (p.t0 != 1.0) throw Error(ErrorCode::InvalidParameters, "initial time must be 1");
  if (p.x0 < 0.0) throw Error(ErrorCode::InvalidParameters, "x0 must be >= 0");
}

ValidityClass validate(const Params& p) {
  if (p.rho == 0.0) return ValidityClass::BrownianBoundary;
  if (p.rho > 0.0) return ValidityClass::RepulsiveP_plus;
  if (p.alpha > -1.0 && !on_boundary(p.alpha, -1.0)) return ValidityClass::AttractiveP_minus;
  return ValidityClass::Invalid;
}

bool Regime::has_note(const std::string& tag) const {
  return std::find(notes.begin(), notes.end(), tag) != notes.end();
}

double Normalization::operator()(double t) const {
  switch (kind) {
    case NormalizationKind::SqrtT: return std::sqrt(t);
    case NormalizationKind::TPow: return std::pow(t, exponent);
    case NormalizationKind::SqrtTLogT: return std::sqrt(t * std::log(t));
    case NormalizationKind::ExpPower: return std::exp(rho * std::pow(t, 1.0 - beta) / (1.0 - beta));
    case NormalizationKind::None: return 1.0;
  }
  return 1.0;
}

double signed_power(double x, double a) {
  if (x == 0.0) return 0.0;
  if (a == 1.0) return x;
  if (a == 0.0) return x > 0.0 ? 1.0 : -1.0;
  if (a == 2.0) return x * std::abs(x);
  if (a == 3.0) return x * x * x;
  if (a == -1.0) return 1.0 / x;
  const double m = std::pow(std::abs(x), a);
  return x > 0.0 ? m : -m;
}

namespace {

double time_power(double t, double beta) {
  if (beta == 0.0) return 1.0;
  if (beta == 1.0) return t;
  return std::pow(t, beta);
}

EnvelopeSpec env(EnvelopeKind k, double c = 1.0) { return {k, c}; }

// Shared by the Brownian verdict and every regime that behaves like it.
void gaussian_sqrt_t(Regime& r) {
  r.recurrence = Recurrence::RecurrentOnR;
  r.normalization = Normalization::sqrt_t();
  r.limit_law = LimitLawDescriptor::gaussian(0.0, 1.0);
  r.limsup_envelope = env(EnvelopeKind::L);
}

void critical_attractive(const Params& p, Regime& r) {
  r.rule = "critical-line/attractive";
  r.recurrence = Recurrence::RecurrentOnR;
  r.normalization = Normalization::sqrt_t();
  if (on_boundary(p.alpha, 1.0)) {
    r.limit_law = LimitLawDescriptor::gaussian(0.0, 1.0 / (1.0 - 2.0 * p.rho));
    r.limsup_envelope = env(EnvelopeKind::scaled_L, 1.0 / std::sqrt(1.0 - 2.0 * p.rho));
  } else {
    r.limit_law = LimitLawDescriptor::lambda(p.rho, p.alpha);
    r.limsup_envelope = p.alpha < 1.0 ? env(EnvelopeKind::L) : env(EnvelopeKind::L_rho_alpha);
  }
}

void critical_repulsive(const Params& p, Regime& r) {
  const double a = p.alpha;
  if (on_boundary(a, -1.0)) {
    r.rule = "critical-line/repulsive/bessel";
    r.notes.push_back("bessel");
    if (on_boundary(p.rho, 0.5)) {
      r.recurrence = Recurrence::RecurrentOnOpenHalfLine;
    } else if (p.rho < 0.5) {
      r.recurrence = Recurrence::RecurrentOnClosedHalfLine;
    } else {
      r.recurrence = Recurrence::Transient;
      r.notes.push_back("log-liminf");
    }
    r.normalization = Normalization::sqrt_t();
    r.limit_law = LimitLawDescriptor::sqrt_gamma(p.rho + 0.5, 2.0);
    r.limsup_envelope = env(EnvelopeKind::L);
  } else if (on_boundary(a, 1.0)) {
    r.rule = "critical-line/repulsive/linear";
    r.notes.push_back("friedman-linear");
    if (on_boundary(p.rho, 0.5)) {
      r.recurrence = Recurrence::RecurrentOnR;
      r.normalization = Normalization::sqrt_t_log_t();
      r.limit_law = LimitLawDescriptor::gaussian(0.0, 1.0);
      r.notes.push_back("envelope-sqrt-2t-lnt-lnlnlnt");
    } else if (p.rho < 0.5) {
      r.recurrence = Recurrence::RecurrentOnR;
      r.normalization = Normalization::sqrt_t();
      r.limit_law = LimitLawDescriptor::gaussian(0.0, 1.0 / (1.0 - 2.0 * p.rho));
      r.limsup_envelope = env(EnvelopeKind::scaled_L, std::sqrt(2.0 / (1.0 - 2.0 * p.rho)));
    } else {
      r.recurrence = Recurrence::Transient;
      r.normalization = Normalization::t_pow(p.rho);
      r.limit_law = LimitLawDescriptor::gaussian(p.x0, 1.0 / (2.0 * p.rho - 1.0));
      r.notes.push_back("almost-sure-limit");
    }
  } else if (a > -1.0 && a < 1.0) {
    r.rule = "critical-line/repulsive/sublinear";
    r.recurrence = Recurrence::RecurrentOnR;
    r.normalization = Normalization::sqrt_t();
    r.limit_law = LimitLawDescriptor::lambda(p.rho, a);
    r.limsup_envelope = env(EnvelopeKind::L);
  } else if (a < -1.0) {
    r.rule = "critical-line/repulsive/singular";
    r.recurrence = Recurrence::Transient;
    r.normalization = Normalization::sqrt_t();
    r.limit_law = LimitLawDescriptor::lambda(p.rho, a);
    r.limsup_envelope = env(EnvelopeKind::L);
    r.liminf_envelope = env(EnvelopeKind::L_rho_alpha);
  } else {
    r.rule = "critical-line/repulsive/superlinear";
    r.recurrence = Recurrence::ExplodesAS;
    r.normalization = Normalization::none();
    r.notes.push_back("blowup-profile-critical");
  }
}

void above_repulsive(const Params& p, Regime& r) {
  const double a = p.alpha;
  if (a > 1.0 && !on_boundary(a, 1.0)) {
    r.rule = "above-line/repulsive/superlinear";
    r.recurrence = Recurrence::ExplodesWithPartialProbability;
    r.normalization = Normalization::none();
    ConditionalRegime c;
    c.recurrence = Recurrence::RecurrentOnR;
    c.normalization = Normalization::sqrt_t();
    c.limit_law = LimitLawDescriptor::gaussian(0.0, 1.0);
    c.limsup_envelope = env(EnvelopeKind::L);
    r.conditional_on_nonexplosion = c;
    r.notes.push_back("conditional-on-nonexplosion");
    r.notes.push_back("blowup-profile-critical");
  } else if (a > -1.0 && !on_boundary(a, -1.0)) {
    r.rule = "above-line/repulsive/moderate";
    gaussian_sqrt_t(r);
  } else {
    r.rule = "above-line/repulsive/singular";
    r.normalization = Normalization::sqrt_t();
    r.limit_law = LimitLawDescriptor::half_gaussian();
    r.limsup_envelope = env(EnvelopeKind::L);
    if (on_boundary(a, -1.0)) {
      r.recurrence = Recurrence::RecurrentOnClosedHalfLine;
      r.notes.push_back("bessel");
    } else {
      r.recurrence = p.beta >= 0.0 ? Recurrence::RecurrentOnOpenHalfLine : Recurrence::Transient;
      // Only the lower bound liminf X / L >= 1 is known here.
      r.liminf_envelope = env(EnvelopeKind::L_rho_alpha_beta);
      r.notes.push_back("liminf-lower-bound-only");
    }
  }
}

void below_attractive(const Params& p, Regime& r) {
  r.rule = "below-line/attractive";
  r.recurrence = p.beta >= 0.0 ? Recurrence::RecurrentOnR : Recurrence::ConvergesToZeroAS;
  r.normalization = Normalization::t_pow(p.beta / (p.alpha + 1.0));
  if (on_boundary(p.alpha, 1.0)) {
    r.limit_law = LimitLawDescriptor::gaussian(0.0, 1.0 / (2.0 * std::abs(p.rho)));
  } else {
    r.limit_law = LimitLawDescriptor::pi(p.rho, p.alpha);
  }
  r.limsup_envelope = env(EnvelopeKind::L_rho_alpha_beta);
}

void below_repulsive(const Params& p, Regime& r) {
  const double a = p.alpha;
  if (on_boundary(a, 1.0)) {
    r.rule = "below-line/repulsive/linear";
    r.recurrence = Recurrence::Transient;
    r.normalization = Normalization::exp_power(p.rho, p.beta);
    const auto lc = linear_case_params(p);
    r.limit_law = LimitLawDescriptor::gaussian(lc.m, lc.sigma2);
    r.notes.push_back("almost-sure-limit");
  } else if (a < 1.0) {
    r.rule = "below-line/repulsive/sublinear";
    r.recurrence = Recurrence::Transient;
    const auto rate = transient_rate(p);
    r.normalization = Normalization::t_pow(rate.nu);
    r.limit_law = LimitLawDescriptor::deterministic(rate.ell);
    r.notes.push_back("deterministic-rate");
    r.notes.push_back("absolute-value");
  } else {
    r.rule = "below-line/repulsive/superlinear";
    r.recurrence = Recurrence::ExplodesAS;
    r.normalization = Normalization::none();
    r.notes.push_back("blowup-profile-subcritical");
  }
}

}  // namespace

Regime classify(const Params& p) {
  check_well_formed(p);
  Regime r;
  r.validity = validate(p);
  if (r.validity == ValidityClass::Invalid) {
    throw Error(ErrorCode::InvalidParameters, "rho < 0 with alpha <= -1 is outside P");
  }
  if (r.validity == ValidityClass::BrownianBoundary) {
    r.rule = "brownian";
    gaussian_sqrt_t(r);
    return r;
  }
  const bool attractive = r.validity == ValidityClass::AttractiveP_minus;
  const double lhs = 2.0 * p.beta;
  const double rhs = p.alpha + 1.0;
  if (on_boundary(lhs, rhs)) {
    attractive ? critical_attractive(p, r) : critical_repulsive(p, r);
  } else if (lhs > rhs) {
    if (attractive) {
      r.rule = "above-line/attractive";
      gaussian_sqrt_t(r);
    } else {
      above_repulsive(p, r);
    }
  } else {
    attractive ? below_attractive(p, r) : below_repulsive(p, r);
  }
  return r;
}

double drift(const Params& p, double t, double x) {
  if (p.alpha < 0.0 && x == 0.0) throw Error(ErrorCode::SingularPoint, "drift is singular at x = 0 for alpha < 0");
  return p.rho * signed_power(x, p.alpha) / time_power(t, p.beta);
}

double potential(const Params& p, double t, double x) {
  if (x == 0.0) throw Error(ErrorCode::SingularPoint, "potential evaluated at x = 0");
  const double tb = time_power(t, p.beta);
  if (on_boundary(p.alpha, -1.0)) return -2.0 * p.rho * std::log(std::abs(x)) / tb;
  return -(2.0 * p.rho / (p.alpha + 1.0)) * std::pow(std::abs(x), p.alpha + 1.0) / tb;
}

double c_rho_alpha(double rho, double alpha) { return std::abs(alpha + 1.0) / (2.0 * std::abs(rho)); }

double c_rho_alpha_beta(double rho, double alpha, double beta) {
  return std::abs(alpha + 1.0 - 2.0 * beta) / (2.0 * std::abs(rho));
}

double envelope_value(const EnvelopeSpec& spec, const Params& p, double t) {
  switch (spec.kind) {
    case EnvelopeKind::L:
    case EnvelopeKind::scaled_L: {
      const double lll = t > 1.0 ? std::log(std::log(t)) : -1.0;
      if (!(lll > 0.0)) throw Error(ErrorCode::DomainError, "ln ln t <= 0");
      return spec.constant * std::sqrt(2.0 * t * lll);
    }
    case EnvelopeKind::L_rho_alpha: {
      const double lll = t > 1.0 ? std::log(std::log(t)) : -1.0;
      if (!(lll > 0.0)) throw Error(ErrorCode::DomainError, "ln ln t <= 0");
      return spec.constant * std::sqrt(t) * std::pow(c_rho_alpha(p.rho, p.alpha) * lll, 1.0 / (p.alpha + 1.0));
    }
    case EnvelopeKind::L_rho_alpha_beta: {
      const double lt = std::log(t);
      if (!(lt > 0.0)) throw Error(ErrorCode::DomainError, "ln t <= 0");
      return spec.constant *
             std::pow(c_rho_alpha_beta(p.rho, p.alpha, p.beta) * std::pow(t, p.beta) * lt, 1.0 / (p.alpha + 1.0));
    }
  }
  return 0.0;
}

std::string to_string(ValidityClass v) {
  switch (v) {
    case ValidityClass::AttractiveP_minus: return "AttractiveP_minus";
    case ValidityClass::RepulsiveP_plus: return "RepulsiveP_plus";
    case ValidityClass::BrownianBoundary: return "BrownianBoundary";
    case ValidityClass::Invalid: return "Invalid";
  }
  return "?";
}

std::string to_string(Recurrence r) {
  switch (r) {
    case Recurrence::RecurrentOnR: return "RecurrentOnR";
    case Recurrence::RecurrentOnClosedHalfLine: return "RecurrentOnClosedHalfLine";
    case Recurrence::RecurrentOnOpenHalfLine: return "RecurrentOnOpenHalfLine";
    case Recurrence::Transient: return "Transient";
    case Recurrence::ConvergesToZeroAS: return "ConvergesToZeroAS";
    case Recurrence::ExplodesAS: return "ExplodesAS";
    case Recurrence::ExplodesWithPartialProbability: return "ExplodesWithPartialProbability";
  }
  return "?";
}

std::string to_string(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::L: return "L";
    case EnvelopeKind::L_rho_alpha: return "L_rho_alpha";
    case EnvelopeKind::L_rho_alpha_beta: return "L_rho_alpha_beta";
    case EnvelopeKind::scaled_L: return "scaled_L";
  }
  return "?";
}

std::string describe(const Normalization& n) {
  std::ostringstream os;
  os.precision(6);
  switch (n.kind) {
    case NormalizationKind::SqrtT: os << "sqrt_t"; break;
    case NormalizationKind::TPow: os << "t_pow(" << n.exponent << ")"; break;
    case NormalizationKind::SqrtTLogT: os << "sqrt_t_log_t"; break;
    case NormalizationKind::ExpPower: os << "exp_power(" << n.rho << "," << n.exponent << ")"; break;
    case NormalizationKind::None: os << "none"; break;
  }
  return os.str();
}

std::string describe(const EnvelopeSpec& e) {
  std::ostringstream os;
  os.precision(6);
  os << to_string(e.kind);
  if (e.constant != 1.0) os << "*" << e.constant;
  return os.str();
}

}  // namespace tidlab
