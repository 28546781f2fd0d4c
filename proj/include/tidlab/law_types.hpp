#pragma once

#include <string>

namespace tidlab {

enum class LawKind {
  Gaussian,
  HalfGaussian,
  SqrtGamma,
  Lambda,
  Pi,
  PointMassZero,
  DeterministicLimit,
};

enum class Support { R, HalfLinePos };

/// Plain description of a limit law. Evaluation lives in laws.hpp.
///
/// Field usage by kind:
///   Gaussian            mean, variance
///   SqrtGamma           shape, scale (of the squared variable)
///   Lambda, Pi          rho, alpha
///   DeterministicLimit  ell
struct LimitLawDescriptor {
  LawKind kind = LawKind::Gaussian;
  Support support = Support::R;
  double mean = 0.0;
  double variance = 1.0;
  double shape = 0.0;
  double scale = 0.0;
  double rho = 0.0;
  double alpha = 0.0;
  double ell = 0.0;

  static LimitLawDescriptor gaussian(double mean, double variance);
  static LimitLawDescriptor half_gaussian();
  static LimitLawDescriptor sqrt_gamma(double shape, double scale);
  static LimitLawDescriptor lambda(double rho, double alpha);
  static LimitLawDescriptor pi(double rho, double alpha);
  static LimitLawDescriptor point_mass_zero();
  static LimitLawDescriptor deterministic(double ell);

  bool operator==(const LimitLawDescriptor&) const = default;
};

std::string to_string(LawKind kind);
std::string describe(const LimitLawDescriptor& law);

}  // namespace tidlab
