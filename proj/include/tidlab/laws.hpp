#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "tidlab/law_types.hpp"
#include "tidlab/model.hpp"
#include "tidlab/rng.hpp"

namespace tidlab {

struct Quadrature {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  unsigned max_subdivisions = 15;
};

enum class NormalizerKind { Lambda, Pi };

/// Z = int over E_alpha of exp(2 rho |x|^(alpha+1) / (alpha+1)) [exp(-x^2/2)] dx.
/// Throws NonIntegrable outside the integrability region and
/// ToleranceNotMet when the quadrature error bound exceeds the tolerances.
double normalizer(double rho, double alpha, NormalizerKind kind, const Quadrature& q = {});

/// True when the Lambda density is integrable: alpha < 1, alpha = 1 with
/// rho < 1/2, or alpha > 1 with rho <= 0 (and rho >= 0 when alpha <= -1).
bool lambda_integrable(double rho, double alpha);
bool pi_integrable(double rho, double alpha);

/// Evaluable law. Lambda/Pi laws carry their normalizer and an inverse-CDF
/// table built once at construction; the object is immutable afterwards.
class LimitLaw {
 public:
  static constexpr std::size_t kTableKnots = 4096;

  explicit LimitLaw(const LimitLawDescriptor& descriptor, const Quadrature& q = {});

  const LimitLawDescriptor& descriptor() const { return descriptor_; }
  double pdf(double x) const;
  double cdf(double x) const;
  /// Inverse CDF (table-based for Lambda/Pi).
  double quantile(double u) const;
  std::vector<double> sample(const RngStreamSpec& rng, std::size_t n) const;
  /// Normalizer (Lambda/Pi only, otherwise 1).
  double z() const { return z_; }

 private:
  double log_kernel(double x) const;
  double cell_integral(std::size_t i, double b) const;
  double half_line_cdf(double u) const;
  void build_table();

  LimitLawDescriptor descriptor_;
  Quadrature quad_;
  double z_ = 1.0;
  double log_shift_ = 0.0;
  std::vector<double> knots_;
  std::vector<double> table_cdf_;
  double table_mass_ = 1.0;
};

double law_cdf(const LimitLawDescriptor& law, double x, const Quadrature& q = {});
std::vector<double> law_sample(const LimitLawDescriptor& law, const RngStreamSpec& rng, std::size_t n);

struct LimitPackage {
  Normalization normalization;
  LimitLawDescriptor law;
};

/// Normalization and limit law of X_t / n(t) for the regime. In the
/// partially explosive regime this is the package conditional on
/// non-explosion. Throws NoLimitLaw in almost surely explosive regimes.
LimitPackage limit_package(const Regime& regime, const Params& p);

/// Near-explosion size of |X_t| given the explosion time.
double blowup_profile(const Params& p, double tau_e, double t);

struct TransientRate {
  double ell;
  double nu;
};

/// |X_t| / t^nu -> ell for rho > 0, alpha < 1, beta < 1.
TransientRate transient_rate(const Params& p);

struct LinearCaseParams {
  double m;
  double sigma2;
};

/// Mean and variance of the almost-sure Gaussian limit of
/// X_t / exp(rho t^(1-beta) / (1-beta)) for alpha = 1, rho > 0, beta < 1.
LinearCaseParams linear_case_params(const Params& p, const Quadrature& q = {});

}  // namespace tidlab
