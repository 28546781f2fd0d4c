#pragma once

#include <cstdint>
#include <optional>

#include "tidlab/model.hpp"
#include "tidlab/rng.hpp"
#include "tidlab/time_change.hpp"

namespace tidlab {

enum class Scheme { Auto, DirectEM, SquaredProcess, PositivityPreserving, ZeroNoiseODE };

struct SimConfig {
  double dt = 1e-3;
  /// Step refinement near blow-up (superlinear drift) and near a finite t1.
  bool adapt = true;
  double explosion_threshold = 1e8;
  /// Smallest step allowed by refinement; 0 selects dt * 1e-6.
  double blowup_refine_floor = 0.0;
  Scheme scheme = Scheme::Auto;
  std::uint64_t seed = 0;
  bool store_full_path = true;

  double refine_floor() const { return blowup_refine_floor > 0.0 ? blowup_refine_floor : dt * 1e-6; }
};

/// Throws InvalidParameters unless dt > 0 and the threshold exceeds max(|x0|, 1).
void check_config(const SimConfig& cfg, const Params& p);

struct ExplosionReport {
  bool exploded = false;
  /// Profile-inversion estimate of tau_e; present iff exploded.
  std::optional<double> tau_e_estimate;
  /// First grid time with |X| >= threshold; present iff exploded.
  std::optional<double> threshold_crossing_time;
  double last_value = 0.0;
  double censored_at = 0.0;
  /// Refinement sat at the step floor without reaching the threshold.
  bool nonconvergent = false;
};

struct SimResult {
  KilledPath path;
  ExplosionReport report;
};

/// The scheme Auto resolves to for these parameters.
Scheme resolve_scheme(const Params& p, Scheme requested);

/// Simulates one path of the model on [1, horizon] using the stream
/// (cfg.seed, path_index).
SimResult simulate(const Params& p, const SimConfig& cfg, double horizon, std::uint64_t path_index = 0);
SimResult simulate(const Params& p, const SimConfig& cfg, double horizon, NormalSource& noise);

/// Euler-Maruyama on the transformed equation over [0, s_horizon].
/// The killing time (if any) is in the transformed clock.
KilledPath simulate_transformed(const Params& p, const TimeChange& tc, const SimConfig& cfg,
                                double s_horizon, std::uint64_t path_index = 0);
KilledPath simulate_transformed(const Params& p, const TimeChange& tc, const SimConfig& cfg,
                                double s_horizon, NormalSource& noise);

/// One draw of the non-explosion weight
///   exp( int rho sgn(b)|b|^alpha dW - 1/2 int rho^2 |b|^(2 alpha) ds )
/// along a delta-Brownian bridge b on [0, t1 - eps_cut].
/// Requires rho > 0, alpha > 1, 2 beta > alpha + 1.
double simulate_bridge_functional(const Params& p, const SimConfig& cfg, double eps_cut,
                                  std::uint64_t path_index = 0);

struct BridgeDraw {
  double weight;
  double b_end;
};

BridgeDraw simulate_bridge(const Params& p, const SimConfig& cfg, double eps_cut, NormalSource& noise);

/// Default tail cut t1 * 1e-4 for the bridge functional.
double default_eps_cut(const Params& p);

}  // namespace tidlab
