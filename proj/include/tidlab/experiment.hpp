#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tidlab/mc_stats.hpp"
#include "tidlab/model.hpp"
#include "tidlab/sde.hpp"

namespace tidlab {

enum class ExperimentKind { Classify, Simulate, Ensemble, Verify, Explosion, Sweep };
enum class OutputFormat { Csv, Json };

struct SweepGrid {
  std::vector<double> rho;
  std::vector<double> alpha;
  std::vector<double> beta;
};

struct ExperimentConfig {
  Params params;
  SimConfig sim;
  ExperimentKind experiment = ExperimentKind::Classify;
  std::size_t n_paths = 1000;
  double horizon = 10.0;
  std::optional<SweepGrid> sweep_grid;
  /// Empty means standard output.
  std::string output_path;
  OutputFormat format = OutputFormat::Json;
  Functional functional = Functional::TerminalNormalized;
  /// Run a small limit-law KS check per sweep cell.
  bool sweep_check = false;
  unsigned threads = 0;
};

using KeyValues = std::map<std::string, std::string>;

/// Parses `key = value` lines; '#' starts a comment. Throws ParseError.
KeyValues parse_key_values(std::istream& in);
/// Throws IoError when the file cannot be read.
KeyValues read_config_file(const std::string& path);

/// Applies defaults, then `file`, then `overrides`. Unknown keys and
/// malformed values throw ParseError.
ExperimentConfig make_config(const KeyValues& file, const KeyValues& overrides);

std::optional<ExperimentKind> parse_experiment(const std::string& name);
std::string to_string(ExperimentKind kind);
std::string to_string(Functional f);

/// %.17g: round-trip exact for doubles.
std::string format_double(double x);
std::string csv_field(const std::string& s);

nlohmann::json to_json(const Params& p);
nlohmann::json to_json(const Regime& r);
nlohmann::json to_json(const ExperimentConfig& c);
nlohmann::json to_json(const EstimateWithCI& e);
nlohmann::json to_json(const KSReport& k);

/// Multi-line human-readable regime summary.
std::string regime_text(const Params& p, const Regime& r);

struct VerifyCheck {
  std::string name;
  double predicted = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  /// Diagnostic checks are reported but do not decide the overall verdict.
  bool diagnostic = false;
  std::string detail;
};

struct VerifyReport {
  Regime regime;
  std::vector<VerifyCheck> checks;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  nlohmann::json config;

  bool pass() const;
};

/// Runs the check bundle that fits the regime of cfg.params.
VerifyReport run_verify(const ExperimentConfig& cfg);
nlohmann::json to_json(const VerifyReport& r);

/// Serialized samples: header `path_index,value`, one row per sample.
std::string samples_csv(const EnsembleResult& r);
nlohmann::json ensemble_summary(const ExperimentConfig& cfg, const EnsembleResult& r);

std::string path_csv(const KilledPath& path);
nlohmann::json simulate_json(const ExperimentConfig& cfg, const SimResult& r);

nlohmann::json explosion_json(const ExperimentConfig& cfg);

struct SweepRow {
  double rho = 0.0, alpha = 0.0, beta = 0.0;
  std::string validity, recurrence, normalization, law, envelope;
  std::optional<double> check_stat;
  std::optional<bool> check_pass;
  std::string error;
};

/// One row per grid cell in (rho, alpha, beta) lexicographic order.
std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg);
std::string sweep_csv(const std::vector<SweepRow>& rows);
nlohmann::json to_json(const std::vector<SweepRow>& rows);

inline constexpr const char* kSweepHeader =
    "rho,alpha,beta,validity,recurrence,normalization,law,envelope,check_stat,check_pass,error";

}  // namespace tidlab
