// tidlab: phase classification, simulation and Monte Carlo checks for
// dX = dB + rho sgn(X)|X|^alpha / t^beta dt.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "tidlab/error.hpp"
#include "tidlab/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitVerifyFailed = 3;
constexpr int kExitIo = 4;

struct Flags {
  std::string rho, alpha, beta, x0, n, horizon, dt, seed, out, format, config;
  std::string rho_list, alpha_list, beta_list, functional;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--rho", f.rho, "drift strength");
  cmd->add_option("--alpha", f.alpha, "space exponent");
  cmd->add_option("--beta", f.beta, "time exponent");
  cmd->add_option("--x0", f.x0, "initial value at t = 1 (>= 0)");
  cmd->add_option("--n", f.n, "number of paths");
  cmd->add_option("--horizon", f.horizon, "final time T > 1");
  cmd->add_option("--dt", f.dt, "base time step");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--out", f.out, "output file (default: stdout)");
  cmd->add_option("--format", f.format, "csv or json");
  cmd->add_option("--config", f.config, "key = value config file");
}

tidlab::KeyValues overrides(const Flags& f) {
  tidlab::KeyValues kv;
  auto put = [&](const char* key, const std::string& v) {
    if (!v.empty()) kv[key] = v;
  };
  put("rho", f.rho);
  put("alpha", f.alpha);
  put("beta", f.beta);
  put("x0", f.x0);
  put("n", f.n);
  put("horizon", f.horizon);
  put("dt", f.dt);
  put("seed", f.seed);
  put("out", f.out);
  put("format", f.format);
  put("sweep_rho", f.rho_list);
  put("sweep_alpha", f.alpha_list);
  put("sweep_beta", f.beta_list);
  put("functional", f.functional);
  return kv;
}

void emit(const tidlab::ExperimentConfig& cfg, const std::string& content) {
  if (cfg.output_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(cfg.output_path, std::ios::binary);
  if (!out) throw tidlab::Error(tidlab::ErrorCode::IoError, "cannot open " + cfg.output_path + " for writing");
  out << content;
  if (!content.empty() && content.back() != '\n') out << '\n';
  if (!out) throw tidlab::Error(tidlab::ErrorCode::IoError, "write to " + cfg.output_path + " failed");
}

int exit_code_for(tidlab::ErrorCode code) {
  switch (code) {
    case tidlab::ErrorCode::ParseError: return kExitUsage;
    case tidlab::ErrorCode::IoError: return kExitIo;
    default: return kExitInvalid;
  }
}

int run(tidlab::ExperimentKind kind, const Flags& flags) {
  using namespace tidlab;
  KeyValues file;
  if (!flags.config.empty()) file = read_config_file(flags.config);
  ExperimentConfig cfg = make_config(file, overrides(flags));
  cfg.experiment = kind;
  const bool format_given = !flags.format.empty() || file.count("format");

  if (kind != ExperimentKind::Sweep) check_well_formed(cfg.params);
  if (kind != ExperimentKind::Sweep && validate(cfg.params) == ValidityClass::Invalid) {
    std::cerr << "error: parameters outside P (rho < 0 with alpha <= -1 is out of range)\n";
    return kExitInvalid;
  }

  switch (kind) {
    case ExperimentKind::Classify: {
      const Regime r = classify(cfg.params);
      if (cfg.format == OutputFormat::Json && format_given) {
        nlohmann::json j{{"params", to_json(cfg.params)}, {"regime", to_json(r)}};
        emit(cfg, j.dump(2));
      } else {
        emit(cfg, regime_text(cfg.params, r));
      }
      return kExitOk;
    }
    case ExperimentKind::Simulate: {
      const SimResult r = simulate(cfg.params, cfg.sim, cfg.horizon, 0);
      emit(cfg, cfg.format == OutputFormat::Csv ? path_csv(r.path) : simulate_json(cfg, r).dump(2));
      return kExitOk;
    }
    case ExperimentKind::Ensemble: {
      EnsembleSpec spec;
      spec.params = cfg.params;
      spec.cfg = cfg.sim;
      spec.n_paths = cfg.n_paths;
      spec.horizon = cfg.horizon;
      spec.functional = cfg.functional;
      spec.threads = cfg.threads;
      const EnsembleResult r = run_ensemble(spec);
      emit(cfg, cfg.format == OutputFormat::Csv ? samples_csv(r) : ensemble_summary(cfg, r).dump(2));
      return kExitOk;
    }
    case ExperimentKind::Verify: {
      const VerifyReport rep = run_verify(cfg);
      emit(cfg, to_json(rep).dump(2));
      for (const auto& c : rep.checks) {
        std::cerr << (c.pass ? "PASS " : (c.diagnostic ? "WARN " : "FAIL ")) << c.name << " observed "
                  << format_double(c.observed) << " (" << c.detail << ")\n";
      }
      return rep.pass() ? kExitOk : kExitVerifyFailed;
    }
    case ExperimentKind::Explosion: {
      emit(cfg, explosion_json(cfg).dump(2));
      return kExitOk;
    }
    case ExperimentKind::Sweep: {
      const auto rows = run_sweep(cfg);
      const bool csv = !format_given || cfg.format == OutputFormat::Csv;
      emit(cfg, csv ? sweep_csv(rows) : to_json(rows).dump(2));
      return kExitOk;
    }
  }
  return kExitUsage;
}

}  // namespace

const char* description(tidlab::ExperimentKind kind) {
  switch (kind) {
    case tidlab::ExperimentKind::Classify: return "print the regime of (rho, alpha, beta)";
    case tidlab::ExperimentKind::Simulate: return "simulate one path (CSV t,x or JSON with the explosion report)";
    case tidlab::ExperimentKind::Ensemble: return "run n paths and write one functional value per path";
    case tidlab::ExperimentKind::Verify: return "run the regime's statistical checks; exit 3 on failure";
    case tidlab::ExperimentKind::Explosion: return "estimate explosion probabilities";
    case tidlab::ExperimentKind::Sweep: return "classify every cell of a parameter grid";
  }
  return "";
}

int main(int argc, char** argv) {
  CLI::App app{"Phase classification and Monte Carlo checks for power-drift diffusions"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::pair<CLI::App*, tidlab::ExperimentKind>> commands;
  for (auto kind : {tidlab::ExperimentKind::Classify, tidlab::ExperimentKind::Simulate, tidlab::ExperimentKind::Ensemble,
                    tidlab::ExperimentKind::Verify, tidlab::ExperimentKind::Explosion, tidlab::ExperimentKind::Sweep}) {
    CLI::App* cmd = app.add_subcommand(tidlab::to_string(kind), description(kind));
    add_flags(cmd, flags);
    commands.emplace_back(cmd, kind);
  }
  for (auto& [cmd, kind] : commands) {
    if (kind == tidlab::ExperimentKind::Ensemble) {
      cmd->add_option("--functional", flags.functional, "terminal_normalized, terminal_raw, explosion_indicator, ...");
    }
    if (kind == tidlab::ExperimentKind::Sweep) {
      cmd->add_option("--rho-list", flags.rho_list, "comma-separated rho values");
      cmd->add_option("--alpha-list", flags.alpha_list, "comma-separated alpha values");
      cmd->add_option("--beta-list", flags.beta_list, "comma-separated beta values");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (auto& [cmd, kind] : commands) {
      if (cmd->parsed()) return run(kind, flags);
    }
  } catch (const tidlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  }
  return kExitUsage;
}
