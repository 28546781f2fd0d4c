#include "tidlab/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tidlab/error.hpp"
#include "tidlab/laws.hpp"

namespace tidlab {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::ParseError, "bad number for '" + key + "': " + v);
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw Error(ErrorCode::ParseError, "bad integer for '" + key + "': " + v);
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw Error(ErrorCode::ParseError, "bad boolean for '" + key + "': " + v);
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw Error(ErrorCode::ParseError, "empty list for '" + key + "'");
  return out;
}

std::optional<Functional> parse_functional(const std::string& s) {
  for (Functional f : {Functional::TerminalNormalized, Functional::TerminalRaw, Functional::ExplosionIndicator,
                       Functional::GirsanovWeight, Functional::RateRatio, Functional::EnvelopeSup}) {
    if (to_string(f) == s) return f;
  }
  return std::nullopt;
}

Scheme parse_scheme(const std::string& s) {
  if (s == "auto") return Scheme::Auto;
  if (s == "em") return Scheme::DirectEM;
  if (s == "squared") return Scheme::SquaredProcess;
  if (s == "positive") return Scheme::PositivityPreserving;
  if (s == "ode") return Scheme::ZeroNoiseODE;
  throw Error(ErrorCode::ParseError, "unknown scheme: " + s);
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::Auto: return "auto";
    case Scheme::DirectEM: return "em";
    case Scheme::SquaredProcess: return "squared";
    case Scheme::PositivityPreserving: return "positive";
    case Scheme::ZeroNoiseODE: return "ode";
  }
  return "auto";
}

void apply(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (key == "rho") c.params.rho = parse_double(key, value);
  else if (key == "alpha") c.params.alpha = parse_double(key, value);
  else if (key == "beta") c.params.beta = parse_double(key, value);
  else if (key == "x0") c.params.x0 = parse_double(key, value);
  else if (key == "n") c.n_paths = parse_uint(key, value);
  else if (key == "horizon") c.horizon = parse_double(key, value);
  else if (key == "dt") c.sim.dt = parse_double(key, value);
  else if (key == "seed") c.sim.seed = parse_uint(key, value);
  else if (key == "adapt") c.sim.adapt = parse_bool(key, value);
  else if (key == "explosion_threshold") c.sim.explosion_threshold = parse_double(key, value);
  else if (key == "refine_floor") c.sim.blowup_refine_floor = parse_double(key, value);
  else if (key == "scheme") c.sim.scheme = parse_scheme(trim(value));
  else if (key == "threads") c.threads = static_cast<unsigned>(parse_uint(key, value));
  else if (key == "out") c.output_path = trim(value);
  else if (key == "sweep_check") c.sweep_check = parse_bool(key, value);
  else if (key == "format") {
    const std::string f = trim(value);
    if (f == "csv") c.format = OutputFormat::Csv;
    else if (f == "json") c.format = OutputFormat::Json;
    else throw Error(ErrorCode::ParseError, "format must be csv or json");
  } else if (key == "experiment") {
    const auto k = parse_experiment(trim(value));
    if (!k) throw Error(ErrorCode::ParseError, "unknown experiment: " + value);
    c.experiment = *k;
  } else if (key == "functional") {
    const auto f = parse_functional(trim(value));
    if (!f) throw Error(ErrorCode::ParseError, "unknown functional: " + value);
    c.functional = *f;
  } else if (key == "sweep_rho" || key == "sweep_alpha" || key == "sweep_beta") {
    if (!c.sweep_grid) c.sweep_grid = SweepGrid{};
    auto list = parse_list(key, value);
    if (key == "sweep_rho") c.sweep_grid->rho = std::move(list);
    else if (key == "sweep_alpha") c.sweep_grid->alpha = std::move(list);
    else c.sweep_grid->beta = std::move(list);
  } else {
    throw Error(ErrorCode::ParseError, "unknown config key: " + key);
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json law_json(const LimitLawDescriptor& l) {
  json j{{"kind", to_string(l.kind)}, {"text", describe(l)}};
  switch (l.kind) {
    case LawKind::Gaussian: j["mean"] = l.mean; j["variance"] = l.variance; break;
    case LawKind::SqrtGamma: j["shape"] = l.shape; j["scale"] = l.scale; break;
    case LawKind::Lambda:
    case LawKind::Pi: j["rho"] = l.rho; j["alpha"] = l.alpha; break;
    case LawKind::DeterministicLimit: j["ell"] = l.ell; break;
    default: break;
  }
  j["support"] = l.support == Support::R ? "R" : "(0,inf)";
  return j;
}

json normalization_json(const Normalization& n) {
  json j{{"text", describe(n)}};
  if (n.kind == NormalizationKind::TPow) j["exponent"] = n.exponent;
  if (n.kind == NormalizationKind::ExpPower) {
    j["rho"] = n.rho;
    j["beta"] = n.beta;
  }
  return j;
}

json envelope_json(const std::optional<EnvelopeSpec>& e) {
  if (!e) return nullptr;
  return json{{"kind", to_string(e->kind)}, {"constant", e->constant}, {"text", describe(*e)}};
}

bool ks_testable(const LimitLawDescriptor& law) {
  return law.kind != LawKind::DeterministicLimit && law.kind != LawKind::PointMassZero;
}

bool linear_gaussian(const Params& p, const Regime& r) {
  return on_boundary(p.alpha, 1.0) && p.rho > 0.0 && r.recurrence == Recurrence::Transient && r.limit_law &&
         r.limit_law->kind == LawKind::Gaussian;
}

// X_T / n(T) over an ensemble against the regime's law; on the critical line
// paths run in the exponential clock.
KSReport law_ks(const ExperimentConfig& cfg, const LimitPackage& pkg, std::size_t n) {
  EnsembleSpec spec;
  spec.params = cfg.params;
  spec.cfg = cfg.sim;
  spec.n_paths = n;
  spec.horizon = cfg.horizon;
  spec.functional = Functional::TerminalNormalized;
  spec.normalization = pkg.normalization;
  spec.threads = cfg.threads;
  const Params& p = cfg.params;
  if (p.rho != 0.0 && p.alpha > -1.0 && !on_boundary(p.alpha, -1.0) && on_boundary(2.0 * p.beta, p.alpha + 1.0)) {
    spec.route = Route::transformed(make_exponential());
  }
  const EnsembleResult r = run_ensemble(spec);
  if (r.samples.empty()) throw Error(ErrorCode::EmptySample, "no surviving paths");
  const LimitLaw law(pkg.law);
  return ks_distance(r.samples, [&](double x) { return law.cdf(x); }, 0.05);
}

constexpr double kKsTolerance = 0.05;

VerifyCheck make_check(std::string name, double predicted, double observed, double tolerance) {
  VerifyCheck c;
  c.name = std::move(name);
  c.predicted = predicted;
  c.observed = observed;
  c.tolerance = tolerance;
  return c;
}

}  // namespace

KeyValues parse_key_values(std::istream& in) {
  KeyValues kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(ErrorCode::ParseError, "line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

KeyValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read config file " + path);
  return parse_key_values(in);
}

ExperimentConfig make_config(const KeyValues& file, const KeyValues& overrides) {
  ExperimentConfig c;
  for (const auto& [k, v] : file) apply(c, k, v);
  for (const auto& [k, v] : overrides) apply(c, k, v);
  return c;
}

std::optional<ExperimentKind> parse_experiment(const std::string& name) {
  for (ExperimentKind k : {ExperimentKind::Classify, ExperimentKind::Simulate, ExperimentKind::Ensemble,
                           ExperimentKind::Verify, ExperimentKind::Explosion, ExperimentKind::Sweep}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::Classify: return "classify";
    case ExperimentKind::Simulate: return "simulate";
    case ExperimentKind::Ensemble: return "ensemble";
    case ExperimentKind::Verify: return "verify";
    case ExperimentKind::Explosion: return "explosion";
    case ExperimentKind::Sweep: return "sweep";
  }
  return "?";
}

std::string to_string(Functional f) {
  switch (f) {
    case Functional::TerminalNormalized: return "terminal_normalized";
    case Functional::TerminalRaw: return "terminal_raw";
    case Functional::ExplosionIndicator: return "explosion_indicator";
    case Functional::GirsanovWeight: return "girsanov_weight";
    case Functional::RateRatio: return "rate_ratio";
    case Functional::EnvelopeSup: return "envelope_sup";
  }
  return "?";
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

json to_json(const Params& p) {
  return {{"rho", p.rho}, {"alpha", p.alpha}, {"beta", p.beta}, {"x0", p.x0}, {"t0", p.t0}};
}

json to_json(const Regime& r) {
  json j;
  j["validity"] = to_string(r.validity);
  j["recurrence"] = to_string(r.recurrence);
  j["normalization"] = normalization_json(r.normalization);
  j["limit_law"] = r.limit_law ? law_json(*r.limit_law) : json(nullptr);
  j["limsup_envelope"] = envelope_json(r.limsup_envelope);
  j["liminf_envelope"] = envelope_json(r.liminf_envelope);
  if (r.conditional_on_nonexplosion) {
    const auto& c = *r.conditional_on_nonexplosion;
    j["conditional_on_nonexplosion"] = {{"recurrence", to_string(c.recurrence)},
                                        {"normalization", normalization_json(c.normalization)},
                                        {"limit_law", law_json(c.limit_law)},
                                        {"limsup_envelope", envelope_json(c.limsup_envelope)}};
  } else {
    j["conditional_on_nonexplosion"] = nullptr;
  }
  j["rule"] = r.rule;
  j["notes"] = r.notes;
  return j;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["experiment"] = to_string(c.experiment);
  j["params"] = to_json(c.params);
  j["sim"] = {{"dt", c.sim.dt},
              {"adapt", c.sim.adapt},
              {"explosion_threshold", c.sim.explosion_threshold},
              {"refine_floor", c.sim.refine_floor()},
              {"scheme", scheme_name(c.sim.scheme)},
              {"seed", c.sim.seed}};
  j["n_paths"] = c.n_paths;
  j["horizon"] = c.horizon;
  j["functional"] = to_string(c.functional);
  j["format"] = c.format == OutputFormat::Csv ? "csv" : "json";
  if (c.sweep_grid) {
    j["sweep_grid"] = {{"rho", c.sweep_grid->rho}, {"alpha", c.sweep_grid->alpha}, {"beta", c.sweep_grid->beta}};
  }
  return j;
}

json to_json(const EstimateWithCI& e) {
  return {{"value", e.value},
          {"ci_low", e.ci_low},
          {"ci_high", e.ci_high},
          {"n", e.n},
          {"method", e.method == CiMethod::Wilson ? "wilson" : "normal"}};
}

json to_json(const KSReport& k) {
  return {{"statistic", k.statistic}, {"n", k.n}, {"threshold", k.threshold}, {"pass", k.pass}};
}

std::string regime_text(const Params& p, const Regime& r) {
  std::ostringstream os;
  os << "params       rho=" << p.rho << " alpha=" << p.alpha << " beta=" << p.beta << " x0=" << p.x0 << "\n";
  os << "validity     " << to_string(r.validity) << "\n";
  os << "recurrence   " << to_string(r.recurrence) << "\n";
  os << "normalization " << describe(r.normalization) << "\n";
  os << "limit law    " << (r.limit_law ? describe(*r.limit_law) : "none") << "\n";
  if (r.limsup_envelope) os << "limsup env   " << describe(*r.limsup_envelope) << "\n";
  if (r.liminf_envelope) os << "liminf env   " << describe(*r.liminf_envelope) << "\n";
  if (r.conditional_on_nonexplosion) {
    const auto& c = *r.conditional_on_nonexplosion;
    os << "if no blowup " << to_string(c.recurrence) << ", " << describe(c.normalization) << ", "
       << describe(c.limit_law) << "\n";
  }
  os << "rule         " << r.rule << "\n";
  if (!r.notes.empty()) {
    os << "notes       ";
    for (const auto& n : r.notes) os << " " << n;
    os << "\n";
  }
  return os.str();
}

bool VerifyReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.diagnostic || c.pass; });
}

VerifyReport run_verify(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  VerifyReport rep;
  rep.regime = classify(cfg.params);
  rep.seed = cfg.sim.seed;
  rep.config = to_json(cfg);
  const Params& p = cfg.params;
  const Regime& regime = rep.regime;

  auto add_error = [&](const std::string& name, const Error& e) {
    VerifyCheck c;
    c.name = name;
    c.detail = e.what();
    rep.checks.push_back(c);
  };

  // Limit law or rate.
  if (regime.limit_law && regime.limit_law->kind == LawKind::DeterministicLimit) {
    try {
      const RateCheck rc = rate_check(p, cfg.sim, cfg.n_paths, cfg.horizon, cfg.threads);
      VerifyCheck c = make_check("rate-ratio", rc.predicted, rc.ratio->value, 0.05 * rc.predicted);
      c.pass = std::abs(rc.ratio->value - rc.predicted) <= c.tolerance;
      c.detail = "mean |X_T|/T^nu, 95% CI [" + format_double(rc.ratio->ci_low) + ", " +
                 format_double(rc.ratio->ci_high) + "]";
      rep.checks.push_back(c);
    } catch (const Error& e) {
      add_error("rate-ratio", e);
    }
  } else if (linear_gaussian(p, regime)) {
    try {
      const RateCheck rc = rate_check(p, cfg.sim, cfg.n_paths, cfg.horizon, cfg.threads);
      VerifyCheck c = make_check("linear-gaussian-ks", 0.0, rc.ks->statistic, kKsTolerance);
      c.pass = rc.ks->statistic < kKsTolerance;
      c.detail = "KS of X_T/n(T) vs " + describe(rc.law);
      rep.checks.push_back(c);
    } catch (const Error& e) {
      add_error("linear-gaussian-ks", e);
    }
  } else if (regime.recurrence != Recurrence::ExplodesAS) {
    try {
      const LimitPackage pkg = limit_package(regime, p);
      if (ks_testable(pkg.law)) {
        const KSReport ks = law_ks(cfg, pkg, cfg.n_paths);
        VerifyCheck c = make_check("limit-law-ks", 0.0, ks.statistic, kKsTolerance);
        c.pass = ks.pass;
        c.detail = "KS of X_T/" + describe(pkg.normalization) + " vs " + describe(pkg.law) + ", n=" +
                   std::to_string(ks.n);
        rep.checks.push_back(c);
      }
    } catch (const Error& e) {
      add_error("limit-law-ks", e);
    }
  }

  // Explosion.
  if (regime.recurrence == Recurrence::ExplodesAS) {
    try {
      const ExplosionEstimate d = explosion_prob_direct(p, cfg.sim, cfg.n_paths, cfg.horizon, cfg.threads);
      VerifyCheck c = make_check("explosion-fraction", 1.0, d.at_horizon.value, 0.01);
      c.pass = d.at_horizon.value >= 0.99;
      c.detail = "fraction exploded by the horizon; doubling delta " + format_double(d.doubling_delta);
      rep.checks.push_back(c);
    } catch (const Error& e) {
      add_error("explosion-fraction", e);
    }
  } else if (regime.recurrence == Recurrence::ExplodesWithPartialProbability) {
    try {
      const ExplosionEstimate d = explosion_prob_direct(p, cfg.sim, cfg.n_paths, cfg.horizon, cfg.threads);
      SimConfig gcfg = cfg.sim;
      gcfg.seed = cfg.sim.seed + 1;
      const GirsanovEstimate g = explosion_prob_girsanov(p, gcfg, cfg.n_paths, std::nullopt, cfg.threads);
      const EstimateWithCI survive{1.0 - d.at_horizon.value, 1.0 - d.at_horizon.ci_high, 1.0 - d.at_horizon.ci_low,
                                   d.at_horizon.n, CiMethod::Wilson};
      VerifyCheck c = make_check("nonexplosion-identity", g.estimate.value, survive.value, 0.0);
      c.pass = g.estimate.overlaps(survive) && survive.value > 0.0 && survive.value < 1.0 &&
               g.estimate.value > 0.0 && g.estimate.value < 1.0;
      c.detail = "weights CI [" + format_double(g.estimate.ci_low) + ", " + format_double(g.estimate.ci_high) +
                 "], direct CI [" + format_double(survive.ci_low) + ", " + format_double(survive.ci_high) + "]" +
                 (g.heavy_tail_warning ? ", heavy-tailed weights" : "");
      rep.checks.push_back(c);
    } catch (const Error& e) {
      add_error("nonexplosion-identity", e);
    }
  }

  // Envelope (diagnostic).
  const auto envelope = regime.limsup_envelope
                            ? regime.limsup_envelope
                            : (regime.conditional_on_nonexplosion ? regime.conditional_on_nonexplosion->limsup_envelope
                                                                  : std::nullopt);
  if (envelope && cfg.horizon / 2.0 > std::exp(1.0)) {
    try {
      const EnvelopeSummary s =
          envelope_diagnostic(p, cfg.sim, std::min<std::size_t>(cfg.n_paths, 200), cfg.horizon, *envelope, cfg.threads);
      VerifyCheck c = make_check("envelope-sup-median", 1.0, s.median, 0.0);
      c.diagnostic = true;
      c.pass = s.median > 0.2 && s.median < 1.2;
      c.detail = "sup over [T/2,T] of |X|/" + describe(*envelope) + ", q10 " + format_double(s.q10) + ", q90 " +
                 format_double(s.q90);
      rep.checks.push_back(c);
    } catch (const Error& e) {
      add_error("envelope-sup-median", e);
      rep.checks.back().diagnostic = true;
    }
  }

  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

json to_json(const VerifyReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name},
                      {"predicted", c.predicted},
                      {"observed", c.observed},
                      {"tolerance", c.tolerance},
                      {"pass", c.pass},
                      {"diagnostic", c.diagnostic},
                      {"detail", c.detail}});
  }
  return {{"regime", to_json(r.regime)}, {"checks", checks},          {"pass", r.pass()},
          {"seed", r.seed},              {"wall_time", r.wall_time}, {"config", r.config}};
}

std::string samples_csv(const EnsembleResult& r) {
  std::string out = "path_index,value\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    out += std::to_string(r.path_indices[i]) + "," + format_double(r.samples[i]) + "\n";
  }
  return out;
}

json ensemble_summary(const ExperimentConfig& cfg, const EnsembleResult& r) {
  json j;
  j["config"] = to_json(cfg);
  j["seed"] = cfg.sim.seed;
  j["n_samples"] = r.samples.size();
  j["n_exploded"] = r.n_exploded;
  j["n_survivors"] = r.n_survivors;
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back({{"path_index", f.path_index}, {"message", f.message}});
  j["failures"] = failures;
  if (!r.samples.empty()) {
    j["mean"] = to_json(mean_ci(r.samples));
    j["median"] = quantile(r.samples, 0.5);
  }
  j["samples"] = r.samples;
  return j;
}

std::string path_csv(const KilledPath& path) {
  std::string out = "t,x\n";
  for (std::size_t i = 0; i < path.size(); ++i) {
    out += format_double(path.times[i]) + "," + format_double(path.values[i]) + "\n";
  }
  return out;
}

json simulate_json(const ExperimentConfig& cfg, const SimResult& r) {
  json j;
  j["config"] = to_json(cfg);
  j["seed"] = cfg.sim.seed;
  j["times"] = r.path.times;
  j["values"] = r.path.values;
  j["killing_time"] = optional_json(r.path.killing_time);
  j["report"] = {{"exploded", r.report.exploded},
                 {"tau_e_estimate", optional_json(r.report.tau_e_estimate)},
                 {"threshold_crossing_time", optional_json(r.report.threshold_crossing_time)},
                 {"last_value", r.report.last_value},
                 {"censored_at", r.report.censored_at},
                 {"nonconvergent", r.report.nonconvergent}};
  return j;
}

json explosion_json(const ExperimentConfig& cfg) {
  const Params& p = cfg.params;
  json j;
  j["config"] = to_json(cfg);
  j["seed"] = cfg.sim.seed;
  const ExplosionEstimate d = explosion_prob_direct(p, cfg.sim, cfg.n_paths, cfg.horizon, cfg.threads);
  j["direct"] = {{"at_horizon", to_json(d.at_horizon)},
                 {"at_double_horizon", to_json(d.at_double_horizon)},
                 {"doubling_delta", d.doubling_delta}};
  if (p.rho > 0.0 && p.alpha > 1.0 && 2.0 * p.beta > p.alpha + 1.0 && !on_boundary(2.0 * p.beta, p.alpha + 1.0)) {
    SimConfig gcfg = cfg.sim;
    gcfg.seed = cfg.sim.seed + 1;
    const GirsanovEstimate g = explosion_prob_girsanov(p, gcfg, cfg.n_paths, std::nullopt, cfg.threads);
    j["girsanov"] = {{"nonexplosion", to_json(g.estimate)},
                     {"kurtosis", g.kurtosis},
                     {"heavy_tail_warning", g.heavy_tail_warning},
                     {"min_weight", g.min_weight}};
  }
  return j;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep_grid || cfg.sweep_grid->rho.empty() || cfg.sweep_grid->alpha.empty() ||
      cfg.sweep_grid->beta.empty()) {
    throw Error(ErrorCode::InvalidParameters, "sweep needs nonempty rho, alpha and beta lists");
  }
  std::vector<SweepRow> rows;
  for (double rho : cfg.sweep_grid->rho) {
    for (double alpha : cfg.sweep_grid->alpha) {
      for (double beta : cfg.sweep_grid->beta) {
        SweepRow row;
        row.rho = rho;
        row.alpha = alpha;
        row.beta = beta;
        Params p = cfg.params;
        p.rho = rho;
        p.alpha = alpha;
        p.beta = beta;
        try {
          row.validity = to_string(validate(p));
          const Regime r = classify(p);
          row.recurrence = to_string(r.recurrence);
          row.normalization = describe(r.normalization);
          if (r.limit_law) {
            row.law = describe(*r.limit_law);
          } else if (r.conditional_on_nonexplosion) {
            row.law = "conditional " + describe(r.conditional_on_nonexplosion->limit_law);
          }
          if (r.limsup_envelope) row.envelope = describe(*r.limsup_envelope);
          if (cfg.sweep_check && r.recurrence != Recurrence::ExplodesAS) {
            const LimitPackage pkg = limit_package(r, p);
            if (ks_testable(pkg.law) && !linear_gaussian(p, r)) {
              ExperimentConfig cell = cfg;
              cell.params = p;
              const KSReport ks = law_ks(cell, pkg, cfg.n_paths);
              row.check_stat = ks.statistic;
              row.check_pass = ks.pass;
            }
          }
        } catch (const Error& e) {
          row.error = e.what();
        }
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const auto& r : rows) {
    out += format_double(r.rho) + "," + format_double(r.alpha) + "," + format_double(r.beta) + "," +
           csv_field(r.validity) + "," + csv_field(r.recurrence) + "," + csv_field(r.normalization) + "," +
           csv_field(r.law) + "," + csv_field(r.envelope) + "," + (r.check_stat ? format_double(*r.check_stat) : "") +
           "," + (r.check_pass ? (*r.check_pass ? "true" : "false") : "") + "," + csv_field(r.error) + "\n";
  }
  return out;
}

json to_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    arr.push_back({{"rho", r.rho},
                   {"alpha", r.alpha},
                   {"beta", r.beta},
                   {"validity", r.validity},
                   {"recurrence", r.recurrence},
                   {"normalization", r.normalization},
                   {"law", r.law},
                   {"envelope", r.envelope},
                   {"check_stat", optional_json(r.check_stat)},
                   {"check_pass", r.check_pass ? json(*r.check_pass) : json(nullptr)},
                   {"error", r.error}});
  }
  return arr;
}

}  // namespace tidlab
