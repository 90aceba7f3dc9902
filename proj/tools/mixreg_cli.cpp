// Command-line front end for the mixreg library.

#include "mixreg.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace mixreg;

namespace {

enum ExitCode : int
{
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kIngestion = 3,
  kDegenerate = 4,
  kDomain = 5,
  kNumeric = 6,
};

/// Raised when a guard refuses to continue (e.g. pi_n invalid without --force).
class GuardTripped : public Error
{
public:
  using Error::Error;
};

struct Options
{
  std::string input;
  std::string scenario;
  double pi0 = 0.7;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::string known = "normal:1";
  std::string transform = "0,0";
  std::size_t grid_points = 100;
  std::size_t replicates_boot = 1000;
  double level = 0.05;
  std::size_t replicates_mc = 1000;
  std::size_t threads = 1;
  std::string out_dir = ".";
  std::string output;
  std::string bandwidth = "plugin";
  double condition_limit = kDefaultConditionLimit;
  bool force = false;
  bool with_truth = false;
  bool with_latent = false;
  bool lambda_family = false;
  bool sigma_star = false;
  bool dump_sup = false;
  bool coverage = false;
  bool se_study = false;
  bool quiet = false;
};

class Stopwatch
{
public:
  /// Closes the current stage under `name`.
  void record(const std::string& name)
  {
    const auto now = std::chrono::steady_clock::now();
    stages_.emplace_back(name, std::chrono::duration<double>(now - last_).count());
    last_ = now;
  }

  json to_json() const
  {
    json j = json::object();
    for (const auto& [k, v] : stages_) {
      j[k] = v;
    }
    return j;
  }

private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::vector<std::pair<std::string, double>> stages_;
};

struct Source
{
  Dataset data;
  KnownComponent known;
  std::optional<ScenarioConfig> scenario;
  std::string description;
};

Source load_source(const Options& o)
{
  if (!o.input.empty() && !o.scenario.empty()) {
    throw ConfigError("give either --input or --scenario, not both");
  }
  if (!o.scenario.empty()) {
    ScenarioConfig sc = builtin_scenario(o.scenario, o.pi0, o.n, o.seed);
    SimulatedData sim = simulate(sc, o.threads);
    return { std::move(sim.data), sc.known, sc, "scenario:" + o.scenario };
  }
  if (o.input.empty()) {
    throw ConfigError("an --input CSV or a --scenario is required");
  }
  KnownComponent known;
  known.f_star = parse_known_spec(o.known);
  const auto [a, b] = parse_transform(o.transform);
  known.alpha_star = a;
  known.beta_star = b;
  const auto raw = read_csv_file(o.input);
  return { transform_to_canonical(raw, known), known, std::nullopt, o.input };
}

DensityConfig density_config(const Options& o)
{
  DensityConfig cfg;
  if (o.bandwidth == "plugin") {
    cfg.rule = BandwidthRule::PlugIn;
  } else if (o.bandwidth == "scale") {
    cfg.rule = BandwidthRule::ScaleRule;
  } else {
    cfg.rule = BandwidthRule::Fixed;
    try {
      std::size_t used = 0;
      cfg.fixed_h = std::stod(o.bandwidth, &used);
      if (used != o.bandwidth.size()) {
        throw std::invalid_argument("trailing");
      }
    } catch (const std::exception&) {
      throw ConfigError("--bandwidth must be 'plugin', 'scale' or a positive number");
    }
  }
  return cfg;
}

fs::path prepare_out_dir(const Options& o)
{
  fs::path dir(o.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ConfigError("cannot create output directory '" + o.out_dir + "': " + ec.message());
  }
  return dir;
}

std::ofstream open_out(const fs::path& p)
{
  std::ofstream f(p);
  if (!f) {
    throw ConfigError("cannot write '" + p.string() + "'");
  }
  return f;
}

json params_json(const EuclideanFit& f)
{
  return json{ { "alpha", f.params.alpha }, { "beta", f.params.beta }, { "pi", f.params.pi } };
}

json fit_json(const FitResult& fit, const Options& o)
{
  json j;
  j["n"] = fit.moments.n;
  j["estimate"] = params_json(fit.euclidean);
  j["std_errors"] = { { "alpha", fit.euclidean.std_errors[0] },
                      { "beta", fit.euclidean.std_errors[1] },
                      { "pi", fit.euclidean.std_errors[2] } };
  j["pi_valid"] = fit.euclidean.pi_valid;
  j["gamma"] = json::array();
  for (int k = 0; k < 8; ++k) {
    j["gamma"].push_back(fit.gamma.gamma[k]);
  }
  json sigma = json::array();
  for (int r = 0; r < 3; ++r) {
    sigma.push_back({ fit.euclidean.sigma(r, 0), fit.euclidean.sigma(r, 1),
                      fit.euclidean.sigma(r, 2) });
  }
  j["sigma"] = sigma;
  if (o.lambda_family) {
    const LambdaEstimate le = fit_lambda(fit.moments, o.condition_limit);
    const LambdaParamFamily fam = lambda_param_family(le);
    j["lambda"] = json::array();
    for (int k = 0; k < 5; ++k) {
      j["lambda"].push_back(le.lambda[k]);
    }
    auto variants = [](const std::array<std::optional<double>, 3>& v) {
      json a = json::array();
      for (const auto& x : v) {
        a.push_back(x ? json(*x) : json(nullptr));
      }
      return a;
    };
    j["lambda_family"] = { { "alpha", variants(fam.alpha_variants) },
                           { "beta", variants(fam.beta_variants) },
                           { "pi", variants(fam.pi_variants) } };
    json combos = json::array();
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        for (int p = 0; p < 3; ++p) {
          const auto c = fam.combination(a, b, p);
          json row = { { "index", { a + 1, b + 1, p + 1 } } };
          if (c) {
            row["alpha"] = c->alpha;
            row["beta"] = c->beta;
            row["pi"] = c->pi;
            row["defined"] = true;
          } else {
            row["defined"] = false;
          }
          combos.push_back(row);
        }
      }
    }
    j["lambda_combinations"] = combos;
  }
  if (o.sigma_star) {
    const SigmaStarDiagnostic d = sigma_star_diagnostic(fit.moments, o.condition_limit);
    j["sigma_star_squared"] = { { "value", d.value ? json(*d.value) : json(nullptr) },
                                { "raw", d.raw },
                                { "note", d.reason.empty() ? "unstable diagnostic" : d.reason } };
  }
  return j;
}

void print_fit_table(const FitResult& fit)
{
  const auto& p = fit.euclidean.params;
  const auto& se = fit.euclidean.std_errors;
  std::printf("%-8s %14s %14s\n", "param", "estimate", "std.error");
  std::printf("%-8s %14.6g %14.6g\n", "alpha", p.alpha, se[0]);
  std::printf("%-8s %14.6g %14.6g\n", "beta", p.beta, se[1]);
  std::printf("%-8s %14.6g %14.6g\n", "pi", p.pi, se[2]);
  std::printf("pi_valid: %s   n = %zu\n", fit.euclidean.pi_valid ? "true" : "false",
              fit.moments.n);
}

void require_valid_pi(const FitResult& fit, const Options& o)
{
  if (!fit.euclidean.pi_valid && !o.force) {
    std::ostringstream s;
    s << "pi_n = " << fit.euclidean.params.pi
      << " lies outside (0, 1]; F_n and f_n are not meaningful (use --force to continue)";
    throw GuardTripped(s.str());
  }
}

json manifest_base(const std::string& command, const Options& o, const Source& src)
{
  json m;
  m["command"] = command;
  m["source"] = src.description;
  if (src.scenario) {
    m["scenario"] = { { "name", src.scenario->name },
                      { "pi0", o.pi0 },
                      { "n", o.n },
                      { "seed", o.seed } };
  }
  m["known"] = { { "alpha_star", src.known.alpha_star },
                 { "beta_star", src.known.beta_star },
                 { "f_star", src.known.f_star.describe() } };
  m["grid_points"] = o.grid_points;
  m["bandwidth"] = o.bandwidth;
  m["seed"] = o.seed;
  m["threads"] = o.threads;
  return m;
}

void write_manifest(const fs::path& dir, json manifest, const std::vector<fs::path>& outputs,
                    const Stopwatch& sw)
{
  json files = json::array();
  for (const auto& p : outputs) {
    files.push_back(p.string());
  }
  manifest["outputs"] = files;
  manifest["timings_seconds"] = sw.to_json();
  auto f = open_out(dir / "manifest.json");
  f << manifest.dump(2) << '\n';
}

int cmd_fit(const Options& o)
{
  Stopwatch sw;
  const Source src = load_source(o);
  sw.record("load");
  const FitResult fit = fit_euclidean(src.data, o.condition_limit);
  sw.record("fit");
  const fs::path dir = prepare_out_dir(o);
  json report = fit_json(fit, o);
  report["timings_seconds"] = sw.to_json();
  const fs::path out = dir / "fit.json";
  open_out(out) << report.dump(2) << '\n';
  if (!o.quiet) {
    print_fit_table(fit);
  }
  json m = manifest_base("fit", o, src);
  write_manifest(dir, m, { out }, sw);
  return kOk;
}

/// Shared path of cdf, pdf and band.
int cmd_grid(const std::string& command, const Options& o)
{
  Stopwatch sw;
  const Source src = load_source(o);
  sw.record("load");
  const FitResult fit = fit_euclidean(src.data, o.condition_limit);
  sw.record("fit");
  require_valid_pi(fit, o);
  if (o.with_truth && !src.scenario) {
    throw ConfigError("--with-truth needs --scenario");
  }
  const DensityConfig dcfg = density_config(o);
  const EvaluationGrid grid = residual_grid(src.data, eta_of(fit.euclidean.params), o.grid_points);
  const fs::path dir = prepare_out_dir(o);
  std::vector<fs::path> outputs;
  json m = manifest_base(command, o, src);
  m["estimate"] = params_json(fit.euclidean);
  m["pi_valid"] = fit.euclidean.pi_valid;

  const DensityEstimator dens(src.data, src.known, fit.euclidean.params, dcfg);
  const std::vector<double> f_raw = dens.raw_on(grid.points);
  m["bandwidth_h"] = dens.bandwidth();
  sw.record("pdf");

  if (command == "pdf") {
    const fs::path out = dir / "pdf.tsv";
    auto f = open_out(out);
    std::vector<std::string> header{ "t", "f_n", "clamped" };
    if (o.with_truth) {
      header.push_back("f_true");
    }
    TsvWriter w(f, header);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::vector<double> row{ grid.points[k], f_raw[k], std::max(f_raw[k], 0.0) };
      if (o.with_truth) {
        row.push_back(src.scenario->eps_law.pdf(grid.points[k]));
      }
      w.row(row);
    }
    m["integral_clamped"] = integrate_positive_part(grid.points, f_raw);
    outputs.push_back(out);
    sw.record("write");
    write_manifest(dir, m, outputs, sw);
    return kOk;
  }

  FunctionalFit fn = f_n_cdf(src.data, src.known, fit.euclidean, grid);
  sw.record("cdf");
  const InfluenceMatrix psi =
    influence_matrix(src.data, src.known, fit.euclidean, fit.gamma, grid, f_raw);
  attach_pointwise_se(fn, psi);
  sw.record("influence");

  std::optional<BandResult> b;
  if (command == "band") {
    BootstrapConfig bc;
    bc.replicates = o.replicates_boot;
    bc.level = o.level;
    bc.seed = o.seed;
    bc.threads = o.threads;
    b = band(psi, fn, bc);
    sw.record("band");
    m["bootstrap"] = { { "N", bc.replicates },
                       { "level", bc.level },
                       { "seed", bc.seed },
                       { "halfwidth", b->halfwidth } };
  }

  const fs::path out = dir / (command + ".tsv");
  auto f = open_out(out);
  std::vector<std::string> header{ "t", "F_n", "clamped", "se" };
  if (b) {
    header.insert(header.end(), { "band_lo", "band_hi", "band_lo_raw", "band_hi_raw" });
  }
  if (o.with_truth) {
    header.push_back("F_true");
  }
  TsvWriter w(f, header);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::vector<double> row{ grid.points[k], fn.f_raw[k], fn.f_clamped[k], fn.se[k] };
    if (b) {
      row.insert(row.end(),
                 { b->band_lo[k], b->band_hi[k], b->band_lo_raw[k], b->band_hi_raw[k] });
    }
    if (o.with_truth) {
      row.push_back(src.scenario->eps_law.cdf(grid.points[k]));
    }
    w.row(row);
  }
  outputs.push_back(out);
  if (b && o.dump_sup) {
    const fs::path sup = dir / "sup_stats.tsv";
    auto fs_ = open_out(sup);
    TsvWriter ws(fs_, { "replicate", "sup_stat" });
    for (std::size_t j = 0; j < b->sup_stats.size(); ++j) {
      ws.row({ static_cast<double>(j), b->sup_stats[j] });
    }
    outputs.push_back(sup);
  }
  sw.record("write");
  write_manifest(dir, m, outputs, sw);
  return kOk;
}

int cmd_simulate(const Options& o)
{
  Stopwatch sw;
  if (o.scenario.empty()) {
    throw ConfigError("simulate needs --scenario");
  }
  const ScenarioConfig sc = builtin_scenario(o.scenario, o.pi0, o.n, o.seed);
  const SimulatedData sim = simulate(sc, o.threads);
  sw.record("simulate");
  const fs::path dir = prepare_out_dir(o);
  const fs::path out = o.output.empty() ? dir / "simulated.csv" : fs::path(o.output);
  auto f = open_out(out);
  f << (o.with_latent ? "x,y,z\n" : "x,y\n");
  char buf[96];
  for (std::size_t i = 0; i < sim.data.size(); ++i) {
    if (o.with_latent) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", sim.data[i].x, sim.data[i].y,
                    static_cast<int>(sim.latent[i]));
    } else {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", sim.data[i].x, sim.data[i].y);
    }
    f << buf;
  }
  f.close();
  sw.record("write");
  json m;
  m["command"] = "simulate";
  m["scenario"] = { { "name", sc.name }, { "pi0", o.pi0 }, { "n", o.n }, { "seed", o.seed } };
  m["eps_law"] = sc.eps_law.describe();
  write_manifest(dir, m, { out }, sw);
  return kOk;
}

json column_json(const McColumn& c)
{
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return { { "bias", opt(c.bias) },
           { "sd", opt(c.sd) },
           { "sqrt_n_sd", opt(c.sqrt_n_sd) },
           { "sqrt_n_mean_se", opt(c.sqrt_n_mean_se) } };
}

int cmd_mc(const Options& o)
{
  Stopwatch sw;
  if (o.scenario.empty()) {
    throw ConfigError("mc needs --scenario");
  }
  if (o.coverage && o.se_study) {
    throw ConfigError("choose at most one of --coverage and --se");
  }
  McConfig cfg;
  cfg.scenario = o.scenario;
  cfg.pi0 = o.pi0;
  cfg.n = o.n;
  cfg.replicates = o.replicates_mc;
  cfg.seed = o.seed;
  cfg.study = o.coverage ? McStudy::Coverage
              : o.se_study ? McStudy::StandardError
                           : McStudy::Bias;
  cfg.bootstrap_replicates = o.replicates_boot;
  cfg.level = o.level;
  cfg.grid_points = o.grid_points;
  cfg.threads = o.threads;
  cfg.density = density_config(o);
  const McReport r = run_study(cfg);
  sw.record("mc");
  const fs::path dir = prepare_out_dir(o);
  const fs::path tsv = dir / "mc.tsv";
  {
    auto f = open_out(tsv);
    write_report_tsv(f, r);
  }
  json j;
  j["scenario"] = r.config.scenario;
  j["pi0"] = r.config.pi0;
  j["n"] = r.config.n;
  j["M"] = r.config.replicates;
  j["m"] = r.invalid;
  j["seed"] = r.config.seed;
  j["study"] = o.coverage ? "coverage" : o.se_study ? "se" : "bias";
  json est = json::object();
  for (std::size_t c = 0; c < kMcColumns; ++c) {
    est[kMcColumnNames[c]] = column_json(r.columns[c]);
  }
  j["estimators"] = est;
  if (r.miss_rate) {
    j["miss_rate"] = *r.miss_rate;
    j["N"] = r.config.bootstrap_replicates;
    j["level"] = r.config.level;
  }
  const fs::path js = dir / "mc.json";
  open_out(js) << j.dump(2) << '\n';
  if (!o.quiet) {
    write_report_tsv(std::cout, r);
  }
  json m;
  m["command"] = "mc";
  m["config"] = j;
  m["config"].erase("estimators");
  write_manifest(dir, m, { tsv, js }, sw);
  return kOk;
}

void add_source_options(CLI::App* app, Options& o)
{
  app->add_option("--input", o.input, "CSV file with columns x,y (header optional)");
  app->add_option("--scenario", o.scenario, "Built-in scenario: WOn WOg WOe MOn MOg MOe SOn SOg SOe");
  app->add_option("--pi0", o.pi0, "Mixing proportion of the simulated scenario");
  app->add_option("--n", o.n, "Sample size of the simulated scenario");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--known", o.known,
                  "Known error law: normal:<sigma> | gamma:<shape>:<rate>:<var> | exp:<var> | table:<path>");
  app->add_option("--transform", o.transform, "Known line alpha*,beta* subtracted from y");
  app->add_option("--condition-limit", o.condition_limit, "Largest accepted condition number");
  app->add_option("--threads", o.threads, "Worker threads (0 = all cores); results do not depend on it");
  app->add_option("--out-dir", o.out_dir, "Directory for output files");
  app->add_flag("--quiet", o.quiet, "Do not print tables to stdout");
}

void add_grid_options(CLI::App* app, Options& o)
{
  app->add_option("--grid-points", o.grid_points, "Number of evaluation points")->check(CLI::PositiveNumber);
  app->add_option("--bandwidth", o.bandwidth, "plugin | scale | <h>");
  app->add_flag("--force", o.force, "Continue when pi_n lies outside (0, 1]");
  app->add_flag("--with-truth", o.with_truth, "Add the true F or f (scenario input only)");
}

int run(int argc, char** argv)
{
  CLI::App app{ "Estimation for a two-component mixture of regressions with one known component" };
  app.require_subcommand(1);
  Options o;

  auto* fit = app.add_subcommand("fit", "Estimate (alpha, beta, pi) with standard errors");
  add_source_options(fit, o);
  fit->add_flag("--lambda-family", o.lambda_family, "Also report the 27 lambda-based estimators");
  fit->add_flag("--sigma-star", o.sigma_star, "Also report the unstable sigma* moment diagnostic");

  auto* cdf = app.add_subcommand("cdf", "Estimate the error c.d.f. F on a grid");
  add_source_options(cdf, o);
  add_grid_options(cdf, o);

  auto* pdf = app.add_subcommand("pdf", "Estimate the error p.d.f. f on a grid");
  add_source_options(pdf, o);
  add_grid_options(pdf, o);

  auto* bnd = app.add_subcommand("band", "Multiplier-bootstrap confidence band for F");
  add_source_options(bnd, o);
  add_grid_options(bnd, o);
  bnd->add_option("--N", o.replicates_boot, "Bootstrap replicates")->check(CLI::PositiveNumber);
  bnd->add_option("--level", o.level, "Band level p (coverage 1 - p)");
  bnd->add_flag("--dump-sup", o.dump_sup, "Write the bootstrap sup statistics");

  auto* sim = app.add_subcommand("simulate", "Draw a dataset from a built-in scenario");
  add_source_options(sim, o);
  sim->add_option("--output", o.output, "CSV path (default <out-dir>/simulated.csv)");
  sim->add_flag("--with-latent", o.with_latent, "Add the latent component indicator z");

  auto* mc = app.add_subcommand("mc", "Monte Carlo study over a built-in scenario");
  add_source_options(mc, o);
  mc->add_option("--M", o.replicates_mc, "Monte Carlo replicates");
  mc->add_option("--N", o.replicates_boot, "Bootstrap replicates (coverage study)");
  mc->add_option("--level", o.level, "Band level p");
  mc->add_option("--grid-points", o.grid_points, "Grid size for the coverage study");
  mc->add_option("--bandwidth", o.bandwidth, "plugin | scale | <h>");
  mc->add_flag("--coverage", o.coverage, "Band coverage study");
  mc->add_flag("--se", o.se_study, "Standard-error calibration study");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*fit) {
      return cmd_fit(o);
    }
    if (*cdf) {
      return cmd_grid("cdf", o);
    }
    if (*pdf) {
      return cmd_grid("pdf", o);
    }
    if (*bnd) {
      return cmd_grid("band", o);
    }
    if (*sim) {
      return cmd_simulate(o);
    }
    if (*mc) {
      return cmd_mc(o);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kConfig;
  } catch (const IngestionError& e) {
    std::cerr << "ingestion error: " << e.what() << '\n';
    return kIngestion;
  } catch (const DegenerateDesign& e) {
    std::cerr << "degenerate design: " << e.what();
    if (e.condition_number() > 0.0) {
      std::cerr << " (condition number " << e.condition_number() << ")";
    }
    std::cerr << '\n';
    return kDegenerate;
  } catch (const OutsideDomain& e) {
    std::cerr << "outside domain: " << e.what() << '\n';
    return kDomain;
  } catch (const GuardTripped& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kDomain;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}

} // namespace

int main(int argc, char** argv)
{
  return run(argc, argv);
}
