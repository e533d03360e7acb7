// Batch front end: config-driven runs producing report.json and CSV side
// tables. Exit codes: 0 success, 1 mathematical failure states that are
// valid outcomes, 2 config or validation errors (with a machine-readable
// diagnostic list on stdout).

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "balmet/convex.hpp"
#include "balmet/io.hpp"
#include "balmet/quantization.hpp"
#include "balmet/samples.hpp"
#include "balmet/weights.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace balmet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitMathFailure = 1;
constexpr int kExitConfig = 2;

class config_failure : public std::runtime_error {
 public:
  config_failure(std::string path, const std::string& message)
      : std::runtime_error(message), pointer(std::move(path)) {}
  std::string pointer;  // JSON-pointer-style locator, e.g. "/seed"
};

[[noreturn]] void fail_config(const std::string& pointer, const std::string& message) {
  throw config_failure(pointer, message);
}

struct LoadedFile {
  std::string path;
  std::string bytes;
  std::string digest;
};

LoadedFile read_file(const std::string& path, const std::string& pointer) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    fail_config(pointer, "cannot open input file '" + path + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  LoadedFile f{path, buf.str(), {}};
  f.digest = fnv1a_hex(f.bytes);
  return f;
}

json parse_json_file(const LoadedFile& f, const std::string& pointer) {
  json doc = json::parse(f.bytes, nullptr, false);
  if (doc.is_discarded()) {
    fail_config(pointer, "file '" + f.path + "' is not valid JSON");
  }
  return doc;
}

/// Atomic write: temp file in the target directory, then rename.
void write_atomically(const fs::path& target, const std::string& bytes) {
  if (!target.parent_path().empty()) {
    fs::create_directories(target.parent_path());
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      fail_config("/out", "cannot write to '" + tmp.string() + "'");
    }
    out << bytes;
  }
  fs::rename(tmp, target);
}

struct RunContext {
  std::string command;
  fs::path out_dir;
  json inputs = json::object();
  json options = json::object();
  json results = json::object();
  std::vector<std::pair<std::string, std::string>> side_tables;  // name -> bytes
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

  void add_input(const std::string& name, const LoadedFile& f) {
    inputs[name] = json{{"path", f.path}, {"digest", f.digest}};
  }

  int finish(int exit_code) {
    json report;
    report["command"] = command;
    report["inputs"] = inputs;
    report["options"] = options;
    report["results"] = results;
    const auto elapsed = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::steady_clock::now() - started);
    report["timings"] = json{{"total_us", elapsed.count()}};
    write_atomically(out_dir / "report.json", report.dump(2) + "\n");
    for (const auto& [name, bytes] : side_tables) {
      write_atomically(out_dir / name, bytes);
    }
    return exit_code;
  }
};

json verdict_to_json(const ExistenceVerdict& verdict) {
  json v;
  if (const auto* min = std::get_if<MinimizerVerdict>(&verdict)) {
    v["kind"] = "minimizer";
    v["gradient_norm"] = min->gradient_norm;
    v["value"] = min->value;
    v["point"] = form_to_json(min->point);
  } else {
    const auto& deg = std::get<DegenerateVerdict>(verdict);
    v["kind"] = "degenerate";
    v["certified_slope"] = deg.certified_slope.value();
    v["direction"] = direction_to_json(deg.direction);
    v["witness"] = deg.witness;
  }
  return v;
}

// --- subcommands ---

int run_balance(RunContext& ctx, const LoadedFile& sample_file, double eps, int max_iter) {
  const AnySample any = sample_from_json(parse_json_file(sample_file, "/sample"));
  const PolarizedSample& plain = plain_part(any);

  BalanceOptions opts;
  opts.eps_bal = eps;
  opts.max_iter = max_iter;
  ctx.options["eps"] = eps;
  ctx.options["max_iter"] = max_iter;

  const HermitianForm h0 = HermitianForm::identity(plain.sections());
  const BalanceResult result = std::holds_alternative<PolarizedSample>(any)
                                   ? balance_iterate(std::get<PolarizedSample>(any), h0, opts)
                                   : balance_iterate(std::get<AnticanonicalSample>(any), h0, opts);

  const char* status = result.status == BalanceStatus::Converged   ? "converged"
                       : result.status == BalanceStatus::Diverged ? "diverged"
                                                                   : "max_iter";
  ctx.results["status"] = status;
  ctx.results["residual"] = result.residual;
  ctx.results["iterations"] = result.iterations;
  ctx.results["monotone"] = result.monotone;
  ctx.results["form"] = form_to_json(result.form);
  if (result.escape_direction) {
    ctx.results["escape_direction"] = direction_to_json(*result.escape_direction);
  }

  std::ostringstream csv;
  csv << "iteration,residual\n";
  for (size_t i = 0; i < result.residual_history.size(); ++i) {
    csv << (i + 1) << "," << format_double(result.residual_history[i]) << "\n";
  }
  ctx.side_tables.emplace_back("residuals.csv", csv.str());

  return ctx.finish(result.status == BalanceStatus::Converged ? kExitOk : kExitMathFailure);
}

int run_slope(RunContext& ctx, const LoadedFile& sample_file, const LoadedFile& direction_file,
              double t_max, double tol) {
  const AnySample any = sample_from_json(parse_json_file(sample_file, "/sample"));
  const TangentDirection a = direction_from_json(parse_json_file(direction_file, "/direction"));
  const PolarizedSample& plain = plain_part(any);
  const HermitianForm h0 = HermitianForm::identity(plain.sections());

  ctx.options["t_max"] = t_max;
  ctx.options["tol"] = tol;

  const EnergyRestriction restriction =
      std::holds_alternative<PolarizedSample>(any)
          ? energy_restriction(std::get<PolarizedSample>(any), h0, a)
          : ac_energy_restriction(std::get<AnticanonicalSample>(any), h0, a);

  const SlopeEstimate est =
      asymptotic_slope(RayFunction{restriction.eval, restriction.slope_at_infinity}, t_max, tol);
  ctx.results["estimate"] = est.infinite ? json("infinite") : json(est.value);
  ctx.results["window"] = json::array({est.t1, est.t2});
  ctx.results["drift"] = est.drift;
  ctx.results["converged"] = est.converged;
  ctx.results["exact_slope"] = restriction.slope_at_infinity;
  ctx.results["difference"] =
      est.infinite ? json("infinite") : json(est.value - restriction.slope_at_infinity);

  std::ostringstream csv;
  csv << "t,f\n";
  for (int j = 0; j <= 32; ++j) {
    const double t = t_max * j / 32.0;
    csv << format_double(t) << "," << format_double(restriction.eval(t)) << "\n";
  }
  ctx.side_tables.emplace_back("restriction.csv", csv.str());

  return ctx.finish(kExitOk);
}

int run_decide(RunContext& ctx, const LoadedFile& sample_file, std::uint64_t seed,
               const std::string& expect) {
  const AnySample any = sample_from_json(parse_json_file(sample_file, "/sample"));
  const PolarizedSample& plain = plain_part(any);

  DecideOptions opts;
  opts.seed = seed;
  ctx.options["stat_tol"] = opts.descent.stat_tol;
  ctx.options["cond_cap"] = opts.descent.cond_cap;
  ctx.options["verification_directions"] = opts.verification_directions;

  const HermitianForm h0 = HermitianForm::identity(plain.sections());
  const ExistenceVerdict verdict =
      std::holds_alternative<PolarizedSample>(any)
          ? decide_existence(BalancingEnergy(std::get<PolarizedSample>(any)), h0, opts)
          : decide_existence(AnticanonicalEnergy(std::get<AnticanonicalSample>(any)), h0, opts);

  ctx.results["verdict"] = verdict_to_json(verdict);

  bool expectation_met = true;
  if (expect == "minimizer") {
    expectation_met = found_minimizer(verdict);
  } else if (expect == "degenerate") {
    expectation_met = !found_minimizer(verdict);
  }
  ctx.results["expectation_met"] = expectation_met;
  return ctx.finish(expectation_met ? kExitOk : kExitMathFailure);
}

int run_chow(RunContext& ctx, const LoadedFile& toric_file, int m_max) {
  const ToricConfigData cfg = toric_from_json(parse_json_file(toric_file, "/toric"));
  ctx.options["m_max"] = m_max;

  const WeightTable table = toric_weight_table(cfg, m_max);
  const ExpansionCoefficients coeffs = fit_expansion(table);
  const Rational df = df_invariant(coeffs);

  std::vector<Rational> chow;
  chow.reserve(m_max);
  for (int m = 1; m <= m_max; ++m) {
    chow.push_back(chow_weight(m, coeffs, table));
  }

  ctx.results["a0"] = coeffs.a0.str();
  ctx.results["a1"] = coeffs.a1.str();
  ctx.results["b0"] = coeffs.b0.str();
  ctx.results["b1"] = coeffs.b1.str();
  ctx.results["fit_period"] = coeffs.fit_period;
  ctx.results["df"] = df.str();
  json chow_json = json::array();
  for (const Rational& c : chow) {
    chow_json.push_back(c.str());
  }
  ctx.results["chow"] = chow_json;

  std::ostringstream csv;
  write_weight_csv(csv, table, chow);
  ctx.side_tables.emplace_back("weights.csv", csv.str());
  return ctx.finish(kExitOk);
}

int run_bergman(RunContext& ctx, const LoadedFile& profile_file,
                const std::vector<int>& levels) {
  const MetricProfile profile = profile_from_json(parse_json_file(profile_file, "/profile"));
  ctx.options["levels"] = levels;
  ctx.results["convexity_margin"] = profile.convexity_margin;

  json residuals = json::array();
  double prev = 0.0;
  json ratios = json::array();
  for (size_t idx = 0; idx < levels.size(); ++idx) {
    const int k = levels[idx];
    const auto [sample, grid] = deformed_p1_sample(k, profile, QuadratureSpec::for_level(k, 2));
    const HermitianForm gram(sample.reference_gram());
    const RealVector rho = bergman_density(sample, gram, DensityNormalization::Paper);
    const int n_angular = sample.points() / static_cast<int>(grid.nodes.size());
    double r = 0.0;
    for (int a = 0; a < sample.points(); ++a) {
      r = std::max(r, std::abs(rho[a] - k - grid.values[a / n_angular] / (4.0 * M_PI)));
    }
    residuals.push_back(json{{"k", k}, {"residual", r}});
    if (idx > 0) {
      ratios.push_back(r / prev);
    }
    prev = r;

    std::ostringstream csv;
    write_curvature_csv(csv, grid);
    ctx.side_tables.emplace_back("curvature-k" + std::to_string(k) + ".csv", csv.str());
  }
  ctx.results["residuals"] = residuals;
  ctx.results["ratios"] = ratios;
  return ctx.finish(kExitOk);
}

int run_convexity(RunContext& ctx, const LoadedFile& sample_file, int trials,
                  std::uint64_t seed) {
  const AnySample any = sample_from_json(parse_json_file(sample_file, "/sample"));
  const PolarizedSample& plain = plain_part(any);
  const int n = plain.sections();
  ctx.options["trials"] = trials;
  const double tolerance = std::holds_alternative<PolarizedSample>(any) ? 1e-9 : 1e-6;
  ctx.options["violation_tolerance"] = tolerance;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto random_dir = [&]() {
    Matrix b(n, n);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        b(i, j) = Complex(gauss(rng), gauss(rng));
      }
    }
    TangentDirection d(((b + b.adjoint()) / 2.0).eval());
    return TangentDirection(d.entries / d.norm);
  };

  double worst = -std::numeric_limits<double>::infinity();
  double min_strict = std::numeric_limits<double>::infinity();
  std::ostringstream csv;
  csv << "trial,max_violation,strict_margin\n";
  std::vector<double> grid;
  for (int j = 0; j <= 20; ++j) {
    grid.push_back(-5.0 + 0.5 * j);
  }
  for (int trial = 0; trial < trials; ++trial) {
    const HermitianForm h0(hermitian_exp(Matrix(0.4 * random_dir().entries)),
                           structurally_positive);
    const TangentDirection a = random_dir();
    const EnergyRestriction f =
        std::holds_alternative<PolarizedSample>(any)
            ? energy_restriction(std::get<PolarizedSample>(any), h0, a)
            : ac_energy_restriction(std::get<AnticanonicalSample>(any), h0, a);
    const ConvexityReport report = convexity_report(RayFunction{f.eval, {}}, grid);
    worst = std::max(worst, report.max_violation);
    min_strict = std::min(min_strict, report.strict_margin);
    csv << trial << "," << format_double(report.max_violation) << ","
        << format_double(report.strict_margin) << "\n";
  }
  ctx.results["max_violation"] = worst;
  ctx.results["min_strict_margin"] = min_strict;
  ctx.results["within_tolerance"] = worst <= tolerance;
  ctx.side_tables.emplace_back("convexity.csv", csv.str());
  return ctx.finish(worst <= tolerance ? kExitOk : kExitMathFailure);
}

int run_sample_generator(RunContext& ctx, const std::string& kind, int k, int k2, int sections,
                         int points, int hyperplane_dim, const std::string& out_file) {
  json doc;
  if (kind == "p1") {
    doc = sample_to_json(build_p1_sample(k, QuadratureSpec::for_level(k)));
  } else if (kind == "product") {
    const PolarizedSample s1 = build_p1_sample(k, QuadratureSpec::for_level(k));
    const PolarizedSample s2 = build_p1_sample(k2, QuadratureSpec::for_level(k2));
    doc = sample_to_json(product_sample(s1, s2));
  } else if (kind == "degenerate") {
    doc = sample_to_json(degenerate_sample(sections, points, hyperplane_dim, true));
  } else if (kind == "ac-p1") {
    doc = sample_to_json(anticanonical_p1_sample(k, QuadratureSpec::for_level(2 * k)));
  } else {
    fail_config("/kind", "unknown sample kind '" + kind + "'");
  }
  (void)ctx;
  write_atomically(fs::path(out_file), doc.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"balmet: balanced Hermitian forms, slopes and algebraic weights"};
  app.require_subcommand(1);

  // shared options; seed is mandatory on every analysis command
  struct Common {
    std::string out_dir = "balmet-out";
    std::int64_t seed = -1;
    bool seed_set = false;
  };

  const auto add_common = [](CLI::App* cmd, Common& c) {
    cmd->add_option("--out", c.out_dir, "output directory for report.json and CSV tables");
    cmd->add_option("--seed", c.seed, "64-bit seed (reproducibility mandatory)")
        ->each([&c](const std::string&) { c.seed_set = true; });
  };

  Common c_balance, c_slope, c_decide, c_chow, c_bergman, c_convexity;

  auto* cmd_balance = app.add_subcommand("balance", "fixed-point iteration to a balanced form");
  std::string balance_sample;
  double balance_eps = 1e-12;
  int balance_max_iter = 2000;
  cmd_balance->add_option("--sample", balance_sample, "sample JSON")->required();
  cmd_balance->add_option("--eps", balance_eps, "relative residual target");
  cmd_balance->add_option("--max-iter", balance_max_iter, "iteration cap");
  add_common(cmd_balance, c_balance);

  auto* cmd_slope = app.add_subcommand("slope", "asymptotic slope along a geodesic ray");
  std::string slope_sample, slope_direction;
  double slope_t_max = 60.0, slope_tol = 1e-8;
  cmd_slope->add_option("--sample", slope_sample, "sample JSON")->required();
  cmd_slope->add_option("--direction", slope_direction, "direction JSON")->required();
  cmd_slope->add_option("--t-max", slope_t_max, "chord window endpoint");
  cmd_slope->add_option("--tol", slope_tol, "drift tolerance");
  add_common(cmd_slope, c_slope);

  auto* cmd_decide = app.add_subcommand("decide", "existence decision procedure");
  std::string decide_sample, decide_expect;
  cmd_decide->add_option("--sample", decide_sample, "sample JSON")->required();
  cmd_decide->add_option("--expect", decide_expect, "assert the outcome: minimizer|degenerate")
      ->check(CLI::IsMember({"minimizer", "degenerate"}));
  add_common(cmd_decide, c_decide);

  auto* cmd_chow = app.add_subcommand("chow", "exact Chow weights and DF invariant");
  std::string chow_toric;
  int chow_m_max = 50;
  cmd_chow->add_option("--toric", chow_toric, "toric configuration JSON")->required();
  cmd_chow->add_option("--m-max", chow_m_max, "table range");
  add_common(cmd_chow, c_chow);

  auto* cmd_bergman = app.add_subcommand("bergman", "density expansion residuals across levels");
  std::string bergman_profile;
  std::vector<int> bergman_levels{8, 16, 32};
  cmd_bergman->add_option("--profile", bergman_profile, "metric profile JSON")->required();
  cmd_bergman->add_option("--k", bergman_levels, "levels")->delimiter(',');
  add_common(cmd_bergman, c_bergman);

  auto* cmd_convexity = app.add_subcommand("convexity", "random geodesic convexity scan");
  std::string convexity_sample;
  int convexity_trials = 1000;
  cmd_convexity->add_option("--sample", convexity_sample, "sample JSON")->required();
  cmd_convexity->add_option("--trials", convexity_trials, "number of random restrictions");
  add_common(cmd_convexity, c_convexity);

  auto* cmd_sample = app.add_subcommand("sample", "generate a built-in sample file");
  std::string sample_kind = "p1", sample_out = "sample.json";
  int sample_k = 2, sample_k2 = 1, sample_n = 3, sample_m = 6, sample_h = 1;
  cmd_sample->add_option("--kind", sample_kind, "p1 | product | degenerate | ac-p1");
  cmd_sample->add_option("--k", sample_k, "level");
  cmd_sample->add_option("--k2", sample_k2, "second factor level (product)");
  cmd_sample->add_option("--sections", sample_n, "section count (degenerate)");
  cmd_sample->add_option("--points", sample_m, "point count (degenerate)");
  cmd_sample->add_option("--hyperplane-dim", sample_h, "killed coordinates (degenerate)");
  cmd_sample->add_option("--file", sample_out, "output sample path");

  CLI11_PARSE(app, argc, argv);

  const auto dispatch = [&](const std::string& name, Common& common,
                            auto&& body) -> int {
    RunContext ctx;
    ctx.command = name;
    ctx.out_dir = common.out_dir;
    try {
      if (name != "sample") {
        if (!common.seed_set) {
          fail_config("/seed", "missing required field: seed");
        }
        ctx.options["seed"] = common.seed;
      }
      return body(ctx, static_cast<std::uint64_t>(common.seed));
    } catch (const config_failure& e) {
      const json diag{{"diagnostics",
                       json::array({json{{"path", e.pointer}, {"message", e.what()}}})}};
      std::cout << diag.dump(2) << std::endl;
      return kExitConfig;
    } catch (const validation_error& e) {
      const json diag{{"diagnostics",
                       json::array({json{{"path", "/"}, {"message", e.what()}}})}};
      std::cout << diag.dump(2) << std::endl;
      return kExitConfig;
    } catch (const std::exception& e) {
      const json diag{{"diagnostics",
                       json::array({json{{"path", "/"}, {"message", e.what()}}})}};
      std::cout << diag.dump(2) << std::endl;
      return kExitConfig;
    }
  };

  if (cmd_balance->parsed()) {
    return dispatch("balance", c_balance, [&](RunContext& ctx, std::uint64_t) {
      if (!(balance_eps > 0.0)) fail_config("/eps", "tolerances must be positive");
      if (balance_max_iter < 1) fail_config("/max_iter", "iteration cap must be positive");
      const LoadedFile f = read_file(balance_sample, "/sample");
      ctx.add_input("sample", f);
      return run_balance(ctx, f, balance_eps, balance_max_iter);
    });
  }
  if (cmd_slope->parsed()) {
    return dispatch("slope", c_slope, [&](RunContext& ctx, std::uint64_t) {
      if (!(slope_t_max > 0.0) || !(slope_tol > 0.0)) {
        fail_config("/t_max", "tolerances must be positive");
      }
      const LoadedFile f = read_file(slope_sample, "/sample");
      const LoadedFile d = read_file(slope_direction, "/direction");
      ctx.add_input("sample", f);
      ctx.add_input("direction", d);
      return run_slope(ctx, f, d, slope_t_max, slope_tol);
    });
  }
  if (cmd_decide->parsed()) {
    return dispatch("decide", c_decide, [&](RunContext& ctx, std::uint64_t seed) {
      const LoadedFile f = read_file(decide_sample, "/sample");
      ctx.add_input("sample", f);
      return run_decide(ctx, f, seed, decide_expect);
    });
  }
  if (cmd_chow->parsed()) {
    return dispatch("chow", c_chow, [&](RunContext& ctx, std::uint64_t) {
      if (chow_m_max < 1) fail_config("/m_max", "table range must be positive");
      const LoadedFile f = read_file(chow_toric, "/toric");
      ctx.add_input("toric", f);
      return run_chow(ctx, f, chow_m_max);
    });
  }
  if (cmd_bergman->parsed()) {
    return dispatch("bergman", c_bergman, [&](RunContext& ctx, std::uint64_t) {
      if (bergman_levels.empty()) fail_config("/k", "need at least one level");
      const LoadedFile f = read_file(bergman_profile, "/profile");
      ctx.add_input("profile", f);
      return run_bergman(ctx, f, bergman_levels);
    });
  }
  if (cmd_convexity->parsed()) {
    return dispatch("convexity", c_convexity, [&](RunContext& ctx, std::uint64_t seed) {
      if (convexity_trials < 1) fail_config("/trials", "trial count must be positive");
      const LoadedFile f = read_file(convexity_sample, "/sample");
      ctx.add_input("sample", f);
      return run_convexity(ctx, f, convexity_trials, seed);
    });
  }
  if (cmd_sample->parsed()) {
    Common c_gen;
    c_gen.out_dir = ".";
    return dispatch("sample", c_gen, [&](RunContext& ctx, std::uint64_t) {
      return run_sample_generator(ctx, sample_kind, sample_k, sample_k2, sample_n, sample_m,
                                  sample_h, sample_out);
    });
  }
  return kExitConfig;
}
