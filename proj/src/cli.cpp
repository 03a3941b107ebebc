#include "krrlab/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "krrlab/config.hpp"
#include "krrlab/csv_io.hpp"
#include "krrlab/format.hpp"
#include "krrlab/harness.hpp"
#include "krrlab/krr.hpp"
#include "krrlab/svg_plot.hpp"
#include "krrlab/theory.hpp"

#ifndef KRRLAB_VERSION
#define KRRLAB_VERSION "0.0.0"
#endif

namespace krrlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Raised for unwritable outputs so dispatch can give them their own prefix.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  bool plot = false;
  bool log_y = false;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  unsigned threads = 0;
};

struct ScheduleArgs {
  std::string kind = "alpha1";
  double n = 100;
  double delta = 0.1;
  double nu = 1.0;
  double c1 = 1.0;
  double c2_tilde = 1.0;
  int q = 3;
  double kappa = 1.0;
  double p = 0.5;
};

struct RegimeArgs {
  double n = 20;
  double delta = 0.1;
  int q = 3;
  double sigma = 2.0;
  double Q = 10.0;
  double c1 = 1.0;
  double c2 = 1.0;
};

struct EffdimArgs {
  int n = 200;
  std::vector<double> alphas = {1.0, 0.1, 0.01, 0.001};
  double p = 0.5;
  double bandwidth = 1.0;
  std::uint64_t seed = 0;
};

struct BoundArgs {
  std::string kind = "capacity_free";
  double alpha = 0.1;
  double delta = 0.1;
  double n = 10000;
  double nu = 1.0;
  double R = 1.0;
  double sup_norm = 0.0;
  double sigma = 1.0;
  double Q = 1.0;
  int q = 3;
  double c1 = 1.0;
  double c2 = 1.0;
  double p = 0.5;
  double D_tilde = 1.0;
  std::optional<double> effdim;
  int spectrum_n = 200;
  std::uint64_t seed = 0;
  double multiplier = 1.0;
};

struct FnSimArgs {
  std::vector<int> n_list;
};

void add_common(CLI::App* sub, Common& c, bool needs_config) {
  auto* opt = sub->add_option("--config", c.config_path, "Experiment config (JSON)");
  if (needs_config) opt->required();
  sub->add_option("--out", c.out_dir, "Output directory");
  sub->add_flag("--plot", c.plot, "Also write an SVG plot");
  sub->add_flag("--log-y", c.log_y, "Logarithmic y axis for plots");
  sub->add_option("--seed", c.seed, "Override master_seed");
  sub->add_option("--set", c.overrides, "Generic key=value config override (repeatable)");
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

ExperimentConfig load(const Common& c) {
  auto overrides = c.overrides;
  if (c.seed) overrides.push_back("master_seed=" + std::to_string(*c.seed));
  return load_config(c.config_path, overrides);
}

fs::path prepare_out_dir(const std::string& dir) {
  const fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) throw OutputError("cannot create output directory " + p.string());
  return p;
}

template <typename Fn>
void guard_output(Fn&& fn) {
  try {
    fn();
  } catch (const std::runtime_error& e) {
    throw OutputError(e.what());
  }
}

void warn_moment_order(const ExperimentConfig& config, std::ostream& err) {
  for (const auto& m : config.noise_models) {
    try {
      const auto mom = moments(m);
      if (mom.q_max && *mom.q_max < 3)
        err << "warning: noise '" << m.label() << "' has finite absolute moments only up to order " << *mom.q_max
            << "; the moment assumption asks for an integer q >= 3\n";
    } catch (const std::domain_error&) {
      err << "warning: noise '" << m.label() << "' has infinite variance\n";
    }
  }
}

void print_quantiles(const QuantileTable& table, std::ostream& out) { write_csv(out, table); }

int cmd_run(const Common& c, std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = load(c);
  warn_moment_order(config, err);
  const fs::path dir = prepare_out_dir(c.out_dir);

  const auto start = std::chrono::steady_clock::now();
  const ExperimentResult result = run_experiment(config, RunOptions{c.threads, std::nullopt});
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json failures = json::array();
  for (const auto& f : result.failures)
    failures.push_back({{"noise", f.noise}, {"alpha", f.alpha}, {"failed", f.failed}});
  const json summary = {{"config", config_to_json(config)},
                        {"failures", failures},
                        {"total_failures", result.total_failures},
                        {"wall_seconds", wall},
                        {"version", version()}};

  guard_output([&] {
    export_csv(result.quantiles, dir / "quantiles.csv");
    export_csv(result.raw, dir / "raw.csv");
    std::ofstream s(dir / "summary.json", std::ios::binary | std::ios::trunc);
    if (!s) throw std::runtime_error("cannot write " + (dir / "summary.json").string());
    s << summary.dump(2) << '\n';
    if (c.plot)
      write_svg(render_svg(quantile_panels(result.quantiles), {"confidence level 1-delta", "excess risk quantile",
                                                               false, c.log_y}),
                dir / "quantiles.svg");
  });

  print_quantiles(result.quantiles, out);
  if (result.total_failures > 0) err << "warning: " << result.total_failures << " trial(s) failed (risk = nan)\n";
  return kExitOk;
}

int cmd_quantiles(const Common& c, const std::string& raw_path, std::ostream& out) {
  const ExperimentConfig config = load(c);
  const fs::path raw = raw_path.empty() ? fs::path(c.out_dir) / "raw.csv" : fs::path(raw_path);
  const QuantileTable table = quantiles_from_raw(read_raw_csv(raw), config.levels);
  const fs::path dir = prepare_out_dir(c.out_dir);
  guard_output([&] {
    export_csv(table, dir / "quantiles.csv");
    if (c.plot)
      write_svg(render_svg(quantile_panels(table), {"confidence level 1-delta", "excess risk quantile", false, c.log_y}),
                dir / "quantiles.svg");
  });
  print_quantiles(table, out);
  return kExitOk;
}

void kv(std::ostream& out, const std::string& key, double value) { out << key << " = " << to_shortest(value) << '\n'; }
void kv(std::ostream& out, const std::string& key, bool value) { out << key << " = " << (value ? "true" : "false") << '\n'; }
void kv(std::ostream& out, const std::string& key, const std::string& value) { out << key << " = " << value << '\n'; }

int cmd_schedule(const ScheduleArgs& a, std::ostream& out) {
  theory::FnConstants fn;
  fn.c1 = a.c1;
  fn.c2_tilde = a.c2_tilde;
  kv(out, "kind", a.kind);
  if (a.kind == "alpha1") {
    kv(out, "alpha", theory::schedule_alpha1(a.n, a.delta, a.nu, fn));
  } else if (a.kind == "alpha2") {
    const auto s = theory::schedule_alpha2(a.n, a.delta, a.nu, a.q, a.kappa);
    kv(out, "alpha", s.value);
    kv(out, "pre_clamp", s.pre_clamp);
    kv(out, "clamped", s.clamped);
  } else if (a.kind == "capacity") {
    kv(out, "alpha", theory::schedule_alpha_capacity(a.n, a.delta, a.nu, a.p, a.c1));
  } else {
    throw CLI::ValidationError("--kind", "expected alpha1, alpha2 or capacity");
  }
  return kExitOk;
}

int cmd_regime(const RegimeArgs& a, const Common& c, std::ostream& out) {
  const theory::MomentParams noise{a.sigma, a.Q, a.q};
  theory::FnConstants fn;
  fn.c1 = a.c1;
  fn.c2 = a.c2;
  kv(out, "n0", theory::n0(a.delta, noise, a.c1));
  kv(out, "in_D1", theory::in_D1(a.n, a.delta, noise, a.c1));
  kv(out, "in_D2", theory::in_D2(a.n, a.delta, noise, a.c1));
  kv(out, "eta", theory::eta_capacity_free(a.delta, a.n, noise, a.c1));
  kv(out, "fn_confidence_bound", theory::fn_confidence_bound(a.delta, a.n, noise, fn));
  const auto rc = theory::regime_change_delta(a.n, noise, fn);
  kv(out, "delta_bar", rc.delta);
  kv(out, "delta_bar_residual", rc.residual);
  kv(out, "delta_bar_root_found", rc.root_found);

  if (c.plot) {
    const fs::path dir = prepare_out_dir(c.out_dir);
    std::vector<PlotSeries> curves;
    for (int q : {3, 4, 6}) {
      PlotSeries s{"q=" + std::to_string(q), {}, {}};
      for (int i = 0; i <= 200; ++i) {
        const double delta = std::pow(10.0, -3.0 + i * (std::log10(0.5) + 3.0) / 200.0);
        s.x.push_back(delta);
        s.y.push_back(theory::n0(delta, {a.sigma, a.Q, q}, a.c1));
      }
      curves.push_back(std::move(s));
    }
    guard_output([&] {
      write_svg(render_svg({{"effective sample size n0", curves}}, {"delta", "n0", true, true}), dir / "n0.svg");
    });
  }
  return kExitOk;
}

int cmd_effdim(const EffdimArgs& a, std::ostream& out) {
  if (a.n < 1) throw CLI::ValidationError("--n", "must be >= 1");
  const KernelSpec kernel = KernelSpec::rbf(a.bandwidth);
  CounterRng rng(derive_key(a.seed, {hash_label("effdim")}));
  Vector<double> xs(a.n);
  for (int i = 0; i < a.n; ++i) xs(i) = MarginalSpec{}.sample(rng);
  const EigenSpectrum spectrum = empirical_spectrum(kernel, xs);
  const double d_tilde = theory::calibrate_D_tilde(spectrum, a.p, a.alphas);
  const theory::EigenDecay decay{a.p, 1.0, d_tilde};
  kv(out, "D_tilde", d_tilde);
  out << "alpha,effective_dimension,trace_over_alpha,bound\n";
  for (double alpha : a.alphas) {
    out << to_shortest(alpha) << ',' << to_shortest(theory::effective_dimension(spectrum, alpha)) << ','
        << to_shortest(spectrum.values().sum() / alpha) << ','
        << to_shortest(theory::effective_dimension_bound(decay, alpha)) << '\n';
  }
  return kExitOk;
}

void print_report(const theory::BoundReport& r, std::ostream& out) {
  kv(out, "total", r.total);
  kv(out, "bias_term", r.bias_term);
  kv(out, "log_term", r.log_term);
  kv(out, "mixed_term", r.mixed_term);
  kv(out, "eta_term", r.eta_term);
  kv(out, "eta", r.eta);
  kv(out, "C_kappa", r.C_kappa);
  kv(out, "C_diamond_tilde", r.C_diamond_tilde);
  kv(out, "C_diamond", r.C_diamond);
  kv(out, "effective_dimension", r.effective_dimension);
  kv(out, "precondition_ok", r.precondition_ok);
}

int cmd_bound(const BoundArgs& a, std::ostream& out) {
  const KernelSpec kernel = KernelSpec::rbf(1.0);
  const theory::SourceCondition src{a.nu, a.R, a.sup_norm};
  const theory::MomentParams noise{a.sigma, a.Q, a.q};
  theory::FnConstants fn;
  fn.c1 = a.c1;
  fn.c2 = a.c2;
  if (a.kind == "capacity_free") {
    print_report(theory::capacity_free_bound(a.alpha, a.delta, a.n, kernel, src, noise, fn), out);
  } else if (a.kind == "capacity") {
    const theory::EigenDecay decay{a.p, 1.0, a.D_tilde};
    if (a.effdim) {
      print_report(theory::capacity_bound(a.alpha, a.delta, a.n, kernel, src, decay, noise, fn, *a.effdim,
                                          a.multiplier),
                   out);
    } else {
      CounterRng rng(derive_key(a.seed, {hash_label("effdim")}));
      Vector<double> xs(a.spectrum_n);
      for (int i = 0; i < a.spectrum_n; ++i) xs(i) = MarginalSpec{}.sample(rng);
      print_report(theory::capacity_bound(a.alpha, a.delta, a.n, kernel, src, decay, noise, fn,
                                          empirical_spectrum(kernel, xs), a.multiplier),
                   out);
    }
  } else {
    throw CLI::ValidationError("--kind", "expected capacity_free or capacity");
  }
  return kExitOk;
}

int cmd_fn_sim(const Common& c, const FnSimArgs& a, std::ostream& out) {
  const ExperimentConfig config = load(c);
  const FnSumSetup setup{config.kernel, config.marginal, config.master_seed};
  const std::vector<int> n_list = a.n_list.empty() ? std::vector<int>{config.n} : a.n_list;
  for (int n : n_list)
    if (n < 1) throw CLI::ValidationError("--n-list", "entries must be >= 1");
  const auto rows =
      fn_sum_quantiles(setup, config.noise_models, n_list, config.trials, config.levels, RunOptions{c.threads, {}});
  if (c.out_dir != ".") {
    const fs::path dir = prepare_out_dir(c.out_dir);
    guard_output([&] { export_csv(rows, dir / "fn_sum.csv"); });
  }
  write_csv(out, rows);
  return kExitOk;
}

}  // namespace

const char* version() { return KRRLAB_VERSION; }

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"krrlab: kernel ridge regression under heavy-tailed noise", "krrlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(version()));

  Common common;
  std::string raw_path;
  ScheduleArgs sched;
  RegimeArgs regime;
  EffdimArgs effdim;
  BoundArgs bound;
  FnSimArgs fnsim;

  auto* run = app.add_subcommand("run", "Run the excess-risk quantile experiment");
  add_common(run, common, true);

  auto* quant = app.add_subcommand("quantiles", "Recompute quantiles.csv from a raw risk log");
  add_common(quant, common, true);
  quant->add_option("--raw", raw_path, "Raw risk CSV (default: <out>/raw.csv)");

  auto* schedule = app.add_subcommand("schedule", "Evaluate a regularization schedule");
  schedule->add_option("--kind", sched.kind, "alpha1 | alpha2 | capacity");
  schedule->add_option("--n", sched.n);
  schedule->add_option("--delta", sched.delta);
  schedule->add_option("--nu", sched.nu);
  schedule->add_option("--c1", sched.c1);
  schedule->add_option("--c2-tilde", sched.c2_tilde);
  schedule->add_option("--q", sched.q);
  schedule->add_option("--kappa", sched.kappa);
  schedule->add_option("--p", sched.p);

  auto* reg = app.add_subcommand("regime", "Effective sample size and confidence regimes");
  reg->add_option("--n", regime.n);
  reg->add_option("--delta", regime.delta);
  reg->add_option("--q", regime.q);
  reg->add_option("--sigma", regime.sigma);
  reg->add_option("--Q", regime.Q);
  reg->add_option("--c1", regime.c1);
  reg->add_option("--c2", regime.c2);
  reg->add_option("--out", common.out_dir, "Output directory for --plot");
  reg->add_flag("--plot", common.plot, "Write n0 curves for q in {3,4,6} to n0.svg");

  auto* eff = app.add_subcommand("effdim", "Plug-in effective dimension of the Gaussian kernel under N(0,1)");
  eff->add_option("--n", effdim.n, "Number of covariates for the empirical spectrum");
  eff->add_option("--alphas", effdim.alphas)->delimiter(',');
  eff->add_option("--p", effdim.p);
  eff->add_option("--bandwidth", effdim.bandwidth);
  eff->add_option("--seed", effdim.seed);

  auto* bnd = app.add_subcommand("bound", "Evaluate an excess-risk bound");
  bnd->add_option("--kind", bound.kind, "capacity_free | capacity");
  bnd->add_option("--alpha", bound.alpha);
  bnd->add_option("--delta", bound.delta);
  bnd->add_option("--n", bound.n);
  bnd->add_option("--nu", bound.nu);
  bnd->add_option("--R", bound.R);
  bnd->add_option("--sup-norm", bound.sup_norm, "Sup norm of the target");
  bnd->add_option("--sigma", bound.sigma);
  bnd->add_option("--Q", bound.Q);
  bnd->add_option("--q", bound.q);
  bnd->add_option("--c1", bound.c1);
  bnd->add_option("--c2", bound.c2);
  bnd->add_option("--p", bound.p);
  bnd->add_option("--D-tilde", bound.D_tilde);
  bnd->add_option("--effdim", bound.effdim, "Effective dimension (default: plug-in estimate)");
  bnd->add_option("--spectrum-n", bound.spectrum_n);
  bnd->add_option("--seed", bound.seed);
  bnd->add_option("--multiplier", bound.multiplier);

  auto* fn = app.add_subcommand("fn-sim", "Simulate the noise-sum norm ||(1/n) sum k(X_i, .) e_i||");
  add_common(fn, common, true);
  fn->add_option("--n-list", fnsim.n_list)->delimiter(',');

  if (!args.empty() && !args.front().starts_with('-') && app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << "usage error: unknown subcommand '" << args.front() << "'\n\n" << app.help();
    return kExitUsage;
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForVersion& e) {
    out << version() << '\n';
    return kExitOk;
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (run->parsed()) return cmd_run(common, out, err);
    if (quant->parsed()) return cmd_quantiles(common, raw_path, out);
    if (schedule->parsed()) return cmd_schedule(sched, out);
    if (reg->parsed()) return cmd_regime(regime, common, out);
    if (eff->parsed()) return cmd_effdim(effdim, out);
    if (bnd->parsed()) return cmd_bound(bound, out);
    if (fn->parsed()) return cmd_fn_sim(common, fnsim, out);
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const OutputError& e) {
    err << "output error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << '\n';
    return kExitFailure;
  }
  err << "usage error: no subcommand\n\n" << app.help();
  return kExitUsage;
}

}  // namespace krrlab::cli
