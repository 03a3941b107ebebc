#include "krrlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "krrlab/krr.hpp"

namespace krrlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument("invalid config: " + field + ": " + what);
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<std::size_t> dispatch_order(std::size_t count, const std::optional<std::uint64_t>& shuffle_seed) {
  if (!shuffle_seed) return {};
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  CounterRng rng(*shuffle_seed);
  for (std::size_t i = count; i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

std::vector<double> finite_sorted(std::span<const double> values) {
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values)
    if (!std::isnan(v)) out.push_back(v);
  std::sort(out.begin(), out.end());
  return out;
}

double median_of(std::span<const double> values) {
  const auto sorted = finite_sorted(values);
  return sorted.empty() ? kNaN : sorted_quantile(sorted, 0.5);
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!noise_models.empty(), "noise_models", "must be nonempty");
  for (std::size_t i = 0; i < noise_models.size(); ++i)
    for (std::size_t j = i + 1; j < noise_models.size(); ++j)
      require(noise_models[i].label() != noise_models[j].label(), "noise_models",
              "duplicate label '" + noise_models[i].label() + "'");
  require(n >= 1, "n", "must be >= 1");
  require(!alphas.empty(), "alphas", "must be nonempty");
  for (double a : alphas) require(a > 0.0 && std::isfinite(a), "alphas", "entries must be positive and finite");
  for (std::size_t i = 0; i < alphas.size(); ++i)
    for (std::size_t j = i + 1; j < alphas.size(); ++j) require(alphas[i] != alphas[j], "alphas", "duplicate entry");
  require(trials >= 1, "trials", "must be >= 1");
  require(!levels.empty(), "levels", "must be nonempty");
  for (double l : levels) require(l >= 0.0 && l <= 1.0, "levels", "entries must lie in [0, 1]");
  require(std::is_sorted(levels.begin(), levels.end()), "levels", "must be sorted ascending");
  if (risk_method.kind == RiskMethod::monte_carlo) require(risk_method.m >= 2, "risk_method.m", "must be >= 2");
}

std::uint64_t stream_key(std::uint64_t master_seed, std::string_view noise_label, std::uint64_t slot,
                         std::uint64_t trial_index, StreamRole role) {
  return derive_key(master_seed, {hash_label(noise_label), slot, trial_index, static_cast<std::uint64_t>(role)});
}

double run_trial_at(const ExperimentConfig& config, const NoiseModel& noise, double alpha, std::uint64_t slot,
                    std::uint64_t trial_index) {
  const auto& label = noise.label();
  CounterRng covariates(stream_key(config.master_seed, label, slot, trial_index, StreamRole::covariate));
  NoiseSampler eps(noise, stream_key(config.master_seed, label, slot, trial_index, StreamRole::noise));

  Vector<double> xs(config.n);
  for (int i = 0; i < config.n; ++i) xs(i) = config.marginal.sample(covariates);
  Vector<double> ys = eval_expansion(config.f_star, config.kernel, xs);
  for (int i = 0; i < config.n; ++i) ys(i) += eps();

  std::optional<KrrModel> model;
  try {
    model.emplace(fit(config.kernel, Dataset(std::move(xs), std::move(ys)), alpha));
  } catch (const std::runtime_error&) {
    return kNaN;
  }

  if (config.risk_method.kind == RiskMethod::closed_form)
    return excess_risk_closed(config.kernel, config.marginal, model->expansion, config.f_star).value;
  CounterRng mc(stream_key(config.master_seed, label, slot, trial_index, StreamRole::risk_mc));
  return excess_risk_mc(config.kernel, config.marginal, model->expansion, config.f_star, config.risk_method.m, mc)
      .value;
}

double run_trial(const ExperimentConfig& config, const NoiseModel& noise, std::size_t alpha_index,
                 std::uint64_t trial_index) {
  return run_trial_at(config, noise, config.alphas.at(alpha_index), alpha_index, trial_index);
}

void parallel_for(std::size_t count, unsigned threads, const std::vector<std::size_t>& order,
                  const std::function<void(std::size_t)>& body) {
  if (!order.empty() && order.size() != count) throw std::invalid_argument("parallel_for: order has wrong size");
  const unsigned workers = std::min<std::size_t>(resolve_threads(threads), std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  const auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(order.empty() ? i : order[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };

  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);
}

QuantileTable quantiles_from_raw(const RawRiskLog& raw, const std::vector<double>& levels) {
  QuantileTable table;
  std::size_t begin = 0;
  while (begin < raw.size()) {
    std::size_t end = begin;
    while (end < raw.size() && raw[end].noise == raw[begin].noise && raw[end].alpha == raw[begin].alpha) ++end;
    std::vector<double> risks;
    risks.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) risks.push_back(raw[i].risk);
    const auto sorted = finite_sorted(risks);
    for (double level : levels)
      table.push_back({raw[begin].noise, raw[begin].alpha, level, sorted.empty() ? kNaN : sorted_quantile(sorted, level)});
    begin = end;
  }
  return table;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  config.validate();
  const std::size_t n_alpha = config.alphas.size();
  const auto trials = static_cast<std::size_t>(config.trials);
  const std::size_t total = config.noise_models.size() * n_alpha * trials;

  std::vector<double> risks(total, kNaN);
  parallel_for(total, options.threads, dispatch_order(total, options.shuffle_seed), [&](std::size_t idx) {
    const std::size_t t = idx % trials;
    const std::size_t a = (idx / trials) % n_alpha;
    const std::size_t k = idx / (trials * n_alpha);
    risks[idx] = run_trial(config, config.noise_models[k], a, t);
  });

  ExperimentResult result;
  result.raw.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    const std::size_t t = idx % trials;
    const std::size_t a = (idx / trials) % n_alpha;
    const std::size_t k = idx / (trials * n_alpha);
    result.raw.push_back({config.noise_models[k].label(), config.alphas[a], t, risks[idx]});
  }
  for (std::size_t block = 0; block < total / trials; ++block) {
    const auto first = risks.begin() + static_cast<std::ptrdiff_t>(block * trials);
    const auto failed = static_cast<std::size_t>(std::count_if(first, first + static_cast<std::ptrdiff_t>(trials),
                                                               [](double r) { return std::isnan(r); }));
    result.failures.push_back({config.noise_models[block / n_alpha].label(), config.alphas[block % n_alpha], failed});
    result.total_failures += failed;
  }
  result.quantiles = quantiles_from_raw(result.raw, config.levels);
  return result;
}

double fn_sum_trial(const FnSumSetup& setup, const NoiseModel& noise, int n, std::uint64_t trial_index) {
  if (n < 1) throw std::invalid_argument("fn_sum_trial: n must be >= 1");
  const auto slot = static_cast<std::uint64_t>(n);
  CounterRng covariates(stream_key(setup.master_seed, noise.label(), slot, trial_index, StreamRole::covariate));
  NoiseSampler eps(noise, stream_key(setup.master_seed, noise.label(), slot, trial_index, StreamRole::noise));
  Vector<double> xs(n);
  Vector<double> e(n);
  for (int i = 0; i < n; ++i) xs(i) = setup.marginal.sample(covariates);
  for (int i = 0; i < n; ++i) e(i) = eps();
  const double quad = e.dot(gram(setup.kernel, xs) * e);
  return std::sqrt(std::max(quad, 0.0)) / n;
}

std::vector<FnSumRow> fn_sum_quantiles(const FnSumSetup& setup, const std::vector<NoiseModel>& noises,
                                       const std::vector<int>& n_list, int trials,
                                       const std::vector<double>& levels, const RunOptions& options) {
  if (trials < 1) throw std::invalid_argument("fn_sum_quantiles: trials must be >= 1");
  const auto m = static_cast<std::size_t>(trials);
  const std::size_t total = noises.size() * n_list.size() * m;
  std::vector<double> norms(total);
  parallel_for(total, options.threads, dispatch_order(total, options.shuffle_seed), [&](std::size_t idx) {
    const std::size_t t = idx % m;
    const std::size_t j = (idx / m) % n_list.size();
    const std::size_t k = idx / (m * n_list.size());
    norms[idx] = fn_sum_trial(setup, noises[k], n_list[j], t);
  });

  std::vector<FnSumRow> rows;
  for (std::size_t block = 0; block < noises.size() * n_list.size(); ++block) {
    std::vector<double> sorted(norms.begin() + static_cast<std::ptrdiff_t>(block * m),
                               norms.begin() + static_cast<std::ptrdiff_t>((block + 1) * m));
    std::sort(sorted.begin(), sorted.end());
    for (double level : levels)
      rows.push_back({noises[block / n_list.size()].label(), n_list[block % n_list.size()], level,
                      sorted_quantile(sorted, level)});
  }
  return rows;
}

double schedule_alpha(const ScheduleSpec& schedule, double n, double delta, double kappa) {
  switch (schedule.kind) {
    case ScheduleKind::alpha1:
      return theory::schedule_alpha1(n, delta, schedule.nu, schedule.fn);
    case ScheduleKind::alpha2:
      return theory::schedule_alpha2(n, delta, schedule.nu, schedule.q, kappa).value;
    case ScheduleKind::capacity:
      return theory::schedule_alpha_capacity(n, delta, schedule.nu, schedule.p, schedule.fn.c1);
    case ScheduleKind::fixed:
      return schedule.fixed_alpha;
  }
  throw std::logic_error("unknown schedule kind");
}

double least_squares_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("least_squares_slope: need >= 2 points");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

RateSweepResult rate_sweep(const ExperimentConfig& config, const ScheduleSpec& schedule,
                           const std::vector<int>& n_list, double delta, const RunOptions& options) {
  if (n_list.size() < 3) throw std::invalid_argument("rate_sweep: need at least three sample sizes");
  if (!std::is_sorted(n_list.begin(), n_list.end()) ||
      std::adjacent_find(n_list.begin(), n_list.end()) != n_list.end())
    throw std::invalid_argument("rate_sweep: sample sizes must be strictly ascending");
  if (config.noise_models.empty()) throw std::invalid_argument("rate_sweep: config has no noise model");

  const NoiseModel& noise = config.noise_models.front();
  const auto trials = static_cast<std::size_t>(config.trials);
  RateSweepResult result;
  std::vector<double> log_n;
  std::vector<double> log_risk;
  for (int n : n_list) {
    ExperimentConfig at_n = config;
    at_n.n = n;
    const double alpha = schedule_alpha(schedule, n, delta, config.kernel.kappa());
    std::vector<double> risks(trials);
    parallel_for(trials, options.threads, dispatch_order(trials, options.shuffle_seed), [&](std::size_t t) {
      risks[t] = run_trial_at(at_n, noise, alpha, static_cast<std::uint64_t>(n), t);
    });
    const auto failed = static_cast<std::size_t>(std::count_if(risks.begin(), risks.end(), [](double r) {
      return std::isnan(r);
    }));
    const double median = median_of(risks);
    result.rows.push_back({n, alpha, median, failed});
    log_n.push_back(std::log(static_cast<double>(n)));
    log_risk.push_back(std::log(median));
  }
  result.slope = least_squares_slope(log_n, log_risk);
  return result;
}

}  // namespace krrlab
