#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "krrlab/kernel.hpp"
#include "krrlab/noise.hpp"
#include "krrlab/risk.hpp"
#include "krrlab/theory.hpp"

namespace krrlab {

struct RiskMethodConfig {
  RiskMethod kind = RiskMethod::monte_carlo;
  int m = 100000;
};

struct ExperimentConfig {
  KernelSpec kernel = KernelSpec::rbf(1.0);
  MarginalSpec marginal;
  FunctionExpansion f_star;
  std::vector<NoiseModel> noise_models;
  int n = 20;
  std::vector<double> alphas;
  int trials = 10000;
  std::vector<double> levels;
  RiskMethodConfig risk_method;
  std::uint64_t master_seed = 0;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Role of a random stream inside one trial.
enum class StreamRole : std::uint64_t { covariate = 1, noise = 2, risk_mc = 3 };

/// Key of the stream for (seed, noise label, slot, trial, role). `slot` is the
/// alpha index for experiments and the sample size for sum simulations.
std::uint64_t stream_key(std::uint64_t master_seed, std::string_view noise_label, std::uint64_t slot,
                         std::uint64_t trial_index, StreamRole role);

/// Draws n samples, fits ridge regression at `alpha`, returns the excess risk
/// by the configured method. NaN marks a solver failure.
double run_trial_at(const ExperimentConfig& config, const NoiseModel& noise, double alpha, std::uint64_t slot,
                    std::uint64_t trial_index);

/// run_trial_at with alpha = config.alphas[alpha_index] and slot = alpha_index.
double run_trial(const ExperimentConfig& config, const NoiseModel& noise, std::size_t alpha_index,
                 std::uint64_t trial_index);

struct QuantileRow {
  std::string noise;
  double alpha = 0.0;
  double level = 0.0;
  double quantile = 0.0;
};
using QuantileTable = std::vector<QuantileRow>;

struct RawRiskRow {
  std::string noise;
  double alpha = 0.0;
  std::uint64_t trial = 0;
  double risk = 0.0;
};
using RawRiskLog = std::vector<RawRiskRow>;

struct FailureCount {
  std::string noise;
  double alpha = 0.0;
  std::size_t failed = 0;
};

struct ExperimentResult {
  QuantileTable quantiles;
  RawRiskLog raw;
  std::vector<FailureCount> failures;
  std::size_t total_failures = 0;
};

struct RunOptions {
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
  /// When set, trials are dispatched in a pseudo-random order derived from this seed.
  std::optional<std::uint64_t> shuffle_seed;
};

/// Runs config.trials trials per (noise, alpha) and tabulates empirical
/// quantiles at config.levels. Output depends only on the config.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// Quantile rows computed from a raw log; NaN risks are skipped.
QuantileTable quantiles_from_raw(const RawRiskLog& raw, const std::vector<double>& levels);

/// Calls body(i) for i in [0, count) on `threads` workers in the order given by
/// `order` (identity when empty). Rethrows the first exception after joining.
void parallel_for(std::size_t count, unsigned threads, const std::vector<std::size_t>& order,
                  const std::function<void(std::size_t)>& body);

/// Inputs shared by noise-sum simulations.
struct FnSumSetup {
  KernelSpec kernel = KernelSpec::rbf(1.0);
  MarginalSpec marginal;
  std::uint64_t master_seed = 0;
};

/// RKHS norm of (1/n) sum_i k(X_i, .) e_i, i.e. sqrt(e^T K e) / n.
double fn_sum_trial(const FnSumSetup& setup, const NoiseModel& noise, int n, std::uint64_t trial_index);

struct FnSumRow {
  std::string noise;
  int n = 0;
  double level = 0.0;
  double quantile = 0.0;
};

/// Empirical quantiles of fn_sum_trial over `trials` draws for every (noise, n).
std::vector<FnSumRow> fn_sum_quantiles(const FnSumSetup& setup, const std::vector<NoiseModel>& noises,
                                       const std::vector<int>& n_list, int trials,
                                       const std::vector<double>& levels, const RunOptions& options = {});

enum class ScheduleKind { alpha1, alpha2, capacity, fixed };

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::alpha1;
  double nu = 0.5;
  theory::FnConstants fn;
  int q = 3;
  double p = 0.5;
  /// Used only by ScheduleKind::fixed.
  double fixed_alpha = 1.0;
};

double schedule_alpha(const ScheduleSpec& schedule, double n, double delta, double kappa);

struct RateRow {
  int n = 0;
  double alpha_used = 0.0;
  double median_risk = 0.0;
  std::size_t failures = 0;
};

struct RateSweepResult {
  std::vector<RateRow> rows;
  /// Least-squares slope of log(median_risk) against log(n).
  double slope = 0.0;
};

/// For each n, sets alpha from the schedule and records the median risk over
/// config.trials trials with the first noise model of the config.
RateSweepResult rate_sweep(const ExperimentConfig& config, const ScheduleSpec& schedule,
                           const std::vector<int>& n_list, double delta, const RunOptions& options = {});

/// Ordinary least-squares slope of ys against xs.
double least_squares_slope(std::span<const double> xs, std::span<const double> ys);

}  // namespace krrlab
