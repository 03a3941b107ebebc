#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "krrlab/config.hpp"
#include "krrlab/harness.hpp"

using namespace krrlab;

namespace {

FunctionExpansion reference_target() {
  Vector<double> centers(5), coeffs(5);
  centers << -4, -2, 0, 3, 7;
  coeffs << 2, -1, -3, 1, 2;
  return FunctionExpansion(centers, coeffs);
}

constexpr double kTargetNorm = 2.4599016806325105;

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.f_star = reference_target();
  c.noise_models = {NoiseModel::gaussian(3.0), NoiseModel::student_t(3.0)};
  c.n = 20;
  c.alphas = {1e-3, 1e-1};
  c.trials = 40;
  c.levels = default_levels();
  c.risk_method.kind = RiskMethod::closed_form;
  c.master_seed = 11;
  return c;
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same_results(const ExperimentResult& a, const ExperimentResult& b) {
  if (a.quantiles.size() != b.quantiles.size() || a.raw.size() != b.raw.size()) return false;
  for (std::size_t i = 0; i < a.quantiles.size(); ++i) {
    const auto& x = a.quantiles[i];
    const auto& y = b.quantiles[i];
    if (x.noise != y.noise || x.alpha != y.alpha || x.level != y.level || !same(x.quantile, y.quantile)) return false;
  }
  for (std::size_t i = 0; i < a.raw.size(); ++i) {
    const auto& x = a.raw[i];
    const auto& y = b.raw[i];
    if (x.noise != y.noise || x.alpha != y.alpha || x.trial != y.trial || !same(x.risk, y.risk)) return false;
  }
  return a.total_failures == b.total_failures;
}

}  // namespace

TEST_CASE("run_trial examples") {
  auto c = small_config();
  c.n = 200;
  c.alphas = {1e-4, 1e8};
  const auto quiet = NoiseModel::gaussian(1e-18);
  const double interpolating = run_trial(c, quiet, 0, 0);
  MESSAGE("near-noiseless risk at alpha=1e-4: " << interpolating);
  CHECK(interpolating < kTargetNorm / 10.0);

  const double shrunk = run_trial(c, quiet, 1, 0);
  CHECK(shrunk == doctest::Approx(kTargetNorm).epsilon(0.01));

  CHECK(run_trial(c, c.noise_models[1], 0, 7) == run_trial(c, c.noise_models[1], 0, 7));
  CHECK(run_trial(c, c.noise_models[1], 0, 7) != run_trial(c, c.noise_models[1], 0, 8));
  CHECK(run_trial_at(c, c.noise_models[0], 1e-4, 0, 3) == run_trial(c, c.noise_models[0], 0, 3));
}

TEST_CASE("monte-carlo risk method is deterministic and close to the closed form") {
  auto c = small_config();
  c.risk_method = {RiskMethod::monte_carlo, 20000};
  const double mc = run_trial(c, c.noise_models[0], 1, 2);
  CHECK(mc == run_trial(c, c.noise_models[0], 1, 2));
  c.risk_method.kind = RiskMethod::closed_form;
  CHECK(mc == doctest::Approx(run_trial(c, c.noise_models[0], 1, 2)).epsilon(0.05));
}

TEST_CASE("stream keys separate every coordinate") {
  const auto base = stream_key(1, "g", 2, 3, StreamRole::noise);
  CHECK(base == stream_key(1, "g", 2, 3, StreamRole::noise));
  CHECK(base != stream_key(2, "g", 2, 3, StreamRole::noise));
  CHECK(base != stream_key(1, "h", 2, 3, StreamRole::noise));
  CHECK(base != stream_key(1, "g", 3, 3, StreamRole::noise));
  CHECK(base != stream_key(1, "g", 2, 4, StreamRole::noise));
  CHECK(base != stream_key(1, "g", 2, 3, StreamRole::covariate));
}

TEST_CASE("a single trial fills every level with its risk") {
  auto c = small_config();
  c.trials = 1;
  const auto r = run_experiment(c, {1, std::nullopt});
  REQUIRE(r.raw.size() == 4);
  CHECK(r.quantiles.size() == 4 * c.levels.size());
  for (const auto& row : r.quantiles) {
    const auto it = std::find_if(r.raw.begin(), r.raw.end(),
                                 [&](const RawRiskRow& raw) { return raw.noise == row.noise && raw.alpha == row.alpha; });
    REQUIRE(it != r.raw.end());
    CHECK(row.quantile == it->risk);
  }
}

TEST_CASE("experiment output shape and quantile monotonicity") {
  const auto c = small_config();
  const auto r = run_experiment(c, {1, std::nullopt});
  CHECK(r.raw.size() == 2 * 2 * 40);
  CHECK(r.total_failures == 0);
  for (const auto& noise : c.noise_models) {
    for (double alpha : c.alphas) {
      const auto trials = std::count_if(r.raw.begin(), r.raw.end(), [&](const RawRiskRow& row) {
        return row.noise == noise.label() && row.alpha == alpha;
      });
      CHECK(trials == 40);
      double previous = -1.0;
      for (const auto& row : r.quantiles) {
        if (row.noise != noise.label() || row.alpha != alpha) continue;
        CHECK(row.quantile >= previous);
        previous = row.quantile;
      }
    }
  }
  for (const auto& row : r.raw) CHECK(row.risk >= 0.0);
  const auto recomputed = quantiles_from_raw(r.raw, c.levels);
  REQUIRE(recomputed.size() == r.quantiles.size());
  for (std::size_t i = 0; i < recomputed.size(); ++i) CHECK(recomputed[i].quantile == r.quantiles[i].quantile);
}

TEST_CASE("results do not depend on execution order or thread count") {
  const auto c = small_config();
  const auto reference = run_experiment(c, {1, std::nullopt});
  CHECK(same_results(reference, run_experiment(c, {1, 12345})));
  CHECK(same_results(reference, run_experiment(c, {4, std::nullopt})));
  CHECK(same_results(reference, run_experiment(c, {3, 99})));
  auto other = c;
  other.master_seed = 12;
  CHECK_FALSE(same_results(reference, run_experiment(other, {1, std::nullopt})));
}

TEST_CASE("quantiles_from_raw skips failed trials") {
  const RawRiskLog raw{{"g", 0.1, 0, 1.0}, {"g", 0.1, 1, std::nan("")}, {"g", 0.1, 2, 3.0}, {"g", 0.1, 3, 2.0}};
  const auto q = quantiles_from_raw(raw, {0.5, 1.0});
  REQUIRE(q.size() == 2);
  CHECK(q[0].quantile == 2.0);
  CHECK(q[1].quantile == 3.0);
}

TEST_CASE("parallel_for visits every index once and rethrows") {
  std::vector<std::atomic<int>> hits(500);
  parallel_for(hits.size(), 3, {}, [&](std::size_t i) { hits[i].fetch_add(1); });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_WITH_AS(parallel_for(50, 2, {},
                                    [](std::size_t i) {
                                      if (i == 17) throw std::runtime_error("boom");
                                    }),
                       "boom", std::runtime_error);
}

TEST_CASE("config validation names the field") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  c.alphas = {0.0};
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("alphas"), std::invalid_argument);
  c = small_config();
  c.levels = {0.9, 0.5};
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("levels"), std::invalid_argument);
  c = small_config();
  c.noise_models.clear();
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("noise_models"), std::invalid_argument);
  c = small_config();
  c.trials = 0;
  CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("trials"), std::invalid_argument);
}

TEST_CASE("fn_sum_trial examples") {
  const FnSumSetup setup{KernelSpec::rbf(), MarginalSpec{}, 5};
  CHECK(fn_sum_trial(setup, NoiseModel::gaussian(0.0), 30, 0) == 0.0);

  const auto noise = NoiseModel::student_t(4.0);
  for (std::uint64_t t = 0; t < 20; ++t) {
    NoiseSampler eps(noise, stream_key(setup.master_seed, noise.label(), 1, t, StreamRole::noise));
    CHECK(fn_sum_trial(setup, noise, 1, t) == doctest::Approx(std::abs(sample(eps))).epsilon(1e-15));
  }
  CHECK(fn_sum_trial(setup, noise, 9, 4) == fn_sum_trial(setup, noise, 9, 4));
  CHECK_THROWS_AS(fn_sum_trial(setup, noise, 0, 0), std::invalid_argument);
}

TEST_CASE("fn sum quantiles scale like n^{-1/2} for gaussian noise") {
  const FnSumSetup setup{KernelSpec::rbf(), MarginalSpec{}, 1};
  const std::vector<int> ns{25, 100, 400, 1600};
  const auto rows = fn_sum_quantiles(setup, {NoiseModel::gaussian(3.0)}, ns, 300, {0.9}, {1, std::nullopt});
  REQUIRE(rows.size() == ns.size());
  std::vector<double> log_n, log_q;
  for (const auto& row : rows) {
    log_n.push_back(std::log(row.n));
    log_q.push_back(std::log(row.quantile));
  }
  const double slope = least_squares_slope(log_n, log_q);
  MESSAGE("slope of the 0.9 quantile against n: " << slope);
  CHECK(slope >= -0.65);
  CHECK(slope <= -0.35);
}

TEST_CASE("least squares slope") {
  const std::vector<double> xs{0, 1, 2, 3};
  const std::vector<double> ys{1, 3, 5, 7};
  CHECK(least_squares_slope(xs, ys) == doctest::Approx(2.0));
  const std::vector<double> flat{4, 4, 4, 4};
  CHECK(least_squares_slope(xs, flat) == 0.0);
}

TEST_CASE("rate sweep with a fixed huge alpha is flat") {
  auto c = small_config();
  c.noise_models = {NoiseModel::gaussian(3.0)};
  c.trials = 20;
  ScheduleSpec fixed;
  fixed.kind = ScheduleKind::fixed;
  fixed.fixed_alpha = 1e8;
  const auto r = rate_sweep(c, fixed, {20, 40, 80, 160}, 0.1, {1, std::nullopt});
  REQUIRE(r.rows.size() == 4);
  CHECK(std::abs(r.slope) <= 0.05);
  for (const auto& row : r.rows) {
    CHECK(row.alpha_used == 1e8);
    CHECK(row.median_risk > 0.0);
  }
  CHECK_THROWS_AS(rate_sweep(c, fixed, {20, 40}, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(rate_sweep(c, fixed, {40, 20, 80}, 0.1), std::invalid_argument);
}

TEST_CASE("schedule_alpha dispatches to the theory formulas") {
  ScheduleSpec s;
  s.kind = ScheduleKind::alpha1;
  CHECK(schedule_alpha(s, 100, 0.1, 1.0) == theory::schedule_alpha1(100, 0.1, 0.5, s.fn));
  s.kind = ScheduleKind::alpha2;
  CHECK(schedule_alpha(s, 100, 0.1, 1.0) == theory::schedule_alpha2(100, 0.1, 0.5, 3, 1.0).value);
  s.kind = ScheduleKind::capacity;
  CHECK(schedule_alpha(s, 100, 0.1, 1.0) == theory::schedule_alpha_capacity(100, 0.1, 0.5, 0.5, 1.0));
}
