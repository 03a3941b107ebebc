#include "krrlab/risk.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace krrlab {

FunctionExpansion difference(const FunctionExpansion& f_hat, const FunctionExpansion& f_star) {
  const Eigen::Index n = f_hat.size();
  const Eigen::Index m = f_star.size();
  Vector<double> centers(n + m);
  Vector<double> coeffs(n + m);
  centers << f_hat.centers(), f_star.centers();
  coeffs << f_hat.coefficients(), -f_star.coefficients();
  return FunctionExpansion(std::move(centers), std::move(coeffs));
}

RiskEstimate excess_risk_closed(const KernelSpec& spec, const MarginalSpec& marginal,
                                const FunctionExpansion& f_hat, const FunctionExpansion& f_star) {
  if (spec.family() != KernelFamily::rbf || marginal.law != MarginalLaw::standard_normal)
    throw std::invalid_argument("no closed form for this kernel/marginal pair; use monte_carlo");
  const FunctionExpansion d = difference(f_hat, f_star);
  if (d.empty()) return {0.0, RiskMethod::closed_form, 0.0};
  const Matrix<double> inner = l2_gram(spec, marginal, d.centers());
  double sq = d.coefficients().dot(inner * d.coefficients());
  if (sq < 0.0) {
    if (sq < -1e-12) throw std::runtime_error("excess_risk_closed: negative quadratic form");
    sq = 0.0;
  }
  return {std::sqrt(sq), RiskMethod::closed_form, 0.0};
}

RiskEstimate excess_risk_mc(const KernelSpec& spec, const MarginalSpec& marginal,
                            const FunctionExpansion& f_hat, const FunctionExpansion& f_star, int m,
                            CounterRng& rng) {
  if (m < 2) throw std::invalid_argument("excess_risk_mc: need m >= 2 samples");
  const FunctionExpansion d = difference(f_hat, f_star);
  // Welford accumulation of the squared residual.
  double mean = 0.0;
  double m2 = 0.0;
  for (int j = 0; j < m; ++j) {
    const double x = marginal.sample(rng);
    const double r = eval_expansion(d, spec, x);
    const double sq = r * r;
    const double delta = sq - mean;
    mean += delta / (j + 1);
    m2 += delta * (sq - mean);
  }
  const double value = std::sqrt(mean);
  if (value == 0.0) return {0.0, RiskMethod::monte_carlo, 0.0};
  const double se_mean = std::sqrt(m2 / (m - 1) / m);
  return {value, RiskMethod::monte_carlo, se_mean / (2.0 * value)};
}

std::size_t quantile_rank(std::size_t count, double level) {
  if (count == 0) throw std::invalid_argument("empirical_quantile: empty input");
  if (!(level >= 0.0 && level <= 1.0)) throw std::invalid_argument("empirical_quantile: level outside [0, 1]");
  const auto total = static_cast<double>(count);
  auto k = static_cast<std::size_t>(std::ceil(level * total));
  k = std::clamp<std::size_t>(k, 1, count);
  // ceil(level * count) can be off by one from rounding in the product.
  while (k > 1 && static_cast<double>(k - 1) / total >= level) --k;
  while (k < count && static_cast<double>(k) / total < level) ++k;
  return k;
}

double sorted_quantile(std::span<const double> sorted, double level) {
  return sorted[quantile_rank(sorted.size(), level) - 1];
}

double empirical_quantile(std::span<const double> values, double level) {
  const std::size_t k = quantile_rank(values.size(), level);
  std::vector<double> work(values.begin(), values.end());
  std::nth_element(work.begin(), work.begin() + static_cast<std::ptrdiff_t>(k - 1), work.end());
  return work[k - 1];
}

}  // namespace krrlab
