#pragma once

#include <span>

#include "krrlab/kernel.hpp"
#include "krrlab/rng.hpp"

namespace krrlab {

enum class RiskMethod { closed_form, monte_carlo };

/// L2(pi) distance ||f_hat - f_star|| (the norm, not its square).
struct RiskEstimate {
  double value = 0.0;
  RiskMethod method = RiskMethod::closed_form;
  double std_error = 0.0;
};

/// Concatenates f_hat with the negated coefficients of f_star.
FunctionExpansion difference(const FunctionExpansion& f_hat, const FunctionExpansion& f_star);

/// Exact L2(pi) norm of the difference via the closed-form inner products.
RiskEstimate excess_risk_closed(const KernelSpec& spec, const MarginalSpec& marginal,
                                const FunctionExpansion& f_hat, const FunctionExpansion& f_star);

/// Monte-Carlo estimate from m draws of the marginal; std_error is the
/// delta-method standard error of the square root.
RiskEstimate excess_risk_mc(const KernelSpec& spec, const MarginalSpec& marginal,
                            const FunctionExpansion& f_hat, const FunctionExpansion& f_star, int m,
                            CounterRng& rng);

/// 1-based index of the empirical quantile: the smallest k in [1, count] with
/// k / count >= level, where the ratio is evaluated in double precision.
std::size_t quantile_rank(std::size_t count, double level);

/// inf{t : F_M(t) >= level} for the empirical CDF F_M of values.
double empirical_quantile(std::span<const double> values, double level);

/// Same as empirical_quantile, for input that is already sorted ascending.
double sorted_quantile(std::span<const double> sorted, double level);

}  // namespace krrlab
