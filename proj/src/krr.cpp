#include "krrlab/krr.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace krrlab {

EigenSpectrum::EigenSpectrum(Vector<double> values) : values_(std::move(values)) {
  std::sort(values_.begin(), values_.end(), std::greater<>());
  if (values_.size() == 0) return;
  const double tol = 1e-10 * std::max(values_(0), 0.0);
  for (double& v : values_) {
    if (v >= 0.0) continue;
    if (v < -tol) throw std::invalid_argument("eigen spectrum: negative eigenvalue beyond tolerance");
    v = 0.0;
  }
}

EigenSpectrum empirical_spectrum(const KernelSpec& spec, const Vector<double>& xs) {
  const Matrix<double> k = gram(spec, xs) / static_cast<double>(xs.size());
  return EigenSpectrum(sym_eig(k).values);
}

Dataset::Dataset(Vector<double> x, Vector<double> y) : xs(std::move(x)), ys(std::move(y)) {
  if (xs.size() == 0) throw std::invalid_argument("dataset: need at least one sample");
  if (xs.size() != ys.size()) throw std::invalid_argument("dataset: xs and ys differ in length");
  if (!xs.allFinite() || !ys.allFinite()) throw std::invalid_argument("dataset: non-finite value");
}

KrrModel fit(const KernelSpec& spec, const Dataset& data, double alpha, const JitterPolicy& policy) {
  if (!(alpha > 0.0)) throw std::invalid_argument("fit: alpha must be positive");
  const auto n = static_cast<double>(data.size());
  Matrix<double> system = gram(spec, data.xs);
  system.diagonal().array() += n * alpha;
  Vector<double> coeffs = psd_solve(system, data.ys, policy);
  return KrrModel{spec, alpha, FunctionExpansion(data.xs, std::move(coeffs))};
}

double predict(const KrrModel& model, double x) { return eval_expansion(model.expansion, model.spec, x); }

FunctionExpansion population_solution_approx(const KernelSpec& spec, const MarginalSpec& marginal,
                                             const FunctionExpansion& f_star, double alpha, int m,
                                             CounterRng& rng) {
  if (m < 1) throw std::invalid_argument("population_solution_approx: m must be >= 1");
  Vector<double> xs(m);
  for (int j = 0; j < m; ++j) xs(j) = marginal.sample(rng);
  Vector<double> ys = eval_expansion(f_star, spec, xs);
  return fit(spec, Dataset(std::move(xs), std::move(ys)), alpha).expansion;
}

}  // namespace krrlab
