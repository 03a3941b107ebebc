#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "krrlab/rng.hpp"

namespace krrlab {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

enum class KernelFamily { rbf };

/// Translation-invariant kernel on the real line.
///
/// For the Gaussian family, k(u, v) = exp(-(u - v)^2 / (2 bandwidth^2)), so
/// k(x, x) = 1 and the sup bound kappa is exactly 1.
template <typename Scalar>
class KernelSpecT {
 public:
  static KernelSpecT rbf(Scalar bandwidth = Scalar(1)) {
    if (!(bandwidth > Scalar(0)) || !std::isfinite(static_cast<double>(bandwidth)))
      throw std::invalid_argument("kernel: bandwidth must be positive and finite");
    return KernelSpecT(KernelFamily::rbf, bandwidth);
  }

  [[nodiscard]] KernelFamily family() const noexcept { return family_; }
  [[nodiscard]] Scalar bandwidth() const noexcept { return bandwidth_; }
  [[nodiscard]] Scalar kappa() const noexcept { return Scalar(1); }

  [[nodiscard]] Scalar operator()(Scalar u, Scalar v) const {
    using std::exp;
    const Scalar d = u - v;
    return exp(-(d * d) / (Scalar(2) * bandwidth_ * bandwidth_));
  }

 private:
  KernelSpecT(KernelFamily family, Scalar bandwidth) : family_(family), bandwidth_(bandwidth) {}

  KernelFamily family_;
  Scalar bandwidth_;
};

using KernelSpec = KernelSpecT<double>;

enum class MarginalLaw { standard_normal };

/// Covariate law on the real line.
struct MarginalSpec {
  MarginalLaw law = MarginalLaw::standard_normal;

  double sample(CounterRng& rng) const { return rng.normal(); }
};

/// Finite kernel expansion x -> sum_i coefficients[i] * k(centers[i], x).
template <typename Scalar>
class FunctionExpansionT {
 public:
  FunctionExpansionT() = default;
  FunctionExpansionT(Vector<Scalar> centers, Vector<Scalar> coefficients)
      : centers_(std::move(centers)), coefficients_(std::move(coefficients)) {
    if (centers_.size() != coefficients_.size())
      throw std::invalid_argument("expansion: centers and coefficients differ in length");
  }

  [[nodiscard]] const Vector<Scalar>& centers() const noexcept { return centers_; }
  [[nodiscard]] const Vector<Scalar>& coefficients() const noexcept { return coefficients_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return centers_.size(); }
  [[nodiscard]] bool empty() const noexcept { return centers_.size() == 0; }

 private:
  Vector<Scalar> centers_;
  Vector<Scalar> coefficients_;
};

using FunctionExpansion = FunctionExpansionT<double>;

template <typename Scalar>
Scalar eval_kernel(const KernelSpecT<Scalar>& spec, Scalar u, Scalar v) {
  return spec(u, v);
}

/// Gram matrix G(i, j) = k(points[i], points[j]).
template <typename Derived>
Matrix<typename Derived::Scalar> gram(const KernelSpecT<typename Derived::Scalar>& spec,
                                      const Eigen::MatrixBase<Derived>& points) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.size();
  if (n == 0) throw std::invalid_argument("empty point set");
  Matrix<Scalar> g(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    g(j, j) = spec(points(j), points(j));
    for (Eigen::Index i = j + 1; i < n; ++i) {
      g(i, j) = spec(points(i), points(j));
      g(j, i) = g(i, j);
    }
  }
  return g;
}

/// Cross kernel matrix C(i, j) = k(rows[i], cols[j]).
template <typename DerivedA, typename DerivedB>
Matrix<typename DerivedA::Scalar> cross_gram(const KernelSpecT<typename DerivedA::Scalar>& spec,
                                             const Eigen::MatrixBase<DerivedA>& rows,
                                             const Eigen::MatrixBase<DerivedB>& cols) {
  Matrix<typename DerivedA::Scalar> c(rows.size(), cols.size());
  for (Eigen::Index j = 0; j < cols.size(); ++j)
    for (Eigen::Index i = 0; i < rows.size(); ++i) c(i, j) = spec(rows(i), cols(j));
  return c;
}

template <typename Scalar>
Scalar eval_expansion(const FunctionExpansionT<Scalar>& f, const KernelSpecT<Scalar>& spec, Scalar x) {
  Scalar acc(0);
  for (Eigen::Index i = 0; i < f.size(); ++i) acc += f.coefficients()(i) * spec(f.centers()(i), x);
  return acc;
}

/// Evaluates an expansion at every entry of xs.
template <typename Scalar, typename Derived>
Vector<Scalar> eval_expansion(const FunctionExpansionT<Scalar>& f, const KernelSpecT<Scalar>& spec,
                              const Eigen::MatrixBase<Derived>& xs) {
  Vector<Scalar> out(xs.size());
  for (Eigen::Index j = 0; j < xs.size(); ++j) out(j) = eval_expansion(f, spec, xs(j));
  return out;
}

/// E[k(a, X) k(b, X)] for X ~ marginal, in closed form.
///
/// With h the bandwidth and m = (a + b) / 2, the product of the two Gaussian
/// bumps is exp(-(a - b)^2 / (4 h^2)) exp(-(x - m)^2 / h^2); integrating the
/// second factor against N(0, 1) gives h / sqrt(h^2 + 2) exp(-m^2 / (h^2 + 2)).
template <typename Scalar>
Scalar l2_inner(const KernelSpecT<Scalar>& spec, const MarginalSpec& marginal, Scalar a, Scalar b) {
  using std::exp;
  using std::sqrt;
  if (spec.family() != KernelFamily::rbf || marginal.law != MarginalLaw::standard_normal)
    throw std::invalid_argument("no closed form for this kernel/marginal pair");
  const Scalar h2 = spec.bandwidth() * spec.bandwidth();
  const Scalar d = a - b;
  const Scalar m = (a + b) / Scalar(2);
  return exp(-(d * d) / (Scalar(4) * h2)) * sqrt(h2 / (h2 + Scalar(2))) * exp(-(m * m) / (h2 + Scalar(2)));
}

/// Matrix of L2(marginal) inner products between kernel sections at the given centers.
template <typename Derived>
Matrix<typename Derived::Scalar> l2_gram(const KernelSpecT<typename Derived::Scalar>& spec,
                                         const MarginalSpec& marginal,
                                         const Eigen::MatrixBase<Derived>& centers) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = centers.size();
  Matrix<Scalar> m(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = j; i < n; ++i) m(j, i) = m(i, j) = l2_inner(spec, marginal, centers(i), centers(j));
  return m;
}

}  // namespace krrlab
