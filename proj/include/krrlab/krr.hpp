#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "krrlab/kernel.hpp"
#include "krrlab/rng.hpp"

namespace krrlab {

/// Diagonal jitter schedule for Cholesky retries: the first shift is
/// initial_scale * trace(A) / n, then it grows by `growth` per retry.
struct JitterPolicy {
  double initial_scale = 1e-12;
  double growth = 10.0;
  int max_retries = 6;
};

/// Solves A x = b for symmetric positive (semi)definite A by Cholesky.
template <typename DerivedA, typename DerivedB>
Vector<typename DerivedA::Scalar> psd_solve(const Eigen::MatrixBase<DerivedA>& a,
                                            const Eigen::MatrixBase<DerivedB>& b,
                                            const JitterPolicy& policy = {}) {
  using Scalar = typename DerivedA::Scalar;
  using std::abs;
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("psd_solve: dimension mismatch");
  const Scalar scale = a.cwiseAbs().maxCoeff();
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-12) * scale)
    throw std::invalid_argument("psd_solve: matrix is not symmetric");

  Matrix<Scalar> work = a;
  Eigen::LLT<Matrix<Scalar>> llt(work);
  if (llt.info() == Eigen::Success) return llt.solve(b);

  Scalar jitter = Scalar(policy.initial_scale) * a.trace() / Scalar(n);
  for (int attempt = 0; attempt < policy.max_retries; ++attempt) {
    work = a;
    work.diagonal().array() += jitter;
    llt.compute(work);
    if (llt.info() == Eigen::Success) return llt.solve(b);
    jitter *= Scalar(policy.growth);
  }
  throw std::runtime_error("not positive definite");
}

/// Eigenvalues of a symmetric matrix, nonincreasing, with an optional
/// orthonormal basis whose columns follow the same order.
template <typename Scalar>
struct SymmetricEigen {
  Vector<Scalar> values;
  std::optional<Matrix<Scalar>> vectors;
};

template <typename Derived>
SymmetricEigen<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& a, bool with_basis = false) {
  using Scalar = typename Derived::Scalar;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(
      a, with_basis ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("sym_eig: eigensolver did not converge");
  SymmetricEigen<Scalar> out;
  out.values = solver.eigenvalues().reverse();
  if (with_basis) out.vectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

/// Nonincreasing, nonnegative eigenvalue sequence.
class EigenSpectrum {
 public:
  EigenSpectrum() = default;

  /// Sorts, then clamps entries in [-1e-10 * max, 0) to zero. More negative
  /// entries mean the source matrix was not PSD and are rejected.
  explicit EigenSpectrum(Vector<double> values);

  [[nodiscard]] const Vector<double>& values() const noexcept { return values_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return values_.size(); }

 private:
  Vector<double> values_;
};

/// Spectrum of the empirical covariance K / n for the kernel Gram matrix on xs.
EigenSpectrum empirical_spectrum(const KernelSpec& spec, const Vector<double>& xs);

struct Dataset {
  Vector<double> xs;
  Vector<double> ys;

  Dataset(Vector<double> xs, Vector<double> ys);
  [[nodiscard]] Eigen::Index size() const noexcept { return xs.size(); }
};

/// Ridge estimator in representer form; the expansion centers are the training inputs.
struct KrrModel {
  KernelSpec spec;
  double alpha;
  FunctionExpansion expansion;
};

/// Minimizes (1/n) sum (y_i - f(x_i))^2 + alpha ||f||^2, i.e. solves (K + n alpha I) c = y.
KrrModel fit(const KernelSpec& spec, const Dataset& data, double alpha, const JitterPolicy& policy = {});

double predict(const KrrModel& model, double x);

/// Approximates the regularized population solution by a ridge fit on m
/// noiseless pairs (X_j, f_star(X_j)), X_j drawn from the marginal.
FunctionExpansion population_solution_approx(const KernelSpec& spec, const MarginalSpec& marginal,
                                             const FunctionExpansion& f_star, double alpha, int m,
                                             CounterRng& rng);

}  // namespace krrlab
