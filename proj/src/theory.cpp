#include "krrlab/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace krrlab::theory {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(std::string("parameter error: ") + what);
}

void check_delta(double delta) { require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)"); }
void check_n(double n) { require(n >= 1.0 && std::isfinite(n), "n must be >= 1"); }
void check_alpha(double alpha) { require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive"); }
void check_c1(double c1) { require(c1 >= 1.0 && std::isfinite(c1), "c1 must be >= 1"); }

double saturated(double nu) { return std::min(nu, 1.0); }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void SourceCondition::validate() const {
  require(nu >= 0.5 && std::isfinite(nu), "nu must be >= 1/2");
  require(R > 0.0 && std::isfinite(R), "R must be positive");
  require(sup_norm_fstar >= 0.0 && std::isfinite(sup_norm_fstar), "sup norm of f_star must be >= 0");
}

void EigenDecay::validate() const {
  require(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
  require(D > 0.0 && std::isfinite(D), "D must be positive");
  require(D_tilde > 0.0 && std::isfinite(D_tilde), "D_tilde must be positive");
}

void FnConstants::validate() const {
  check_c1(c1);
  require(c2 > 0.0 && std::isfinite(c2), "c2 must be positive");
  require(c2_tilde > 0.0 && std::isfinite(c2_tilde), "c2_tilde must be positive");
}

void MomentParams::validate() const {
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be positive");
  require(Q > 0.0 && std::isfinite(Q), "Q must be positive");
  require(q >= 3, "q must be an integer >= 3");
}

double eta_capacity_free(double delta, double n, const MomentParams& noise, double c1) {
  check_delta(delta);
  check_n(n);
  noise.validate();
  check_c1(c1);
  const double q = noise.q;
  const double polynomial = std::pow(noise.Q / (delta * std::pow(n, q - 1.0)), 1.0 / q);
  const double subgaussian = noise.sigma * std::sqrt(std::log(6.0 * c1 / delta) / n);
  return std::max(polynomial, subgaussian);
}

double C_kappa(double kappa) { return 2.0 * (1.0 + std::sqrt(kappa)) * std::max(1.0, kappa * kappa); }

double C_diamond_tilde(double kappa, const SourceCondition& src) {
  return 2.0 * kappa * std::max(src.sup_norm_fstar + src.R * std::pow(kappa, 2.0 * src.nu), src.R);
}

double C_diamond(double kappa, const SourceCondition& src, int q, const FnConstants& fn) {
  const double noise_part = kappa * std::max(std::pow(6.0 * fn.c1, 1.0 / q), 1.0 / std::sqrt(fn.c2));
  return 2.0 * std::sqrt(2.0) * std::max(C_diamond_tilde(kappa, src), noise_part);
}

BoundReport capacity_free_bound(double alpha, double delta, double n, const KernelSpec& kernel,
                                const SourceCondition& src, const MomentParams& noise, const FnConstants& fn) {
  check_alpha(alpha);
  check_delta(delta);
  check_n(n);
  src.validate();
  noise.validate();
  fn.validate();

  const double kappa = kernel.kappa();
  const double s = saturated(src.nu);
  const double log6 = std::log(6.0 / delta);

  BoundReport r;
  r.C_kappa = C_kappa(kappa);
  r.C_diamond_tilde = C_diamond_tilde(kappa, src);
  r.C_diamond = C_diamond(kappa, src, noise.q, fn);
  r.eta = eta_capacity_free(delta, n, noise, fn.c1);
  r.effective_dimension = kNaN;

  const double prefactor = r.C_diamond / std::sqrt(alpha);
  r.bias_term = src.R * std::pow(alpha, s);
  r.log_term = prefactor * log6 / n;
  r.mixed_term = prefactor * std::sqrt(std::pow(alpha, 2.0 * s) * log6 / n);
  r.eta_term = prefactor * r.eta;
  r.total = r.bias_term + r.log_term + r.mixed_term + r.eta_term;
  r.precondition_ok = r.C_kappa * log6 <= alpha * std::sqrt(n);
  return r;
}

double n0(double delta, const MomentParams& noise, double c1) {
  check_delta(delta);
  check_c1(c1);
  require(noise.q != 2, "q = 2 makes the n0 exponent singular");
  noise.validate();
  const double q = noise.q;
  const double e = 1.0 / (q - 2.0);
  const double moment_ratio = noise.Q * noise.Q / std::pow(noise.sigma, 2.0 * q);
  return std::pow(moment_ratio, e) * std::pow(delta, -2.0 * e) * std::pow(std::log(6.0 * c1 / delta), -q * e);
}

bool in_D1(double n, double delta, const MomentParams& noise, double c1) {
  check_n(n);
  return n >= n0(delta, noise, c1);
}

bool in_D2(double n, double delta, const MomentParams& noise, double c1) { return !in_D1(n, delta, noise, c1); }

double schedule_alpha1(double n, double delta, double nu, const FnConstants& fn) {
  check_n(n);
  check_delta(delta);
  require(nu >= 0.5, "nu must be >= 1/2");
  fn.validate();
  return fn.c2_tilde * std::pow(std::log(6.0 * fn.c1 / delta) / n, 1.0 / (2.0 * saturated(nu) + 1.0));
}

ClampedSchedule schedule_alpha2(double n, double delta, double nu, int q, double kappa) {
  check_n(n);
  check_delta(delta);
  require(nu >= 0.5, "nu must be >= 1/2");
  require(q >= 3, "q must be an integer >= 3");
  require(kappa > 0.0, "kappa must be positive");
  const double qd = q;
  const double polynomial =
      std::pow(1.0 / (delta * std::pow(n, qd - 1.0)), 2.0 / (qd * (2.0 * saturated(nu) + 1.0)));
  const double logarithmic = std::log(6.0 / delta) / std::sqrt(n);
  ClampedSchedule out;
  out.pre_clamp = std::max(polynomial, logarithmic);
  const double ceiling = kappa * kappa;
  out.clamped = out.pre_clamp > ceiling;
  out.value = out.clamped ? ceiling : out.pre_clamp;
  return out;
}

double schedule_alpha_capacity(double n, double delta, double nu, double p, double c1) {
  check_n(n);
  check_delta(delta);
  require(nu >= 0.5, "nu must be >= 1/2");
  require(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
  check_c1(c1);
  return std::pow(std::log(8.0 * c1 / delta) / n, 1.0 / (2.0 * saturated(nu) + p));
}

double effective_dimension(const EigenSpectrum& spectrum, double alpha) {
  check_alpha(alpha);
  const auto& l = spectrum.values().array();
  return (l / (l + alpha)).sum();
}

double effective_dimension_bound(const EigenDecay& decay, double alpha) {
  check_alpha(alpha);
  decay.validate();
  return decay.D_tilde * std::pow(alpha, -decay.p);
}

double calibrate_D_tilde(const EigenSpectrum& spectrum, double p, std::span<const double> alpha_grid) {
  require(p > 0.0 && p < 1.0, "p must lie in (0, 1)");
  require(!alpha_grid.empty(), "alpha grid must be nonempty");
  double d = 0.0;
  for (double a : alpha_grid) d = std::max(d, effective_dimension(spectrum, a) * std::pow(a, p));
  return d;
}

double eta_capacity(double delta, double n, double alpha, double effective_dim, int q, double c1) {
  check_delta(delta);
  check_n(n);
  check_alpha(alpha);
  require(effective_dim > 0.0, "effective dimension must be positive");
  require(q >= 3, "q must be an integer >= 3");
  check_c1(c1);
  const double qd = q;
  const double polynomial = std::pow(1.0 / (delta * std::pow(n, qd - 1.0)), 1.0 / qd) *
                            std::pow(1.0 / (alpha * effective_dim), (qd - 2.0) / (2.0 * qd));
  const double subgaussian = std::sqrt(std::log(8.0 * c1 / delta) / n);
  return std::max(polynomial, subgaussian);
}

BoundReport capacity_bound(double alpha, double delta, double n, const KernelSpec& kernel,
                           const SourceCondition& src, const EigenDecay& decay, const MomentParams& noise,
                           const FnConstants& fn, double effective_dim, double multiplier) {
  check_alpha(alpha);
  check_delta(delta);
  check_n(n);
  src.validate();
  decay.validate();
  noise.validate();
  fn.validate();
  require(multiplier > 0.0, "multiplier must be positive");

  const double kappa = kernel.kappa();
  const double log8 = std::log(8.0 / delta);

  BoundReport r;
  r.C_kappa = kNaN;
  r.C_diamond_tilde = kNaN;
  r.C_diamond = kNaN;
  r.effective_dimension = effective_dim;
  r.eta = eta_capacity(delta, n, alpha, effective_dim, noise.q, fn.c1);
  r.bias_term = multiplier * std::pow(alpha, saturated(src.nu));
  r.log_term = multiplier * log8 / (std::sqrt(alpha) * n);
  r.mixed_term = multiplier * std::sqrt(effective_dim * log8 / n);
  r.eta_term = multiplier * std::sqrt(effective_dim) * r.eta;
  r.total = r.bias_term + r.log_term + r.mixed_term + r.eta_term;

  const double lhs = std::log(2.0 / delta) * (2.0 * kappa * kappa / (n * alpha) +
                                              2.0 * std::sqrt(decay.D_tilde) * kappa /
                                                  (std::sqrt(n) * std::pow(alpha, (1.0 + decay.p) / 2.0)));
  r.precondition_ok = lhs <= 1.0;
  return r;
}

BoundReport capacity_bound(double alpha, double delta, double n, const KernelSpec& kernel,
                           const SourceCondition& src, const EigenDecay& decay, const MomentParams& noise,
                           const FnConstants& fn, const EigenSpectrum& spectrum, double multiplier) {
  return capacity_bound(alpha, delta, n, kernel, src, decay, noise, fn, effective_dimension(spectrum, alpha),
                        multiplier);
}

namespace {

struct FnBranches {
  double polynomial;
  double subgaussian;
};

FnBranches fn_branches(double delta, double n, const MomentParams& noise, const FnConstants& fn) {
  const double q = noise.q;
  return {std::pow(2.0 * fn.c1 * noise.Q / (delta * std::pow(n, q - 1.0)), 1.0 / q),
          noise.sigma * std::sqrt(std::log(2.0 * fn.c1 / delta) / (fn.c2 * n))};
}

}  // namespace

double fn_confidence_bound(double delta, double n, const MomentParams& noise, const FnConstants& fn) {
  check_delta(delta);
  check_n(n);
  noise.validate();
  fn.validate();
  const auto b = fn_branches(delta, n, noise, fn);
  return std::max(b.polynomial, b.subgaussian);
}

RegimeChange regime_change_delta(double n, const MomentParams& noise, const FnConstants& fn, double tol) {
  check_n(n);
  noise.validate();
  fn.validate();
  require(tol > 0.0, "tol must be positive");

  // g > 0 where the polynomial branch dominates (small delta).
  const auto g = [&](double log_delta) {
    const auto b = fn_branches(std::exp(log_delta), n, noise, fn);
    return std::log(b.polynomial) - std::log(b.subgaussian);
  };
  const auto result_at = [&](double log_delta, bool found) {
    const double d = std::exp(log_delta);
    const auto b = fn_branches(d, n, noise, fn);
    return RegimeChange{d, std::abs(b.polynomial - b.subgaussian) / b.subgaussian, found};
  };

  double lo = std::log(1e-30);
  double hi = std::log1p(-1e-12);
  const double g_lo = g(lo);
  const double g_hi = g(hi);
  if (g_lo <= 0.0) return result_at(lo, g_lo == 0.0);
  if (g_hi >= 0.0) return result_at(hi, g_hi == 0.0);

  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    const RegimeChange at = result_at(mid, true);
    if (at.residual <= tol || mid == lo || mid == hi) return at;
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return result_at(0.5 * (lo + hi), true);
}

}  // namespace krrlab::theory
