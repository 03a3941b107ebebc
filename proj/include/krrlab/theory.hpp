#pragma once

#include <span>

#include "krrlab/kernel.hpp"
#include "krrlab/krr.hpp"

namespace krrlab::theory {

/// Smoothness of the target: f_star lies in the range of the covariance
/// operator to the power nu, with preimage norm at most R.
struct SourceCondition {
  double nu = 1.0;
  double R = 1.0;
  double sup_norm_fstar = 0.0;

  void validate() const;
};

/// Polynomial eigenvalue decay mu_i <= D i^{-1/p}, and the induced
/// effective-dimension bound N(alpha) <= D_tilde alpha^{-p}.
struct EigenDecay {
  double p = 0.5;
  double D = 1.0;
  double D_tilde = 1.0;

  void validate() const;
};

/// Constants of the Fuk-Nagaev inequality (c1, c2) and the schedule
/// prefactor c2_tilde. None has a usable closed form, so all default to 1.
struct FnConstants {
  double c1 = 1.0;
  double c2 = 1.0;
  double c2_tilde = 1.0;

  void validate() const;
};

/// Noise parameters entering the bounds: standard deviation sigma and the
/// q-th absolute moment bound Q.
struct MomentParams {
  double sigma = 1.0;
  double Q = 1.0;
  int q = 3;

  void validate() const;
};

/// Right-hand side of an excess-risk bound, split into its additive parts.
/// Constants not used by a given bound are NaN.
struct BoundReport {
  double total = 0.0;
  double bias_term = 0.0;
  double log_term = 0.0;
  double mixed_term = 0.0;
  double eta_term = 0.0;
  double eta = 0.0;
  double C_kappa = 0.0;
  double C_diamond_tilde = 0.0;
  double C_diamond = 0.0;
  double effective_dimension = 0.0;
  bool precondition_ok = false;
};

/// max{ (Q / (delta n^{q-1}))^{1/q}, sigma sqrt(log(6 c1 / delta) / n) }.
double eta_capacity_free(double delta, double n, const MomentParams& noise, double c1);

double C_kappa(double kappa);
double C_diamond_tilde(double kappa, const SourceCondition& src);
double C_diamond(double kappa, const SourceCondition& src, int q, const FnConstants& fn);

/// Capacity-free bound on ||f_hat - f_star||_{L2}; precondition is
/// C_kappa log(6/delta) <= alpha sqrt(n), reported rather than enforced.
BoundReport capacity_free_bound(double alpha, double delta, double n, const KernelSpec& kernel,
                                const SourceCondition& src, const MomentParams& noise, const FnConstants& fn);

/// Sample size at which the two branches of eta_capacity_free coincide.
double n0(double delta, const MomentParams& noise, double c1);

/// Subgaussian confidence regime: n >= n0(delta).
bool in_D1(double n, double delta, const MomentParams& noise, double c1);
/// Polynomial confidence regime, the complement of D1 in (0, 1).
bool in_D2(double n, double delta, const MomentParams& noise, double c1);

/// c2_tilde (log(6 c1 / delta) / n)^{1 / (2 min(nu, 1) + 1)}.
double schedule_alpha1(double n, double delta, double nu, const FnConstants& fn);

struct ClampedSchedule {
  double value = 0.0;
  double pre_clamp = 0.0;
  bool clamped = false;
};

/// Polynomial-regime schedule: max of (1 / (delta n^{q-1}))^{2 / (q (2 min(nu,1) + 1))}
/// and log(6/delta)/sqrt(n), clamped from above at kappa^2.
ClampedSchedule schedule_alpha2(double n, double delta, double nu, int q, double kappa);

/// (log(8 c1 / delta) / n)^{1 / (2 min(nu, 1) + p)}.
double schedule_alpha_capacity(double n, double delta, double nu, double p, double c1);

/// N(alpha) = sum_i lambda_i / (lambda_i + alpha).
double effective_dimension(const EigenSpectrum& spectrum, double alpha);

/// D_tilde alpha^{-p}.
double effective_dimension_bound(const EigenDecay& decay, double alpha);

/// Smallest D_tilde with N_hat(alpha) <= D_tilde alpha^{-p} on every grid point.
double calibrate_D_tilde(const EigenSpectrum& spectrum, double p, std::span<const double> alpha_grid);

/// eta(delta, n, alpha) of the capacity-dependent bound, given N(alpha).
double eta_capacity(double delta, double n, double alpha, double effective_dim, int q, double c1);

/// Capacity-dependent bound with an explicit effective dimension. `multiplier`
/// stands in for the unspecified constant c.
BoundReport capacity_bound(double alpha, double delta, double n, const KernelSpec& kernel,
                           const SourceCondition& src, const EigenDecay& decay, const MomentParams& noise,
                           const FnConstants& fn, double effective_dim, double multiplier = 1.0);

/// Same, with N(alpha) evaluated on a spectrum (plug-in estimate when the
/// spectrum comes from K / n).
BoundReport capacity_bound(double alpha, double delta, double n, const KernelSpec& kernel,
                           const SourceCondition& src, const EigenDecay& decay, const MomentParams& noise,
                           const FnConstants& fn, const EigenSpectrum& spectrum, double multiplier = 1.0);

/// max{ (2 c1 Q / (delta n^{q-1}))^{1/q}, sigma sqrt(log(2 c1 / delta) / (c2 n)) }.
double fn_confidence_bound(double delta, double n, const MomentParams& noise, const FnConstants& fn);

struct RegimeChange {
  double delta = 0.0;
  double residual = 0.0;  // |polynomial branch - subgaussian branch| / subgaussian branch
  bool root_found = false;
};

/// Solves (2 c1 Q / (delta n^{q-1}))^{1/q} = sigma sqrt(log(2 c1 / delta) / (c2 n))
/// for delta by bisection in log(delta) on (1e-30, 1 - 1e-12).
RegimeChange regime_change_delta(double n, const MomentParams& noise, const FnConstants& fn, double tol = 1e-10);

}  // namespace krrlab::theory
