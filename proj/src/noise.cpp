#include "krrlab/noise.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "krrlab/format.hpp"

namespace krrlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Largest integer strictly below x.
int largest_integer_below(double x) {
  const double f = std::floor(x);
  return static_cast<int>(f == x ? f - 1.0 : f);
}

void check_order(int q, const std::optional<int>& q_max) {
  if (q < 1) throw std::domain_error("q_bound: order must be >= 1");
  if (q_max && q > *q_max)
    throw std::domain_error("q_bound: absolute moment of order " + std::to_string(q) + " is infinite");
}

// E|sigma Z|^q = sigma^q 2^{q/2} Gamma((q+1)/2) / sqrt(pi).
double gaussian_abs_moment(double variance, int q) {
  const double qd = q;
  return std::exp(0.5 * qd * std::log(variance) + 0.5 * qd * std::numbers::ln2 +
                  std::lgamma(0.5 * (qd + 1.0))) /
         std::sqrt(std::numbers::pi);
}

// E|T|^q = dof^{q/2} Gamma((q+1)/2) Gamma((dof-q)/2) / (sqrt(pi) Gamma(dof/2)).
double student_t_abs_moment(double dof, int q) {
  const double qd = q;
  return std::exp(0.5 * qd * std::log(dof) + std::lgamma(0.5 * (qd + 1.0)) +
                  std::lgamma(0.5 * (dof - qd)) - std::lgamma(0.5 * dof)) /
         std::sqrt(std::numbers::pi);
}

// E|X - mean|^q with X = scale * U^{-1/shape}, integrated over U in (0, 1) and
// split at the point where X crosses its mean.
double pareto_centered_abs_moment(double shape, double scale, int q) {
  const double mean = shape * scale / (shape - 1.0);
  const double kink = std::pow(scale / mean, shape);
  const auto integrand = [=](double u) {
    return std::pow(std::abs(scale * std::pow(u, -1.0 / shape) - mean), static_cast<double>(q));
  };
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(integrand, 0.0, kink) + integrator.integrate(integrand, kink, 1.0);
}

}  // namespace

NoiseModel::NoiseModel(Kind kind) : kind_(std::move(kind)) {}

NoiseModel NoiseModel::gaussian(double variance) {
  if (!(variance >= 0.0) || !std::isfinite(variance))
    throw std::invalid_argument("gaussian noise: variance must be finite and >= 0");
  NoiseModel m(GaussianNoise{variance});
  m.label_ = "gaussian_var" + to_shortest(variance);
  return m;
}

NoiseModel NoiseModel::student_t(double dof) {
  if (!(dof > 0.0) || !std::isfinite(dof))
    throw std::invalid_argument("student_t noise: degrees of freedom must be positive");
  NoiseModel m(StudentTNoise{dof});
  m.label_ = "student_t_df" + to_shortest(dof);
  return m;
}

NoiseModel NoiseModel::pareto_centered(double shape, double scale) {
  if (!(shape > 1.0) || !std::isfinite(shape))
    throw std::invalid_argument("pareto noise: shape must exceed 1 for a finite mean");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw std::invalid_argument("pareto noise: scale must be positive");
  NoiseModel m(ParetoCenteredNoise{shape, scale});
  m.label_ = "pareto_a" + to_shortest(shape) + "_s" + to_shortest(scale);
  return m;
}

NoiseModel& NoiseModel::with_label(std::string label) {
  if (label.empty() || label.find_first_of(",\n\r\"") != std::string::npos)
    throw std::invalid_argument("noise label must be nonempty and free of commas, quotes and newlines");
  label_ = std::move(label);
  return *this;
}

NoiseMoments moments(const NoiseModel& model) {
  return std::visit(
      overloaded{
          [](const GaussianNoise& g) {
            const double var = g.variance;
            return NoiseMoments{var, std::nullopt, [var](int q) {
                                  check_order(q, std::nullopt);
                                  return gaussian_abs_moment(var, q);
                                }};
          },
          [](const StudentTNoise& t) {
            if (t.dof <= 2.0) throw std::domain_error("infinite variance");
            const double dof = t.dof;
            const int q_max = largest_integer_below(dof);
            return NoiseMoments{dof / (dof - 2.0), q_max, [dof, q_max](int q) {
                                  check_order(q, q_max);
                                  return student_t_abs_moment(dof, q);
                                }};
          },
          [](const ParetoCenteredNoise& p) {
            if (p.shape <= 2.0) throw std::domain_error("infinite variance");
            const double a = p.shape;
            const double s = p.scale;
            const int q_max = largest_integer_below(a);
            const double var = s * s * a / ((a - 1.0) * (a - 1.0) * (a - 2.0));
            return NoiseMoments{var, q_max, [a, s, q_max](int q) {
                                  check_order(q, q_max);
                                  return pareto_centered_abs_moment(a, s, q);
                                }};
          },
      },
      model.kind());
}

NoiseSampler::NoiseSampler(NoiseModel model, std::uint64_t key)
    : model_(std::move(model)), primary_(derive_key(key, {1})), secondary_(derive_key(key, {2})) {}

double NoiseSampler::operator()() {
  return std::visit(overloaded{
                        [this](const GaussianNoise& g) { return std::sqrt(g.variance) * primary_.normal(); },
                        [this](const StudentTNoise& t) {
                          const double z = primary_.normal();
                          const double v = secondary_.chi_squared(t.dof);
                          return z / std::sqrt(v / t.dof);
                        },
                        [this](const ParetoCenteredNoise& p) {
                          const double x = p.scale * std::pow(primary_.uniform(), -1.0 / p.shape);
                          return x - p.shape * p.scale / (p.shape - 1.0);
                        },
                    },
                    model_.kind());
}

double sample(NoiseSampler& sampler) { return sampler(); }

}  // namespace krrlab
