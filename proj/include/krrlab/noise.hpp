#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "krrlab/rng.hpp"

namespace krrlab {

struct GaussianNoise {
  double variance;
};

struct StudentTNoise {
  double dof;
};

/// Pareto(shape, scale) shifted by its mean shape * scale / (shape - 1).
struct ParetoCenteredNoise {
  double shape;
  double scale;
};

/// Centered additive noise law with moment metadata.
class NoiseModel {
 public:
  using Kind = std::variant<GaussianNoise, StudentTNoise, ParetoCenteredNoise>;

  static NoiseModel gaussian(double variance);
  static NoiseModel student_t(double dof);
  static NoiseModel pareto_centered(double shape, double scale);

  [[nodiscard]] const Kind& kind() const noexcept { return kind_; }

  /// Short identifier used in CSV output, e.g. "student_t_df3".
  [[nodiscard]] const std::string& label() const noexcept { return label_; }
  NoiseModel& with_label(std::string label);

 private:
  explicit NoiseModel(Kind kind);

  Kind kind_;
  std::string label_;
};

/// Moment metadata for the MOM-style assumption E|e|^q <= Q.
struct NoiseMoments {
  double sigma2;
  /// Largest integer order with a finite absolute moment; empty means unbounded.
  std::optional<int> q_max;
  /// E|e|^q for integer 1 <= q <= q_max; throws std::domain_error past q_max.
  std::function<double(int)> q_bound;
};

/// Throws std::domain_error("infinite variance") when the law has no finite second moment.
NoiseMoments moments(const NoiseModel& model);

/// Draws from a noise model. Student-t uses a normal substream and a
/// chi-square substream, both derived from the sampler key.
class NoiseSampler {
 public:
  NoiseSampler(NoiseModel model, std::uint64_t key);

  double operator()();

  [[nodiscard]] const NoiseModel& model() const noexcept { return model_; }

 private:
  NoiseModel model_;
  CounterRng primary_;
  CounterRng secondary_;
};

double sample(NoiseSampler& sampler);

}  // namespace krrlab
