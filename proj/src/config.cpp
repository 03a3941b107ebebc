#include "krrlab/config.hpp"

#include <fstream>
#include <set>

namespace krrlab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw ConfigError("invalid config: " + key + ": " + what);
}

void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) fail(where.empty() ? key : where + "." + key, "unknown key");
  }
}

const json& required(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) fail(path, "missing required key");
  return j.at(key);
}

template <typename T>
T as(const json& j, const std::string& path) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    fail(path, e.what());
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

std::vector<double> as_numbers(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(as_number(v, path));
  return out;
}

int as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return as<int>(j, path);
}

}  // namespace

std::vector<double> default_levels() { return {0.5, 0.75, 0.9, 0.95, 0.99, 0.995, 0.999}; }

NoiseModel noise_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) fail("noise_models", "each entry needs a \"kind\"");
  const auto kind = as<std::string>(j.at("kind"), "noise_models.kind");
  try {
    NoiseModel model = [&] {
      if (kind == "gaussian") {
        reject_unknown(j, "noise_models", {"kind", "variance", "label"});
        return NoiseModel::gaussian(as_number(required(j, "variance", "noise_models.variance"), "noise_models.variance"));
      }
      if (kind == "student_t") {
        reject_unknown(j, "noise_models", {"kind", "df", "label"});
        return NoiseModel::student_t(as_number(required(j, "df", "noise_models.df"), "noise_models.df"));
      }
      if (kind == "pareto_centered") {
        reject_unknown(j, "noise_models", {"kind", "shape", "scale", "label"});
        return NoiseModel::pareto_centered(
            as_number(required(j, "shape", "noise_models.shape"), "noise_models.shape"),
            as_number(required(j, "scale", "noise_models.scale"), "noise_models.scale"));
      }
      fail("noise_models.kind", "unknown noise kind '" + kind + "'");
    }();
    if (j.contains("label")) model.with_label(as<std::string>(j.at("label"), "noise_models.label"));
    return model;
  } catch (const std::invalid_argument& e) {
    fail("noise_models", e.what());
  }
}

json noise_to_json(const NoiseModel& model) {
  json j = std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, GaussianNoise>) return {{"kind", "gaussian"}, {"variance", k.variance}};
        if constexpr (std::is_same_v<K, StudentTNoise>) return {{"kind", "student_t"}, {"df", k.dof}};
        if constexpr (std::is_same_v<K, ParetoCenteredNoise>)
          return {{"kind", "pareto_centered"}, {"shape", k.shape}, {"scale", k.scale}};
      },
      model.kind());
  j["label"] = model.label();
  return j;
}

ExperimentConfig parse_config(const json& j) {
  reject_unknown(j, "", {"kernel", "marginal", "f_star", "noise_models", "n", "alphas", "trials", "levels",
                         "risk_method", "master_seed"});
  ExperimentConfig c;

  if (j.contains("kernel")) {
    const json& k = j.at("kernel");
    reject_unknown(k, "kernel", {"family", "bandwidth"});
    if (k.contains("family") && as<std::string>(k.at("family"), "kernel.family") != "rbf")
      fail("kernel.family", "only \"rbf\" is supported");
    const double bw = k.contains("bandwidth") ? as_number(k.at("bandwidth"), "kernel.bandwidth") : 1.0;
    if (!(bw > 0.0)) fail("kernel.bandwidth", "must be positive");
    c.kernel = KernelSpec::rbf(bw);
  }
  if (j.contains("marginal") && as<std::string>(j.at("marginal"), "marginal") != "standard_normal")
    fail("marginal", "only \"standard_normal\" is supported");

  const json& f = required(j, "f_star", "f_star");
  reject_unknown(f, "f_star", {"centers", "coefficients"});
  const auto centers = as_numbers(required(f, "centers", "f_star.centers"), "f_star.centers");
  const auto coeffs = as_numbers(required(f, "coefficients", "f_star.coefficients"), "f_star.coefficients");
  if (centers.size() != coeffs.size()) fail("f_star", "centers and coefficients differ in length");
  c.f_star = FunctionExpansion(Eigen::Map<const Vector<double>>(centers.data(), static_cast<Eigen::Index>(centers.size())),
                               Eigen::Map<const Vector<double>>(coeffs.data(), static_cast<Eigen::Index>(coeffs.size())));

  const json& noises = required(j, "noise_models", "noise_models");
  if (!noises.is_array() || noises.empty()) fail("noise_models", "must be a nonempty array");
  for (const auto& nj : noises) c.noise_models.push_back(noise_from_json(nj));

  if (j.contains("n")) c.n = as_int(j.at("n"), "n");
  c.alphas = as_numbers(required(j, "alphas", "alphas"), "alphas");
  if (j.contains("trials")) c.trials = as_int(j.at("trials"), "trials");
  c.levels = j.contains("levels") ? as_numbers(j.at("levels"), "levels") : default_levels();

  if (j.contains("risk_method")) {
    const json& r = j.at("risk_method");
    reject_unknown(r, "risk_method", {"kind", "m"});
    const auto kind = as<std::string>(required(r, "kind", "risk_method.kind"), "risk_method.kind");
    if (kind == "closed_form")
      c.risk_method.kind = RiskMethod::closed_form;
    else if (kind == "monte_carlo")
      c.risk_method.kind = RiskMethod::monte_carlo;
    else
      fail("risk_method.kind", "expected \"closed_form\" or \"monte_carlo\"");
    if (r.contains("m")) c.risk_method.m = as_int(r.at("m"), "risk_method.m");
  }
  if (j.contains("master_seed")) {
    const json& s = j.at("master_seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      fail("master_seed", "expected a nonnegative 64-bit integer");
    c.master_seed = s.get<std::uint64_t>();
  }

  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json noises = json::array();
  for (const auto& m : c.noise_models) noises.push_back(noise_to_json(m));
  const auto& fc = c.f_star.centers();
  const auto& fa = c.f_star.coefficients();
  return {
      {"kernel", {{"family", "rbf"}, {"bandwidth", c.kernel.bandwidth()}}},
      {"marginal", "standard_normal"},
      {"f_star",
       {{"centers", std::vector<double>(fc.data(), fc.data() + fc.size())},
        {"coefficients", std::vector<double>(fa.data(), fa.data() + fa.size())}}},
      {"noise_models", noises},
      {"n", c.n},
      {"alphas", c.alphas},
      {"trials", c.trials},
      {"levels", c.levels},
      {"risk_method",
       {{"kind", c.risk_method.kind == RiskMethod::closed_form ? "closed_form" : "monte_carlo"},
        {"m", c.risk_method.m}}},
      {"master_seed", c.master_seed},
  };
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("invalid override '" + assignment + "': expected key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &j;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("invalid override '" + assignment + "': empty key segment");
    if (!node->is_object()) throw ConfigError("invalid override '" + assignment + "': '" + part + "' is not inside an object");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("malformed config " + path.string() + ": not valid JSON");
  for (const auto& o : overrides) apply_override(j, o);
  return parse_config(j);
}

}  // namespace krrlab
