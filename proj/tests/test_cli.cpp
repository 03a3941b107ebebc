#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <doctest.h>

#include "krrlab/cli.hpp"
#include "krrlab/format.hpp"
#include "krrlab/theory.hpp"

using namespace krrlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

// Parses `key = value` lines.
std::map<std::string, std::string> fields(const std::string& text) {
  std::map<std::string, std::string> m;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) m[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return m;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "krrlab_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const fs::path kShippedConfig = fs::path(KRRLAB_SOURCE_DIR) / "configs" / "paper_sectionA.json";

}  // namespace

TEST_CASE("schedule prints the library value") {
  const auto r = call({"schedule", "--kind", "alpha1", "--n", "100", "--delta", "0.1", "--nu", "0.5"});
  CHECK(r.code == 0);
  const auto f = fields(r.out);
  REQUIRE(f.count("alpha"));
  CHECK(parse_double(f.at("alpha")) == theory::schedule_alpha1(100, 0.1, 0.5, theory::FnConstants{}));
  CHECK(f.at("alpha").starts_with("0.20234"));

  const auto a2 = fields(call({"schedule", "--kind", "alpha2", "--n", "100", "--delta", "0.01", "--nu", "1"}).out);
  CHECK(parse_double(a2.at("alpha")) == theory::schedule_alpha2(100, 0.01, 1.0, 3, 1.0).value);
}

TEST_CASE("unknown subcommands and bad flags are usage errors") {
  const auto r = call({"nope"});
  CHECK(r.code == 1);
  CHECK(r.err.starts_with("usage error:"));
  CHECK(r.err.find("Usage:") != std::string::npos);
  CHECK(call({}).code == 1);
  CHECK(call({"schedule", "--bogus", "1"}).code == 1);
  CHECK(call({"schedule", "--kind", "alpha1", "--n", "100", "--delta", "2"}).code == 1);
  CHECK(call({"--help"}).code == 0);
  CHECK(call({"--version"}).out == std::string(cli::version()) + "\n");
}

TEST_CASE("regime reports n0 and D1 membership") {
  const auto r = call({"regime", "--n", "20", "--delta", "0.1", "--q", "3", "--sigma", "2", "--Q", "10"});
  CHECK(r.code == 0);
  const auto f = fields(r.out);
  theory::MomentParams m;
  m.sigma = 2;
  m.Q = 10;
  m.q = 3;
  CHECK(parse_double(f.at("n0")) == theory::n0(0.1, m, 1.0));
  CHECK(parse_double(f.at("n0")) == doctest::Approx(2.2765).epsilon(1e-4));
  CHECK(f.at("in_D1") == "true");
  CHECK(f.at("in_D2") == "false");
  CHECK(parse_double(f.at("fn_confidence_bound")) == theory::fn_confidence_bound(0.1, 20, m, theory::FnConstants{}));
}

TEST_CASE("regime plot writes a deterministic SVG") {
  const auto dir = fresh_dir("regime");
  const std::vector<std::string> args{"regime", "--n", "20", "--delta", "0.1", "--plot", "--out", dir.string()};
  REQUIRE(call(args).code == 0);
  const auto first = slurp(dir / "n0.svg");
  CHECK(first.starts_with("<svg"));
  REQUIRE(call(args).code == 0);
  CHECK(slurp(dir / "n0.svg") == first);
}

TEST_CASE("bound prints the library report") {
  const auto r = call({"bound", "--kind", "capacity_free", "--alpha", "0.1", "--delta", "0.1", "--n", "10000", "--nu",
                       "1", "--R", "1", "--sup-norm", "3.2", "--sigma", to_shortest(std::sqrt(3.0)), "--Q", "10", "--q",
                       "3"});
  REQUIRE(r.code == 0);
  theory::SourceCondition src;
  src.nu = 1;
  src.R = 1;
  src.sup_norm_fstar = 3.2;
  theory::MomentParams m;
  m.sigma = std::sqrt(3.0);
  m.Q = 10;
  m.q = 3;
  const auto report = theory::capacity_free_bound(0.1, 0.1, 1e4, KernelSpec::rbf(), src, m, theory::FnConstants{});
  const auto f = fields(r.out);
  CHECK(parse_double(f.at("total")) == report.total);
  CHECK(parse_double(f.at("eta_term")) == report.eta_term);
  CHECK(f.at("precondition_ok") == "false");

  const auto cap = call({"bound", "--kind", "capacity", "--alpha", "0.1", "--delta", "0.1", "--n", "10000", "--effdim",
                         "3.7"});
  REQUIRE(cap.code == 0);
  CHECK(parse_double(fields(cap.out).at("total")) == doctest::Approx(0.1819176961128694).epsilon(1e-14));
}

TEST_CASE("effdim prints a table") {
  const auto r = call({"effdim", "--n", "40", "--alphas", "0.1,0.01"});
  CHECK(r.code == 0);
  CHECK(r.out.find("alpha,effective_dimension,trace_over_alpha,bound") != std::string::npos);
}

TEST_CASE("config and output failures exit with 2 and distinct prefixes") {
  const auto missing = call({"run", "--config", "/definitely/not/here.json"});
  CHECK(missing.code == 2);
  CHECK(missing.err.starts_with("config error:"));

  const auto bad = call({"run", "--config", kShippedConfig.string(), "--set", "alphas=[0]"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("alphas") != std::string::npos);

  const auto dir = fresh_dir("blocked");
  std::ofstream(dir / "file") << "x";
  const auto unwritable = call({"run", "--config", kShippedConfig.string(), "--set", "trials=2", "--set",
                                "alphas=[1]", "--out", (dir / "file" / "sub").string()});
  CHECK(unwritable.code == 2);
  CHECK(unwritable.err.find("\noutput error:") != std::string::npos);
}

TEST_CASE("run is byte-identical across repeats and thread counts") {
  const auto a = fresh_dir("run_a");
  const auto b = fresh_dir("run_b");
  const std::string cli = KRRLAB_CLI_PATH;
  const std::string common = " run --config " + kShippedConfig.string() + " --set trials=60 --plot";
  REQUIRE(std::system((cli + common + " --threads 1 --out " + a.string() + " > /dev/null").c_str()) == 0);
  REQUIRE(std::system((cli + common + " --threads 3 --out " + b.string() + " > /dev/null").c_str()) == 0);
  for (const char* name : {"quantiles.csv", "raw.csv", "quantiles.svg"}) {
    const auto left = slurp(a / name);
    CHECK(!left.empty());
    CHECK(left == slurp(b / name));
  }
  CHECK(slurp(a / "quantiles.csv").starts_with("noise,alpha,level,quantile\n"));
  CHECK(slurp(a / "raw.csv").starts_with("noise,alpha,trial,risk\n"));
  CHECK(fs::exists(a / "summary.json"));

  // Recomputing quantiles from raw.csv reproduces the run's table.
  const auto q = fresh_dir("requantile");
  REQUIRE(call({"quantiles", "--config", kShippedConfig.string(), "--raw", (a / "raw.csv").string(), "--out",
                q.string()})
              .code == 0);
  CHECK(slurp(q / "quantiles.csv") == slurp(a / "quantiles.csv"));

  // A different seed changes the output.
  const auto c = fresh_dir("run_c");
  REQUIRE(std::system((cli + common + " --seed 7 --out " + c.string() + " > /dev/null").c_str()) == 0);
  CHECK(slurp(c / "raw.csv") != slurp(a / "raw.csv"));
}

TEST_CASE("fn-sim writes its table") {
  const auto dir = fresh_dir("fnsim");
  const auto r = call({"fn-sim", "--config", kShippedConfig.string(), "--set", "trials=50", "--n-list", "5,20",
                       "--out", dir.string()});
  REQUIRE(r.code == 0);
  const auto text = slurp(dir / "fn_sum.csv");
  CHECK(text.starts_with("noise,n,level,quantile\n"));
  // 2 noises x 2 sample sizes x 7 levels plus the header.
  CHECK(std::count(text.begin(), text.end(), '\n') == 29);
}
