#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "qimpose/cli.hpp"
#include "qimpose/matrix_io.hpp"

using namespace qimpose;
using namespace qimpose::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = QIMPOSE_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "qimpose_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig configFor(Command c, const fs::path& cfg, const fs::path& out, std::uint64_t seed = 1) {
  RunConfig r;
  r.command = c;
  r.config = cfg;
  r.out = out;
  r.seed = RngSeed{seed};
  return r;
}

std::vector<std::string> lines(const fs::path& p) {
  std::vector<std::string> out;
  std::ifstream in(p);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("command names round trip") {
  for (auto c : {Command::QseEstimate, Command::QseBenchmark, Command::BellLhv, Command::BellOptimize,
                 Command::BellEfficiency, Command::QmpSolve, Command::QmpSweep})
    CHECK(parseCommand(commandName(c)) == c);
  CHECK_FALSE(parseCommand("qse").has_value());
}

TEST_CASE("bell-lhv on the bundled CHSH file") {
  const fs::path out = scratch("chsh");
  CHECK(run(configFor(Command::BellLhv, kConfigs / "chsh.json", out)) == kSuccess);
  const auto r = readJsonFile(out / "result.json");
  CHECK(r["lhv"].get<double>() == 0.0);
  CHECK(fs::exists(out / "metadata.json"));
}

TEST_CASE("single-qubit MUB benchmark") {
  const fs::path out = scratch("mub1");
  CHECK(run(configFor(Command::QseBenchmark, kConfigs / "qse_benchmark_mub_n1.json", out)) == kSuccess);
  const auto r = readJsonFile(out / "result.json");
  CHECK(std::abs(r["mean_fidelity"].get<double>() - 0.9898) <= 0.02);
  const auto csv = lines(out / "fidelities.csv");
  CHECK(csv.front() == "trial,fidelity");
  CHECK(csv.size() == 51);
}

TEST_CASE("qse-estimate reproduces the reference state") {
  const fs::path out = scratch("estimate");
  CHECK(run(configFor(Command::QseEstimate, kConfigs / "qse_estimate_qubit.json", out)) == kSuccess);
  const auto r = readJsonFile(out / "result.json");
  CHECK(r["converged"].get<bool>());
  CHECK(r["fidelity"].get<double>() >= 1.0 - 1e-9);
  CHECK(matrixFromJson(r["state"]).rows() == 2);
}

TEST_CASE("AME(4,2) reports non-convergence with exit code 2") {
  const fs::path out = scratch("ame42");
  CHECK(run(configFor(Command::QmpSolve, kConfigs / "qmp_ame42.json", out)) == kNotConverged);
  const auto r = readJsonFile(out / "result.json");
  CHECK_FALSE(r["converged"].get<bool>());
  CHECK(r["iterations"].get<int>() == 100);
  const auto csv = lines(out / "trajectory.csv");
  CHECK(csv.front() == "n,D_M,D_lambda,D_T");
  CHECK(csv.size() == 101);
}

TEST_CASE("converged qmp-solve ends below epsilon") {
  const fs::path out = scratch("pure3");
  CHECK(run(configFor(Command::QmpSolve, kConfigs / "qmp_pure3.json", out)) == kSuccess);
  const auto csv = lines(out / "trajectory.csv");
  const std::string last = csv.back();
  const double dt = std::stod(last.substr(last.rfind(',') + 1));
  CHECK(dt <= 1e-6);
}

TEST_CASE("result files are byte-identical for identical inputs") {
  const fs::path a = scratch("repro_a"), b = scratch("repro_b");
  REQUIRE(run(configFor(Command::QseBenchmark, kConfigs / "qse_benchmark_pauli_n2.json", a, 7)) == kSuccess);
  REQUIRE(run(configFor(Command::QseBenchmark, kConfigs / "qse_benchmark_pauli_n2.json", b, 7)) == kSuccess);
  CHECK(slurp(a / "result.json") == slurp(b / "result.json"));
  CHECK(slurp(a / "fidelities.csv") == slurp(b / "fidelities.csv"));

  RunConfig threaded = configFor(Command::QseBenchmark, kConfigs / "qse_benchmark_pauli_n2.json", b, 7);
  threaded.threads = 3;
  REQUIRE(run(threaded) == kSuccess);
  CHECK(slurp(a / "result.json") == slurp(b / "result.json"));

  const fs::path c = scratch("repro_c"), d = scratch("repro_d");
  REQUIRE(run(configFor(Command::QmpSolve, kConfigs / "qmp_pure3.json", c, 3)) == kSuccess);
  REQUIRE(run(configFor(Command::QmpSolve, kConfigs / "qmp_pure3.json", d, 3)) == kSuccess);
  CHECK(slurp(c / "result.json") == slurp(d / "result.json"));
}

TEST_CASE("sweep writes one row per m") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = dir / "sweep.json";
  writeJsonFile(cfg, {{"N", 3}, {"k", 1}, {"d", 2}, {"m", {0, 1, 3}}, {"trials", 20}});
  CHECK(run(configFor(Command::QmpSweep, cfg, dir / "out")) == kSuccess);
  const auto csv = lines(dir / "out" / "sweep.csv");
  REQUIRE(csv.size() == 4);
  CHECK(csv[0] == "m,psd_count,trials");
  CHECK(csv[1] == "0,20,20");
}

TEST_CASE("empty trajectory gives a header-only file") {
  const fs::path p = scratch("empty") / "t.csv";
  writeTrajectoryCsv(ConvergenceReport{}, p);
  CHECK(lines(p) == std::vector<std::string>{"n,D_M,D_lambda,D_T"});
}

TEST_CASE("input errors exit with code 1") {
  const fs::path dir = scratch("errors");
  CHECK(run(configFor(Command::QmpSolve, dir / "missing.json", dir / "o1")) == kInputError);

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(run(configFor(Command::BellLhv, dir / "broken.json", dir / "o2")) == kInputError);

  writeJsonFile(dir / "bad_family.json", {{"family", "sic"}, {"qubits", 1}});
  CHECK(run(configFor(Command::QseBenchmark, dir / "bad_family.json", dir / "o3")) == kInputError);

  writeJsonFile(dir / "bad_mub.json", {{"measurements", {{{"family", "mub"}, {"dim", 6}}}}, {"frequencies", json::array()}});
  CHECK(run(configFor(Command::QseEstimate, dir / "bad_mub.json", dir / "o4")) == kInputError);

  RunConfig zeroThreads = configFor(Command::BellLhv, kConfigs / "chsh.json", dir / "o5");
  zeroThreads.threads = 0;
  CHECK(run(zeroThreads) == kInputError);
}

TEST_CASE("argument parsing") {
  const fs::path out = scratch("argv");
  const std::string cfg = (kConfigs / "chsh.json").string(), o = out.string();
  const char* argv[] = {"qimpose", "bell-lhv", "--config", cfg.c_str(), "--out", o.c_str(), "--seed", "5", "--threads", "2"};
  CHECK(cli::main(10, const_cast<char**>(argv)) == kSuccess);
  CHECK(readJsonFile(out / "metadata.json")["threads"].get<int>() == 2);
  CHECK(readJsonFile(out / "result.json")["seed"].get<int>() == 5);

  const char* bad[] = {"qimpose", "bell-lhv"};
  CHECK(cli::main(2, const_cast<char**>(bad)) == kInputError);
  const char* unknown[] = {"qimpose", "frobnicate", "--config", cfg.c_str()};
  CHECK(cli::main(4, const_cast<char**>(unknown)) == kInputError);
}

TEST_CASE("bell-efficiency on the bundled CHSH config") {
  const fs::path out = scratch("eff");
  CHECK(run(configFor(Command::BellEfficiency, kConfigs / "bell_efficiency_chsh.json", out)) == kSuccess);
  CHECK(std::abs(readJsonFile(out / "result.json")["eta"].get<double>() - 0.828) < 0.005);
}
