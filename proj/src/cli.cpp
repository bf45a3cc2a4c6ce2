#include "qimpose/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qimpose/bases.hpp"
#include "qimpose/bell.hpp"
#include "qimpose/matrix_io.hpp"

namespace qimpose::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::pair<Command, std::string_view> kCommands[] = {
    {Command::QseEstimate, "qse-estimate"},     {Command::QseBenchmark, "qse-benchmark"},
    {Command::BellLhv, "bell-lhv"},             {Command::BellOptimize, "bell-optimize"},
    {Command::BellEfficiency, "bell-efficiency"}, {Command::QmpSolve, "qmp-solve"},
    {Command::QmpSweep, "qmp-sweep"},
};

struct Context {
  const RunConfig& config;
  json cfg;
  fs::path base;  // directory of the config file, for relative references
};

void progress(std::string_view command, const std::string& line) {
  std::cerr << '[' << command << "] " << line << std::endl;
}

// A reference is an inline object or a path relative to the config file.
json resolve(const Context& ctx, const json& ref) {
  if (ref.is_string()) return readJsonFile(ctx.base / ref.get<std::string>());
  return ref;
}

HermitianMatrix matrixRef(const Context& ctx, const json& ref) { return matrixFromJson(resolve(ctx, ref)); }

std::vector<MeasurementSet> parseMeasurements(const Context& ctx, const json& list) {
  std::vector<MeasurementSet> out;
  for (const auto& item : list) {
    if (item.contains("family")) {
      const std::string family = item["family"];
      std::vector<MeasurementSet> bases;
      if (family == "mub") bases = mubBases(item.at("dim").get<int>());
      else if (family == "pauli") bases = pauliProductBases(item.at("qubits").get<int>());
      else if (family == "pauli_observables") bases = {pauliObservables(item.at("qubits").get<int>())};
      else throw Error(ErrorCode::InvalidInput, "unknown measurement family '" + family + "'");
      out.insert(out.end(), bases.begin(), bases.end());
      continue;
    }
    const std::string kind = item.value("kind", "PVM");
    MeasurementKind k = kind == "PVM" ? MeasurementKind::PVM
                        : kind == "POVM" ? MeasurementKind::POVM
                        : kind == "observable" ? MeasurementKind::ObservableBasis
                        : throw Error(ErrorCode::InvalidInput, "unknown measurement kind '" + kind + "'");
    std::vector<HermitianMatrix> effects;
    for (const auto& e : item.at("effects")) effects.push_back(matrixRef(ctx, e));
    out.emplace_back(std::move(effects), k);
  }
  return out;
}

std::vector<MeasurementSet> familyBases(const std::string& family, int qubits) {
  if (family == "mub") return mubBases(1 << qubits);
  if (family == "pauli") return pauliProductBases(qubits);
  throw Error(ErrorCode::InvalidInput, "benchmark family must be 'mub' or 'pauli'");
}

GeneratorKind parseGenerator(const std::string& s) {
  if (s == "hilbert_schmidt") return GeneratorKind::HilbertSchmidt;
  if (s == "haar_pure") return GeneratorKind::HaarPure;
  throw Error(ErrorCode::InvalidInput, "generator must be 'hilbert_schmidt' or 'haar_pure'");
}

std::string pairKey(int x, int y) { return std::to_string(x) + "," + std::to_string(y); }

BellScenario parseScenario(const json& j) {
  BellScenario s{j.at("m").get<int>(), j.at("d").get<int>()};
  s.validate();
  return s;
}

// {"x,y": [[v00, v01, ...], ...]} into a flat [x][y][a][b] vector.
Eigen::VectorXd parsePairTable(const BellScenario& s, const json& table, bool required) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.jointSize());
  for (int x = 0; x < s.settings; ++x)
    for (int y = 0; y < s.settings; ++y) {
      const std::string key = pairKey(x, y);
      if (!table.contains(key)) {
        if (required) throw Error(ErrorCode::InvalidInput, "missing entry for settings " + key);
        continue;
      }
      const auto& rows = table[key];
      if (rows.size() != static_cast<std::size_t>(s.outcomes))
        throw Error(ErrorCode::InvalidInput, "entry " + key + " must be d x d");
      for (int a = 0; a < s.outcomes; ++a) {
        if (rows[a].size() != static_cast<std::size_t>(s.outcomes))
          throw Error(ErrorCode::InvalidInput, "entry " + key + " must be d x d");
        for (int b = 0; b < s.outcomes; ++b) out(s.jointIndex(x, y, a, b)) = rows[a][b].get<double>();
      }
    }
  return out;
}

json pairTableToJson(const BellScenario& s, const Eigen::VectorXd& v) {
  json table = json::object();
  for (int x = 0; x < s.settings; ++x)
    for (int y = 0; y < s.settings; ++y) {
      json rows = json::array();
      for (int a = 0; a < s.outcomes; ++a) {
        json row = json::array();
        for (int b = 0; b < s.outcomes; ++b) row.push_back(v(s.jointIndex(x, y, a, b)));
        rows.push_back(row);
      }
      table[pairKey(x, y)] = rows;
    }
  return table;
}

Eigen::VectorXd parseMarginals(const BellScenario& s, const json& j) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(s.marginalSize());
  if (j.is_null()) return out;
  if (j.size() != static_cast<std::size_t>(s.settings))
    throw Error(ErrorCode::InvalidInput, "marginal coefficients need one row per setting");
  for (int x = 0; x < s.settings; ++x) {
    if (j[x].size() != static_cast<std::size_t>(s.outcomes))
      throw Error(ErrorCode::InvalidInput, "marginal coefficient rows need d entries");
    for (int a = 0; a < s.outcomes; ++a) out(s.marginalIndex(x, a)) = j[x][a].get<double>();
  }
  return out;
}

json marginalsToJson(const BellScenario& s, const Eigen::VectorXd& v) {
  json rows = json::array();
  for (int x = 0; x < s.settings; ++x) {
    json row = json::array();
    for (int a = 0; a < s.outcomes; ++a) row.push_back(v(s.marginalIndex(x, a)));
    rows.push_back(row);
  }
  return rows;
}

BellInequality parseInequality(const json& j) {
  const BellScenario s = parseScenario(j);
  return BellInequality(s, parsePairTable(s, j.value("joint", json::object()), false),
                        parseMarginals(s, j.value("margA", json())), parseMarginals(s, j.value("margB", json())));
}

json inequalityToJson(const BellInequality& ineq, double bound) {
  const BellScenario& s = ineq.scenario;
  return {{"m", s.settings},
          {"d", s.outcomes},
          {"joint", pairTableToJson(s, ineq.joint)},
          {"margA", marginalsToJson(s, ineq.margA)},
          {"margB", marginalsToJson(s, ineq.margB)},
          {"bound", bound}};
}

CountsTable parseCounts(const json& j) {
  CountsTable c(parseScenario(j));
  c.c = parsePairTable(c.scenario, j.at("counts"), true);
  c.validate();
  return c;
}

json countsToJson(const CountsTable& c) {
  return {{"m", c.scenario.settings}, {"d", c.scenario.outcomes}, {"counts", pairTableToJson(c.scenario, c.c)}};
}

double tiltFrom(const json& j) {
  if (j.contains("alpha")) return j["alpha"].get<double>();
  if (j.contains("concurrence")) return tiltForConcurrence(j["concurrence"].get<double>());
  throw Error(ErrorCode::InvalidInput, "tilted source needs 'alpha' or 'concurrence'");
}

BehaviorTable parseBehavior(const Context& ctx, const json& ref) {
  const json j = resolve(ctx, ref);
  if (j.contains("tilted")) {
    const TiltedBell t = tiltedInequality(tiltFrom(j["tilted"]));
    return behaviorFromState(t.state, t.settingsA, t.settingsB);
  }
  if (j.contains("counts")) return BehaviorTable::fromCounts(parseCounts(j));
  BehaviorTable b(parseScenario(j));
  b.p = parsePairTable(b.scenario, j.at("p"), true);
  b.validate();
  return b;
}

std::optional<std::uint64_t> parseSamples(const json& j, int qubits) {
  if (!j.contains("samples_per_basis")) return std::uint64_t{100} << qubits;
  const auto& v = j["samples_per_basis"];
  if (v.is_string()) {
    if (v.get<std::string>() == "inf") return std::nullopt;
    throw Error(ErrorCode::InvalidInput, "samples_per_basis must be a positive integer or \"inf\"");
  }
  const auto n = v.get<std::int64_t>();
  if (n < 1) throw Error(ErrorCode::InvalidInput, "samples_per_basis must be positive");
  return static_cast<std::uint64_t>(n);
}

QuantumState randomOfRank(const Dims& dims, int rank, Rng& rng) {
  const Eigen::Index d = totalDim(dims);
  if (rank < 1 || rank > d) throw Error(ErrorCode::InvalidInput, "generator rank must lie in 1..d^N");
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd z(d, rank);
  for (Eigen::Index j = 0; j < rank; ++j)
    for (Eigen::Index i = 0; i < d; ++i) {
      const double re = g(rng);
      z(i, j) = Complex(re, g(rng));
    }
  HermitianMatrix rho = z * z.adjoint();
  rho /= rho.trace().real();
  return QuantumState(hermitianPart(rho), dims);
}

std::vector<Subsystems> parseSubsets(const json& j, int parties) {
  if (j.is_object()) return allSubsets(parties, j.at("k").get<int>());
  return j.get<std::vector<Subsystems>>();
}

// --- commands -------------------------------------------------------------

int qseEstimate(Context& ctx, json& result) {
  const json& cfg = ctx.cfg;
  EstimationProblem problem;
  problem.measurements = parseMeasurements(ctx, cfg.at("measurements"));
  for (const auto& f : cfg.at("frequencies")) {
    const auto v = f.get<std::vector<double>>();
    problem.frequencies.push_back(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  problem.epsilon = cfg.value("epsilon", 1e-10);
  problem.maxIterations = cfg.value("max_iters", 10000);
  if (cfg.contains("dims")) problem.dims = cfg["dims"].get<Dims>();
  progress("qse-estimate", std::to_string(problem.measurements.size()) + " measurements");
  const EstimationResult r = estimate(problem);
  result["converged"] = r.converged;
  result["iterations"] = r.iterations;
  result["residual"] = r.residual;
  result["fidelity"] = nullptr;
  if (cfg.contains("reference")) {
    const HermitianMatrix ref = matrixRef(ctx, cfg["reference"]);
    result["fidelity"] = fidelity(r.state.matrix(), ref);
  }
  result["state"] = matrixToJson(r.state.matrix());
  return r.converged ? kSuccess : kNotConverged;
}

int qseBenchmark(Context& ctx, json& result) {
  const json& cfg = ctx.cfg;
  const std::string family = cfg.at("family");
  const int qubits = cfg.at("qubits");
  if (qubits < 1 || qubits > 8) throw Error(ErrorCode::InvalidInput, "qubits must lie in 1..8");
  NoiseModel noise;
  noise.whiteNoise = cfg.value("white_noise", 0.1);
  noise.samplesPerBasis = parseSamples(cfg, qubits);
  const std::string sampling = cfg.value("sampling", "poisson");
  if (sampling == "multinomial") noise.sampling = SamplingMode::Multinomial;
  else if (sampling != "poisson") throw Error(ErrorCode::InvalidInput, "sampling must be 'poisson' or 'multinomial'");
  const int trials = cfg.value("trials", 50);
  const GeneratorKind gen = parseGenerator(cfg.value("generator", "hilbert_schmidt"));
  EstimationSettings settings{cfg.value("epsilon", 1e-10), cfg.value("max_iters", 10000)};

  const auto bases = familyBases(family, qubits);
  progress("qse-benchmark", family + " N=" + std::to_string(qubits) + ", " + std::to_string(bases.size()) +
                                " bases, " + std::to_string(trials) + " trials");
  const FidelityStats stats = benchmarkFidelity(Dims(static_cast<std::size_t>(qubits), 2), bases, gen, noise,
                                                trials, ctx.config.seed, settings, ctx.config.threads);
  result["mean_fidelity"] = stats.meanFidelity;
  result["std_error"] = stats.stdError;
  result["trials"] = trials;
  result["not_converged"] = stats.notConverged;
  result["samples_per_basis"] = noise.samplesPerBasis ? json(*noise.samplesPerBasis) : json("inf");
  writeFidelityCsv(stats, ctx.config.out / "fidelities.csv");
  std::cout << "mean_fidelity " << std::setprecision(6) << stats.meanFidelity << " +- " << stats.stdError << '\n';
  return kSuccess;
}

int bellLhv(Context& ctx, json& result) {
  const json j = ctx.cfg.contains("inequality") ? resolve(ctx, ctx.cfg["inequality"]) : ctx.cfg;
  const BellInequality ineq = parseInequality(j);
  const double c = lhvBound(ineq);
  result["lhv"] = c;
  result["printed"] = formatInequality(ineq, c);
  std::cout << std::setprecision(15) << (c == 0.0 ? 0.0 : c) << '\n';
  return kSuccess;
}

int bellOptimize(Context& ctx, json& result) {
  const json& cfg = ctx.cfg;
  CountsTable counts;
  std::optional<BellInequality> reference;
  if (cfg.contains("counts")) {
    counts = parseCounts(resolve(ctx, cfg["counts"]));
  } else {
    const json& sim = cfg.at("simulate");
    const TiltedBell t = tiltedInequality(tiltFrom(sim));
    const BehaviorTable b = behaviorFromState(t.state, t.settingsA, t.settingsB);
    const double n = sim.value("counts_per_setting", 1e5);
    Rng rng = makeRng(deriveSeed(ctx.config.seed, 0x5eed));
    counts = sim.value("poisson", true) ? sampleCounts(b, n, rng) : countsFromBehavior(b, n);
    reference = t.inequality;
    writeJsonFile(ctx.config.out / "counts.json", countsToJson(counts));
  }
  GapOptions opt;
  opt.chains = cfg.value("chains", 1);
  opt.threads = ctx.config.threads;
  const int trials = cfg.value("trials", 20);
  progress("bell-optimize", std::to_string(trials) + " restarts x " + std::to_string(opt.chains) + " chains");
  const GapResult g = maximizeGap(counts, trials, ctx.config.seed, opt);
  result["ratio"] = g.ratio;
  result["quantum"] = g.quantum.value;
  result["quantum_error"] = g.quantum.error;
  result["lhv"] = g.lhv;
  result["inequality"] = inequalityToJson(g.inequality, g.lhv);
  result["printed"] = formatInequality(g.inequality, g.lhv);
  result["restart_ratios"] = g.restartRatios;
  if (reference) {
    // The tilted inequality itself, scaled into the coefficient box.
    const BellInequality scaled = reference->scaled(1.0 / reference->maxAbsCoefficient());
    result["tilted_ratio"] = gapRatio(scaled, counts);
  }
  std::cout << "R " << std::setprecision(10) << g.ratio << '\n' << formatInequality(g.inequality, g.lhv) << '\n';
  return kSuccess;
}

int bellEfficiency(Context& ctx, json& result) {
  const json& cfg = ctx.cfg;
  const BellInequality ineq = parseInequality(resolve(ctx, cfg.at("inequality")));
  const BehaviorTable behavior = parseBehavior(ctx, cfg.at("behavior"));
  const std::string mode = cfg.value("mode", "symmetric");
  EfficiencyMode m = mode == "symmetric" ? EfficiencyMode::Symmetric
                     : mode == "asymmetric_b1" ? EfficiencyMode::AsymmetricB1
                     : throw Error(ErrorCode::InvalidInput, "mode must be 'symmetric' or 'asymmetric_b1'");
  const CanonicalForm canon = canonicalForm(ineq);
  const double eta = efficiencyThreshold(canon.inequality, behavior, m);
  result["eta"] = eta;
  result["mode"] = mode;
  result["canonical"] = inequalityToJson(canon.inequality, canon.bound);
  result["printed"] = formatInequality(canon.inequality, canon.bound);
  std::cout << "eta " << std::setprecision(10) << eta << '\n';
  return kSuccess;
}

int qmpSolve(Context& ctx, json& result) {
  const json& cfg = ctx.cfg;
  const int parties = cfg.at("N"), d = cfg.at("d");
  MarginalSpec spec{parties, d, {}};
  if (cfg.contains("generator")) {
    const json& g = cfg["generator"];
    Rng rng = makeRng(deriveSeed(ctx.config.seed, 0x9e4));
    const QuantumState sigma = g.contains("rank") ? randomOfRank(spec.dims(), g["rank"].get<int>(), rng)
                                                  : randomState(spec.dims(), parseGenerator(g.value("kind", "haar_pure")), rng);
    spec = MarginalSpec::fromGlobalState(sigma.matrix(), parties, d, parseSubsets(g.at("subsets"), parties));
    result["generator_rank"] = (eigh(sigma.matrix()).values.array() > 1e-10).count();
  } else {
    for (const auto& t : cfg.at("targets")) {
      const std::vector<Subsystems> subsets = t.contains("subsets") ? parseSubsets(t["subsets"], parties)
                                                                    : std::vector<Subsystems>{t.at("subset").get<Subsystems>()};
      for (const auto& s : subsets) {
        const auto& st = t.at("state");
        if (st.is_string() && st.get<std::string>() == "maximally_mixed") {
          const auto mm = MarginalSpec::maximallyMixed(parties, d, {s});
          spec.targets.push_back(mm.targets.front());
        } else {
          spec.targets.push_back({s, matrixRef(ctx, st)});
        }
      }
    }
    spec.validate();
  }

  const json& cj = cfg.at("constraint");
  SpectralConstraint constraint;
  if (cj.contains("rank")) {
    constraint = SpectralConstraint::withRank(cj["rank"].get<int>());
  } else {
    const auto l = cj.at("spectrum").get<std::vector<double>>();
    constraint = SpectralConstraint::spectra(Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size())));
  }

  SolveOptions opt;
  opt.epsilon = cfg.value("epsilon", 1e-6);
  opt.maxIterations = cfg.value("max_iters", 50000);
  const std::string seedKind = cfg.value("seed_state", "hilbert_schmidt");
  if (seedKind == "maximally_mixed") opt.seed = SeedKind::MaximallyMixed;
  else if (seedKind != "hilbert_schmidt") throw Error(ErrorCode::InvalidInput, "seed_state must be 'hilbert_schmidt' or 'maximally_mixed'");
  opt.progress = [](int n, double dt) {
    if (n % 1000 == 0) {
      std::ostringstream os;
      os << "iteration " << n << " D_T=" << std::scientific << std::setprecision(3) << dt;
      progress("qmp-solve", os.str());
    }
  };

  progress("qmp-solve", "N=" + std::to_string(parties) + " d=" + std::to_string(d) + ", " +
                            std::to_string(spec.targets.size()) + " marginals");
  std::optional<SolveResult> r;
  if (cfg.contains("accelerated")) {
    const json& a = cfg["accelerated"];
    HalpernSchedule h;
    h.alpha = a.value("alpha", h.alpha);
    h.mu = a.value("mu", h.mu);
    h.exponent = a.value("exponent", h.exponent);
    const std::string beta = a.value("beta", "squared");
    if (beta == "zero") h.beta = BetaRule::Zero;
    else if (beta != "squared") throw Error(ErrorCode::InvalidInput, "beta must be 'squared' or 'zero'");
    if (a.contains("anchor")) h.anchor = a["anchor"].get<double>();
    r = solveAccelerated(spec, constraint, h, opt, ctx.config.seed);
    if (a.value("compare_plain", false)) {
      const SolveResult plain = solve(spec, constraint, opt, ctx.config.seed);
      result["plain_iterations"] = plain.report.iterations;
      result["plain_converged"] = plain.report.converged;
    }
  } else {
    r = solve(spec, constraint, opt, ctx.config.seed);
  }
  const ConvergenceReport& rep = r->report;
  result["converged"] = rep.converged;
  result["iterations"] = rep.iterations;
  result["D_M"] = rep.dM.empty() ? 0.0 : rep.dM.back();
  result["D_lambda"] = rep.dLambda.empty() ? 0.0 : rep.dLambda.back();
  result["D_T"] = rep.dT.empty() ? 0.0 : rep.dT.back();
  result["epsilon"] = opt.epsilon;
  if (cfg.value("dump_state", true)) result["state"] = matrixToJson(r->state.matrix());
  writeTrajectoryCsv(rep, ctx.config.out / "trajectory.csv");
  std::cout << (rep.converged ? "converged" : "not converged") << " after " << rep.iterations
            << " iterations, D_T " << std::setprecision(6) << result["D_T"].get<double>() << '\n';
  return rep.converged ? kSuccess : kNotConverged;
}

int qmpSweep(Context& ctx, json& result) {
  const json& cfg = ctx.cfg;
  const int parties = cfg.at("N"), k = cfg.at("k"), d = cfg.at("d");
  std::vector<int> ms;
  if (!cfg.contains("m") || cfg["m"] == "all") {
    const int total = static_cast<int>(allSubsets(parties, k).size());
    for (int m = 0; m <= total; ++m) ms.push_back(m);
  } else {
    ms = cfg["m"].get<std::vector<int>>();
  }
  const int trials = cfg.value("trials", 1000);
  const GeneratorKind gen = parseGenerator(cfg.value("generator", "hilbert_schmidt"));
  progress("qmp-sweep", "N=" + std::to_string(parties) + " k=" + std::to_string(k) + " d=" + std::to_string(d) +
                            ", " + std::to_string(trials) + " trials per m");
  const auto rows = npmSweep(parties, k, d, ms, trials, gen, ctx.config.seed, ctx.config.threads);
  json table = json::array();
  for (const auto& r : rows) table.push_back({{"m", r.m}, {"psd_count", r.psdCount}, {"trials", r.trials}});
  result["rows"] = table;
  writeSweepCsv(rows, ctx.config.out / "sweep.csv");
  for (const auto& r : rows) std::cout << r.m << ' ' << r.psdCount << ' ' << r.trials << '\n';
  return kSuccess;
}

std::string utcNow() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<Command> parseCommand(std::string_view name) {
  for (const auto& [c, n] : kCommands)
    if (n == name) return c;
  return std::nullopt;
}

std::string_view commandName(Command command) {
  for (const auto& [c, n] : kCommands)
    if (c == command) return n;
  return "unknown";
}

void writeTrajectoryCsv(const ConvergenceReport& report, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out << "n,D_M,D_lambda,D_T\n" << std::setprecision(17);
  for (std::size_t i = 0; i < report.steps.size(); ++i)
    out << report.steps[i] << ',' << report.dM[i] << ',' << report.dLambda[i] << ',' << report.dT[i] << '\n';
}

void writeSweepCsv(const std::vector<NpmRow>& rows, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out << "m,psd_count,trials\n";
  for (const auto& r : rows) out << r.m << ',' << r.psdCount << ',' << r.trials << '\n';
}

void writeFidelityCsv(const FidelityStats& stats, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidInput, "cannot write " + path.string());
  out << "trial,fidelity\n" << std::setprecision(17);
  for (std::size_t i = 0; i < stats.fidelities.size(); ++i) out << i << ',' << stats.fidelities[i] << '\n';
}

int run(const RunConfig& config) {
  const std::string name(commandName(config.command));
  const std::string started = utcNow();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (config.threads < 1) throw Error(ErrorCode::InvalidInput, "--threads must be at least 1");
    Context ctx{config, readJsonFile(config.config), config.config.parent_path()};
    fs::create_directories(config.out);
    json result = {{"command", name}, {"seed", config.seed.value}};
    int code = kSuccess;
    switch (config.command) {
      case Command::QseEstimate: code = qseEstimate(ctx, result); break;
      case Command::QseBenchmark: code = qseBenchmark(ctx, result); break;
      case Command::BellLhv: code = bellLhv(ctx, result); break;
      case Command::BellOptimize: code = bellOptimize(ctx, result); break;
      case Command::BellEfficiency: code = bellEfficiency(ctx, result); break;
      case Command::QmpSolve: code = qmpSolve(ctx, result); break;
      case Command::QmpSweep: code = qmpSweep(ctx, result); break;
    }
    writeJsonFile(config.out / "result.json", result);
    const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    writeJsonFile(config.out / "metadata.json", {{"command", name},
                                                 {"config", config.config.string()},
                                                 {"seed", config.seed.value},
                                                 {"threads", config.threads},
                                                 {"started_utc", started},
                                                 {"finished_utc", utcNow()},
                                                 {"runtime_seconds", runtime},
                                                 {"exit_code", code}});
    if (code == kNotConverged) progress(name, "did not converge; results written with converged=false");
    return code;
  } catch (const Error& e) {
    std::cerr << "qimpose " << name << ": " << e.what() << '\n';
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "qimpose " << name << ": malformed config: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "qimpose " << name << ": " << e.what() << '\n';
  }
  return kInputError;
}

int main(int argc, char** argv) {
  CLI::App app{"Quantum state estimation, Bell gap optimization and quantum marginal solver"};
  app.require_subcommand(1);
  RunConfig config;
  std::uint64_t seed = config.seed.value;
  for (const auto& [cmd, name] : kCommands) {
    CLI::App* sub = app.add_subcommand(std::string(name));
    sub->add_option("--config", config.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", config.out, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
    sub->add_option("--threads", config.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub->callback([&config, cmd = cmd] { config.command = cmd; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kInputError;
  }
  config.seed = RngSeed{seed};
  return run(config);
}

}  // namespace qimpose::cli
