#include "qimpose/qmp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "qimpose/parallel.hpp"

namespace qimpose {

void MarginalSpec::validate() const {
  if (parties < 1 || localDim < 1) throw Error(ErrorCode::InvalidInput, "marginal spec needs N >= 1 and d >= 1");
  for (const auto& t : targets) {
    if (t.subset.empty() || static_cast<int>(t.subset.size()) >= parties)
      throw Error(ErrorCode::InvalidSubsystem, "target subsets must be nonempty proper subsets");
    SubsystemSplit split(dims(), t.subset);
    if (t.state.rows() != split.keptDim() || t.state.cols() != split.keptDim())
      throw Error(ErrorCode::InvalidInput, "target marginal has the wrong dimension");
    QuantumState(t.state, split.keptDims());
  }
}

MarginalSpec MarginalSpec::fromGlobalState(const HermitianMatrix& global, int parties, int localDim,
                                           const std::vector<Subsystems>& subsets) {
  MarginalSpec spec{parties, localDim, {}};
  for (const auto& s : subsets) {
    SubsystemSplit split(spec.dims(), s);
    spec.targets.push_back({split.kept(), hermitianPart(partialTrace(global, split))});
  }
  spec.validate();
  return spec;
}

MarginalSpec MarginalSpec::maximallyMixed(int parties, int localDim, const std::vector<Subsystems>& subsets) {
  MarginalSpec spec{parties, localDim, {}};
  for (const auto& s : subsets) {
    SubsystemSplit split(spec.dims(), s);
    const Eigen::Index k = split.keptDim();
    spec.targets.push_back({split.kept(), HermitianMatrix::Identity(k, k) / static_cast<double>(k)});
  }
  spec.validate();
  return spec;
}

std::vector<Subsystems> allSubsets(int n, int k) {
  std::vector<Subsystems> out;
  if (k < 0 || k > n) return out;
  Subsystems s(static_cast<std::size_t>(k));
  std::iota(s.begin(), s.end(), 0);
  while (true) {
    out.push_back(s);
    int i = k - 1;
    while (i >= 0 && s[i] == n - k + i) --i;
    if (i < 0) break;
    ++s[i];
    for (int j = i + 1; j < k; ++j) s[j] = s[j - 1] + 1;
  }
  return out;
}

SpectralConstraint SpectralConstraint::spectra(Eigen::VectorXd lambda) {
  SpectralConstraint c;
  c.mode = Mode::Spectra;
  c.spectrum = std::move(lambda);
  return c;
}

SpectralConstraint SpectralConstraint::withRank(int r) {
  SpectralConstraint c;
  c.mode = Mode::Rank;
  c.rank = r;
  return c;
}

void SpectralConstraint::validate(long long dim) const {
  if (mode == Mode::Rank) {
    if (rank < 1 || rank > dim) throw Error(ErrorCode::InvalidInput, "rank must lie in 1..d^N");
    return;
  }
  if (spectrum.size() != dim) throw Error(ErrorCode::InvalidInput, "prescribed spectrum must have d^N entries");
  if ((spectrum.array() < 0.0).any()) throw Error(ErrorCode::InvalidInput, "prescribed spectrum is negative");
  if (std::abs(spectrum.sum() - 1.0) > 1e-10) throw Error(ErrorCode::InvalidInput, "prescribed spectrum must sum to 1");
  for (Eigen::Index i = 1; i < spectrum.size(); ++i)
    if (spectrum(i) > spectrum(i - 1)) throw Error(ErrorCode::InvalidInput, "prescribed spectrum must be descending");
}

double HalpernSchedule::anchorAt(int n) const {
  if (anchor) return *anchor;
  return std::pow(static_cast<double>(n) / 1e5 + 1.0, -exponent);
}

double HalpernSchedule::betaAt(int n) const {
  if (beta == BetaRule::Zero) return 0.0;
  const double a = anchorAt(n);
  return a * a;
}

void HalpernSchedule::validate() const {
  if (!(alpha > 0.0)) throw Error(ErrorCode::InvalidInput, "Halpern step alpha must be positive");
  if (!(mu > 0.0 && mu <= 1.0)) throw Error(ErrorCode::InvalidInput, "Halpern mu must lie in (0, 1]");
  if (!(exponent > 0.0)) throw Error(ErrorCode::InvalidInput, "Halpern exponent must be positive");
  if (anchor && !(*anchor >= 0.0 && *anchor <= 1.0))
    throw Error(ErrorCode::InvalidInput, "constant anchor weight must lie in [0, 1]");
}

namespace {

struct CompiledTarget {
  SubsystemSplit split;
  HermitianMatrix sigma;
  HermitianMatrix embedded;
};

std::vector<CompiledTarget> compile(const MarginalSpec& spec) {
  std::vector<CompiledTarget> out;
  for (const auto& t : spec.targets) {
    SubsystemSplit split(spec.dims(), t.subset);
    HermitianMatrix e = embedMaximallyMixed(t.state, split);
    out.push_back({std::move(split), t.state, std::move(e)});
  }
  return out;
}

HermitianMatrix applyTarget(const HermitianMatrix& rho, const CompiledTarget& t) {
  return rho - embedMaximallyMixed(partialTrace(rho, t.split), t.split) + t.embedded;
}

struct SpectralStep {
  HermitianMatrix rho;
  double dLambda = 0.0;
};

SpectralStep spectralStep(const HermitianMatrix& rhoPrime, const SpectralConstraint& c) {
  const Eigh e = eigh(hermitianPart(rhoPrime));
  Eigen::VectorXd lambda;
  if (c.mode == SpectralConstraint::Mode::Spectra) {
    if (c.spectrum.size() != e.values.size())
      throw Error(ErrorCode::InvalidInput, "prescribed spectrum does not match the matrix dimension");
    lambda = c.spectrum;
  } else {
    lambda = Eigen::VectorXd::Zero(e.values.size());
    const Eigen::Index r = std::min<Eigen::Index>(c.rank, e.values.size());
    lambda.head(r) = e.values.head(r).cwiseMax(0.0);
    const double s = lambda.sum();
    if (!(s > 0.0)) throw Error(ErrorCode::DegenerateIterate, "no positive eigenvalue to keep");
    lambda /= s;
  }
  return {hermitianPart(e.vectors * lambda.asDiagonal() * e.vectors.adjoint()), (e.values - lambda).norm()};
}

class Trajectory {
 public:
  Trajectory(ConvergenceReport& r, std::size_t cap) : r_(r), cap_(std::max<std::size_t>(cap, 2)) {}

  void record(int n, double dm, double dl) {
    last_ = {n, dm, dl};
    if ((n - 1) % stride_ != 0) return;
    push(n, dm, dl);
    if (r_.steps.size() >= cap_) decimate();
  }

  // The final iterate is always present.
  void finish() {
    if (last_.n > 0 && (r_.steps.empty() || r_.steps.back() != last_.n)) push(last_.n, last_.dm, last_.dl);
  }

 private:
  void push(int n, double dm, double dl) {
    r_.steps.push_back(n);
    r_.dM.push_back(dm);
    r_.dLambda.push_back(dl);
    r_.dT.push_back(std::hypot(dm, dl));
  }

  void decimate() {
    auto halve = [](auto& v) {
      std::size_t j = 0;
      for (std::size_t i = 0; i < v.size(); i += 2) v[j++] = v[i];
      v.resize(j);
    };
    halve(r_.steps);
    halve(r_.dM);
    halve(r_.dLambda);
    halve(r_.dT);
    stride_ *= 2;
  }

  struct Point {
    int n = 0;
    double dm = 0.0, dl = 0.0;
  };
  ConvergenceReport& r_;
  std::size_t cap_;
  int stride_ = 1;
  Point last_;
};

template <typename MarginalPass>
SolveResult run(const MarginalSpec& spec, const SpectralConstraint& constraint, const SolveOptions& options,
                RngSeed seed, MarginalPass pass) {
  spec.validate();
  constraint.validate(spec.dim());
  if (!(options.epsilon > 0.0)) throw Error(ErrorCode::InvalidInput, "epsilon must be positive");
  if (options.maxIterations < 1) throw Error(ErrorCode::InvalidInput, "maxIterations must be positive");
  const auto start = std::chrono::steady_clock::now();
  const std::vector<CompiledTarget> targets = compile(spec);

  HermitianMatrix rho;
  if (options.seed == SeedKind::MaximallyMixed) {
    rho = maximallyMixed(spec.dims()).matrix();
  } else {
    Rng rng = makeRng(seed);
    rho = randomMixedState(spec.dims(), rng).matrix();
  }

  ConvergenceReport report;
  Trajectory traj(report, options.maxTrajectoryPoints);
  for (int n = 1; n <= options.maxIterations; ++n) {
    const HermitianMatrix rhoPrime = pass(rho, targets, n);
    SpectralStep st = spectralStep(rhoPrime, constraint);
    double sq = 0.0;
    for (const auto& t : targets) sq += (partialTrace(st.rho, t.split) - t.sigma).squaredNorm();
    const double dm = targets.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(targets.size()));
    traj.record(n, dm, st.dLambda);
    rho = std::move(st.rho);
    report.iterations = n;
    const double dt = std::hypot(dm, st.dLambda);
    if (options.progress) options.progress(n, dt);
    if (dt <= options.epsilon) {
      report.converged = true;
      break;
    }
  }
  traj.finish();
  report.runtimeSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {QuantumState(rho, spec.dims()), std::move(report)};
}

}  // namespace

HermitianMatrix imposeMarginal(const HermitianMatrix& rho, const Dims& dims, const Subsystems& subset,
                               const HermitianMatrix& sigma) {
  SubsystemSplit split(dims, subset);
  if (rho.rows() != split.fullDim() || rho.cols() != split.fullDim())
    throw Error(ErrorCode::InvalidInput, "imposeMarginal: matrix does not match subsystem dims");
  if (sigma.rows() != split.keptDim() || sigma.cols() != split.keptDim())
    throw Error(ErrorCode::InvalidInput, "imposeMarginal: marginal does not match subset dims");
  return rho - embedMaximallyMixed(partialTrace(rho, split), split) + embedMaximallyMixed(sigma, split);
}

HermitianMatrix imposeAll(const HermitianMatrix& rho, const MarginalSpec& spec) {
  if (rho.rows() != spec.dim() || rho.cols() != spec.dim())
    throw Error(ErrorCode::InvalidInput, "imposeAll: matrix does not match the spec dimension");
  HermitianMatrix out = rho;
  for (const auto& t : compile(spec)) out = applyTarget(out, t);
  return out;
}

HermitianMatrix imposeSpectrum(const HermitianMatrix& rhoPrime, const SpectralConstraint& constraint) {
  constraint.validate(rhoPrime.rows());
  return spectralStep(rhoPrime, constraint).rho;
}

SolveResult solve(const MarginalSpec& spec, const SpectralConstraint& constraint, const SolveOptions& options,
                  RngSeed seed) {
  return run(spec, constraint, options, seed,
             [](const HermitianMatrix& rho, const std::vector<CompiledTarget>& targets, int) {
               HermitianMatrix out = rho;
               for (const auto& t : targets) out = applyTarget(out, t);
               return out;
             });
}

SolveResult solveAccelerated(const MarginalSpec& spec, const SpectralConstraint& constraint,
                             const HalpernSchedule& schedule, const SolveOptions& options, RngSeed seed) {
  schedule.validate();
  return run(spec, constraint, options, seed,
             [&schedule](const HermitianMatrix& rho, const std::vector<CompiledTarget>& targets, int n) {
               const double an = schedule.anchorAt(n), bn = schedule.betaAt(n);
               const double keep = schedule.mu * an;
               HermitianMatrix x = rho;
               for (const auto& t : targets) {
                 const HermitianMatrix z = (applyTarget(x, t) - x) / schedule.alpha;
                 const HermitianMatrix y = x + schedule.alpha * (z + bn * z);
                 x = keep * x + (1.0 - keep) * y;
               }
               return x;
             });
}

std::vector<NpmRow> npmSweep(int parties, int k, int localDim, const std::vector<int>& mValues, int trials,
                             GeneratorKind generator, RngSeed seed, unsigned threads) {
  if (!(k >= 1 && k < parties)) throw Error(ErrorCode::InvalidInput, "npmSweep needs 1 <= k < N");
  if (trials < 1) throw Error(ErrorCode::InvalidInput, "npmSweep needs at least one trial");
  const std::vector<Subsystems> subsets = allSubsets(parties, k);
  const Dims dims(static_cast<std::size_t>(parties), localDim);
  const Eigen::Index dim = totalDim(dims);
  std::vector<NpmRow> rows;
  for (std::size_t mi = 0; mi < mValues.size(); ++mi) {
    const int m = mValues[mi];
    if (m < 0 || m > static_cast<int>(subsets.size()))
      throw Error(ErrorCode::InvalidInput, "m = " + std::to_string(m) + " exceeds the number of k-subsets");
    std::vector<char> psd(static_cast<std::size_t>(trials), 0);
    parallelFor(psd.size(), threads, [&](std::size_t t) {
      Rng rng = makeRng(deriveSeed(seed, mi * static_cast<std::size_t>(trials) + t));
      const QuantumState sigma = randomState(dims, generator, rng);
      std::vector<Subsystems> chosen = subsets;
      std::shuffle(chosen.begin(), chosen.end(), rng);
      chosen.resize(static_cast<std::size_t>(m));
      const MarginalSpec spec = MarginalSpec::fromGlobalState(sigma.matrix(), parties, localDim, chosen);
      const HermitianMatrix out = imposeAll(HermitianMatrix::Identity(dim, dim) / static_cast<double>(dim), spec);
      psd[t] = minEigenvalue(hermitianPart(out)) >= -1e-10;
    });
    rows.push_back({m, static_cast<int>(std::count(psd.begin(), psd.end(), 1)), trials});
  }
  return rows;
}

}  // namespace qimpose
