#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qimpose/mathcore.hpp"

namespace qimpose {

struct MarginalTarget {
  Subsystems subset;
  HermitianMatrix state;  // density matrix on `subset`, ascending party order
};

struct MarginalSpec {
  int parties = 0;
  int localDim = 0;
  std::vector<MarginalTarget> targets;

  Dims dims() const { return Dims(static_cast<std::size_t>(parties), localDim); }
  long long dim() const { return totalDim(dims()); }
  void validate() const;

  // Targets are the marginals of `global` on each subset.
  static MarginalSpec fromGlobalState(const HermitianMatrix& global, int parties, int localDim,
                                      const std::vector<Subsystems>& subsets);
  // Every target is the maximally mixed state, e.g. the AME conditions.
  static MarginalSpec maximallyMixed(int parties, int localDim, const std::vector<Subsystems>& subsets);
};

// All k-subsets of {0..n-1} in lexicographic order.
std::vector<Subsystems> allSubsets(int n, int k);

struct SpectralConstraint {
  enum class Mode { Spectra, Rank };

  Mode mode = Mode::Rank;
  Eigen::VectorXd spectrum;  // descending, nonnegative, sums to 1 (Spectra)
  int rank = 1;              // Rank

  static SpectralConstraint spectra(Eigen::VectorXd lambda);
  static SpectralConstraint withRank(int r);
  void validate(long long dim) const;
};

enum class BetaRule { Squared, Zero };

// alpha_n = (n / 1e5 + 1)^(-exponent) unless `anchor` pins it to a constant;
// beta_n = alpha_n^2 or 0.
struct HalpernSchedule {
  double alpha = 1.0;
  double mu = 5e-5;
  double exponent = 50.0;
  BetaRule beta = BetaRule::Squared;
  std::optional<double> anchor;

  double anchorAt(int n) const;
  double betaAt(int n) const;
  void validate() const;
};

struct ConvergenceReport {
  int iterations = 0;
  std::vector<int> steps;  // iteration index of each recorded point
  std::vector<double> dM;
  std::vector<double> dLambda;
  std::vector<double> dT;
  double runtimeSeconds = 0.0;
  bool converged = false;
};

// Q(rho) = rho - Tr_{J^c}(rho) ⊗ I/d_{J^c} + sigma_J ⊗ I/d_{J^c}.
HermitianMatrix imposeMarginal(const HermitianMatrix& rho, const Dims& dims, const Subsystems& subset,
                               const HermitianMatrix& sigma);

// Sequential composition over the targets in order.
HermitianMatrix imposeAll(const HermitianMatrix& rho, const MarginalSpec& spec);

// U Lambda U^dagger with U from the descending eigenbasis of rhoPrime. Rank mode keeps
// the r largest positive eigenvalues and renormalizes.
HermitianMatrix imposeSpectrum(const HermitianMatrix& rhoPrime, const SpectralConstraint& constraint);

enum class SeedKind { HilbertSchmidt, MaximallyMixed };

struct SolveOptions {
  double epsilon = 1e-6;
  int maxIterations = 50000;
  SeedKind seed = SeedKind::HilbertSchmidt;
  std::size_t maxTrajectoryPoints = 10000;
  std::function<void(int iteration, double dT)> progress;  // optional, every iteration
};

struct SolveResult {
  QuantumState state;  // rho'' of the last iteration
  ConvergenceReport report;
};

SolveResult solve(const MarginalSpec& spec, const SpectralConstraint& constraint, const SolveOptions& options,
                  RngSeed seed);

// Per target: z = (Q_i(rho) - rho) / alpha, z' = (1 + beta_n) z, y = rho + alpha z',
// rho <- mu alpha_n rho + (1 - mu alpha_n) y; then the spectral step.
SolveResult solveAccelerated(const MarginalSpec& spec, const SpectralConstraint& constraint,
                             const HalpernSchedule& schedule, const SolveOptions& options, RngSeed seed);

struct NpmRow {
  int m = 0;
  int psdCount = 0;
  int trials = 0;
};

// For each m: draw generators, pick m distinct k-subsets at random, impose their
// marginals on the maximally mixed state and count PSD outcomes (min eigenvalue >= -1e-10).
std::vector<NpmRow> npmSweep(int parties, int k, int localDim, const std::vector<int>& mValues, int trials,
                             GeneratorKind generator, RngSeed seed, unsigned threads = 1);

}  // namespace qimpose
