#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qimpose/mathcore.hpp"

namespace qimpose {

struct ImpositionTarget {
  HermitianMatrix effect;
  double probability = 0.0;
};

// T(rho) = rho + (p - Tr(rho E)) E / Tr(E^2).
HermitianMatrix imposeOne(const HermitianMatrix& rho, const ImpositionTarget& target);

// Closed form of the composition over a PVM:
// rho + sum_j (p_j - Tr(rho E_j)) E_j / Tr(E_j^2).
HermitianMatrix imposePVM(const HermitianMatrix& rho, const MeasurementSet& pvm, const Eigen::VectorXd& p);

// One pass over every effect of `m`. PVMs and observable bases (both HS-orthogonal)
// use the closed form; POVMs are imposed effect by effect in order.
HermitianMatrix imposeMeasurement(const HermitianMatrix& rho, const MeasurementSet& m, const Eigen::VectorXd& f);

struct EstimationProblem {
  std::vector<MeasurementSet> measurements;
  // Probabilities per effect; expectation values in [-1, 1] for observable bases.
  std::vector<Eigen::VectorXd> frequencies;
  double epsilon = 1e-10;
  int maxIterations = 10000;
  Dims dims;  // empty means a single system

  void validate() const;
};

struct EstimationResult {
  QuantumState state;        // last iterate projected onto density matrices
  HermitianMatrix iterate;   // last raw iterate
  int iterations = 0;        // outer sweeps performed
  double residual = 0.0;     // hsDistance between the last two iterates
  bool converged = false;
};

using IterateObserver = std::function<void(int iteration, const HermitianMatrix& rho)>;

// Starts from I/d and sweeps the measurements in the given order until the
// change between sweeps is <= epsilon or maxIterations sweeps have run.
EstimationResult estimate(const EstimationProblem& problem, const IterateObserver& observer = {});

// Closest density matrix in Hilbert-Schmidt distance: U diag((lambda - x)^+) U^dagger
// with x chosen so the clipped spectrum sums to one.
QuantumState nearestDensityMatrix(const HermitianMatrix& rho, const Dims& dims = {});

enum class SamplingMode { Poisson, Multinomial };

struct NoiseModel {
  double whiteNoise = 0.0;                       // lambda
  std::optional<std::uint64_t> samplesPerBasis;  // empty = infinite statistics
  SamplingMode sampling = SamplingMode::Poisson;
};

HermitianMatrix applyWhiteNoise(const HermitianMatrix& rho, double lambda);

// Observable bases only support infinite statistics.
std::vector<Eigen::VectorXd> simulateFrequencies(const QuantumState& generator,
                                                 const std::vector<MeasurementSet>& measurements,
                                                 const NoiseModel& noise, Rng& rng);
std::vector<Eigen::VectorXd> simulateFrequencies(const QuantumState& generator,
                                                 const std::vector<MeasurementSet>& measurements,
                                                 const NoiseModel& noise, RngSeed seed);

struct EstimationSettings {
  double epsilon = 1e-10;
  int maxIterations = 10000;
};

struct FidelityStats {
  double meanFidelity = 0.0;
  double stdError = 0.0;  // sample standard deviation / sqrt(trials)
  std::vector<double> fidelities;
  int notConverged = 0;
};

FidelityStats summarize(std::vector<double> fidelities, int notConverged = 0);

// Repeated simulate + estimate against a fixed generator; trial t uses seed + t.
FidelityStats bootstrapFidelity(const QuantumState& generator, const std::vector<MeasurementSet>& measurements,
                                const NoiseModel& noise, int trials, RngSeed seed,
                                const EstimationSettings& settings = {}, unsigned threads = 1);

// Like bootstrapFidelity, but every trial draws a fresh generator from `kind`.
FidelityStats benchmarkFidelity(const Dims& dims, const std::vector<MeasurementSet>& measurements,
                                GeneratorKind kind, const NoiseModel& noise, int trials, RngSeed seed,
                                const EstimationSettings& settings = {}, unsigned threads = 1);

}  // namespace qimpose
