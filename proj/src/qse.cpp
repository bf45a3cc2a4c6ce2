#include "qimpose/qse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "qimpose/parallel.hpp"

namespace qimpose {

namespace {

double traceProduct(const HermitianMatrix& a, const HermitianMatrix& b) {
  return a.cwiseProduct(b.transpose()).sum().real();
}

}  // namespace

HermitianMatrix imposeOne(const HermitianMatrix& rho, const ImpositionTarget& target) {
  const HermitianMatrix& e = target.effect;
  if (rho.rows() != e.rows() || rho.cols() != e.cols())
    throw Error(ErrorCode::InvalidInput, "imposeOne: state and effect dims differ");
  const double norm2 = e.squaredNorm();
  if (norm2 == 0.0) throw Error(ErrorCode::DegenerateEffect, "imposeOne: Tr(E^2) == 0");
  return rho + ((target.probability - traceProduct(rho, e)) / norm2) * e;
}

HermitianMatrix imposePVM(const HermitianMatrix& rho, const MeasurementSet& pvm, const Eigen::VectorXd& p) {
  if (pvm.kind() != MeasurementKind::PVM)
    throw Error(ErrorCode::InvalidMeasurementKind, "imposePVM needs a PVM");
  return imposeMeasurement(rho, pvm, p);
}

HermitianMatrix imposeMeasurement(const HermitianMatrix& rho, const MeasurementSet& m, const Eigen::VectorXd& f) {
  if (static_cast<std::size_t>(f.size()) != m.size())
    throw Error(ErrorCode::InvalidInput, "frequency vector length does not match effect count");
  if (rho.rows() != m.dim()) throw Error(ErrorCode::InvalidInput, "state and measurement dims differ");
  if (m.kind() == MeasurementKind::POVM) {
    HermitianMatrix out = rho;
    for (std::size_t i = 0; i < m.size(); ++i) out = imposeOne(out, {m[i], f(static_cast<Eigen::Index>(i))});
    return out;
  }
  HermitianMatrix out = rho;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double norm2 = m[i].squaredNorm();
    if (norm2 == 0.0) throw Error(ErrorCode::DegenerateEffect, "effect with Tr(E^2) == 0");
    out += ((f(static_cast<Eigen::Index>(i)) - traceProduct(rho, m[i])) / norm2) * m[i];
  }
  return out;
}

void EstimationProblem::validate() const {
  if (measurements.empty()) throw Error(ErrorCode::InvalidInput, "no measurements");
  if (measurements.size() != frequencies.size())
    throw Error(ErrorCode::InvalidInput, "need one frequency vector per measurement");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(ErrorCode::InvalidInput, "epsilon must lie in [0, 1]");
  if (maxIterations < 1) throw Error(ErrorCode::InvalidInput, "maxIterations must be positive");
  const Eigen::Index d = measurements.front().dim();
  if (!dims.empty() && totalDim(dims) != d) throw Error(ErrorCode::InvalidInput, "dims do not match measurements");
  for (std::size_t i = 0; i < measurements.size(); ++i) {
    const auto& m = measurements[i];
    const auto& f = frequencies[i];
    if (m.dim() != d) throw Error(ErrorCode::InvalidInput, "measurements act on different dimensions");
    if (static_cast<std::size_t>(f.size()) != m.size())
      throw Error(ErrorCode::InvalidInput, "frequency vector " + std::to_string(i) + " has the wrong length");
    if (m.kind() == MeasurementKind::ObservableBasis) {
      if ((f.array().abs() > 1.0 + 1e-9).any())
        throw Error(ErrorCode::InvalidInput, "expectation values must lie in [-1, 1]");
      continue;
    }
    if ((f.array() < 0.0).any()) throw Error(ErrorCode::InvalidInput, "negative frequency");
    if (m.kind() == MeasurementKind::PVM && std::abs(f.sum() - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidInput, "PVM frequencies " + std::to_string(i) + " do not sum to 1");
  }
}

EstimationResult estimate(const EstimationProblem& problem, const IterateObserver& observer) {
  problem.validate();
  const Eigen::Index d = problem.measurements.front().dim();
  auto sweep = [&](HermitianMatrix rho) {
    for (std::size_t i = 0; i < problem.measurements.size(); ++i)
      rho = imposeMeasurement(rho, problem.measurements[i], problem.frequencies[i]);
    return hermitianPart(rho);
  };

  HermitianMatrix rho = sweep(HermitianMatrix::Identity(d, d) / static_cast<double>(d));
  int iterations = 1;
  if (observer) observer(iterations, rho);
  double residual = std::numeric_limits<double>::infinity();
  bool converged = false;
  while (iterations < problem.maxIterations) {
    HermitianMatrix next = sweep(rho);
    residual = hsDistance(next, rho);
    rho = std::move(next);
    ++iterations;
    if (observer) observer(iterations, rho);
    if (residual <= problem.epsilon) {
      converged = true;
      break;
    }
  }
  return {nearestDensityMatrix(rho, problem.dims), rho, iterations, residual, converged};
}

QuantumState nearestDensityMatrix(const HermitianMatrix& rho, const Dims& dims) {
  const Eigh e = eigh(hermitianPart(rho));
  const Eigen::VectorXd& l = e.values;
  auto excess = [&](double x) { return (l.array() - x).max(0.0).sum() - 1.0; };

  // excess is continuous and decreasing; positive at the lower end for d >= 2.
  double lo = l.minCoeff() - 1.0, hi = l.maxCoeff();
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  // Exact shift on the active set found by bisection.
  double x = 0.5 * (lo + hi);
  const Eigen::Index active = (l.array() > x).count();
  if (active > 0) x = (l.head(active).sum() - 1.0) / static_cast<double>(active);
  Eigen::VectorXd clipped = (l.array() - x).max(0.0);
  clipped /= clipped.sum();

  HermitianMatrix out = e.vectors * clipped.asDiagonal() * e.vectors.adjoint();
  Dims shape = dims.empty() ? Dims{static_cast<int>(rho.rows())} : dims;
  return QuantumState(hermitianPart(out), std::move(shape));
}

HermitianMatrix applyWhiteNoise(const HermitianMatrix& rho, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorCode::InvalidInput, "white noise must lie in [0, 1]");
  const Eigen::Index d = rho.rows();
  return (1.0 - lambda) * rho + (lambda / static_cast<double>(d)) * HermitianMatrix::Identity(d, d);
}

std::vector<Eigen::VectorXd> simulateFrequencies(const QuantumState& generator,
                                                 const std::vector<MeasurementSet>& measurements,
                                                 const NoiseModel& noise, Rng& rng) {
  const HermitianMatrix noisy = applyWhiteNoise(generator.matrix(), noise.whiteNoise);
  if (noise.samplesPerBasis && *noise.samplesPerBasis == 0)
    throw Error(ErrorCode::InvalidInput, "samplesPerBasis must be positive");
  std::vector<Eigen::VectorXd> out;
  out.reserve(measurements.size());
  for (const auto& m : measurements) {
    Eigen::VectorXd p = probabilities(noisy, m);
    if (!noise.samplesPerBasis) {
      out.push_back(std::move(p));
      continue;
    }
    if (m.kind() == MeasurementKind::ObservableBasis)
      throw Error(ErrorCode::InvalidInput, "finite statistics are not defined for observable bases");
    p = p.cwiseMax(0.0);
    const double n = static_cast<double>(*noise.samplesPerBasis);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(p.size());
    if (noise.sampling == SamplingMode::Multinomial) {
      std::discrete_distribution<Eigen::Index> pick(p.data(), p.data() + p.size());
      for (std::uint64_t s = 0; s < *noise.samplesPerBasis; ++s) counts(pick(rng)) += 1.0;
    } else {
      do {
        for (Eigen::Index j = 0; j < p.size(); ++j) {
          if (p(j) <= 0.0) {
            counts(j) = 0.0;
            continue;
          }
          std::poisson_distribution<long long> poisson(n * p(j));
          counts(j) = static_cast<double>(poisson(rng));
        }
      } while (counts.sum() == 0.0);
    }
    out.push_back(counts / counts.sum());
  }
  return out;
}

std::vector<Eigen::VectorXd> simulateFrequencies(const QuantumState& generator,
                                                 const std::vector<MeasurementSet>& measurements,
                                                 const NoiseModel& noise, RngSeed seed) {
  Rng rng = makeRng(seed);
  return simulateFrequencies(generator, measurements, noise, rng);
}

FidelityStats summarize(std::vector<double> fidelities, int notConverged) {
  FidelityStats s;
  const double n = static_cast<double>(fidelities.size());
  if (fidelities.empty()) return s;
  s.meanFidelity = std::accumulate(fidelities.begin(), fidelities.end(), 0.0) / n;
  if (fidelities.size() > 1) {
    double ss = 0.0;
    for (double f : fidelities) ss += (f - s.meanFidelity) * (f - s.meanFidelity);
    s.stdError = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  s.fidelities = std::move(fidelities);
  s.notConverged = notConverged;
  return s;
}

namespace {

template <typename DrawGenerator>
FidelityStats runTrials(const std::vector<MeasurementSet>& measurements, const Dims& dims, const NoiseModel& noise,
                        int trials, RngSeed seed, const EstimationSettings& settings, unsigned threads,
                        DrawGenerator draw) {
  if (trials < 2) throw Error(ErrorCode::InvalidInput, "need at least two trials");
  std::vector<double> fid(static_cast<std::size_t>(trials));
  std::vector<char> conv(static_cast<std::size_t>(trials));
  parallelFor(fid.size(), threads, [&](std::size_t t) {
    Rng rng = makeRng(deriveSeed(seed, t));
    const QuantumState gen = draw(rng);
    EstimationProblem problem{measurements, simulateFrequencies(gen, measurements, noise, rng), settings.epsilon,
                              settings.maxIterations, dims};
    const EstimationResult r = estimate(problem);
    fid[t] = fidelity(r.state, gen);
    conv[t] = r.converged;
  });
  return summarize(std::move(fid), static_cast<int>(std::count(conv.begin(), conv.end(), 0)));
}

}  // namespace

FidelityStats bootstrapFidelity(const QuantumState& generator, const std::vector<MeasurementSet>& measurements,
                                const NoiseModel& noise, int trials, RngSeed seed,
                                const EstimationSettings& settings, unsigned threads) {
  return runTrials(measurements, generator.dims(), noise, trials, seed, settings, threads,
                   [&](Rng&) { return generator; });
}

FidelityStats benchmarkFidelity(const Dims& dims, const std::vector<MeasurementSet>& measurements,
                                GeneratorKind kind, const NoiseModel& noise, int trials, RngSeed seed,
                                const EstimationSettings& settings, unsigned threads) {
  return runTrials(measurements, dims, noise, trials, seed, settings, threads, [&](Rng& rng) { return randomState(dims, kind, rng); });
}

}  // namespace qimpose
