#include "qimpose/mathcore.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace qimpose {

std::string_view toString(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::InvalidSubsystem: return "InvalidSubsystem";
    case ErrorCode::UnsupportedDimension: return "UnsupportedDimension";
    case ErrorCode::DegenerateEffect: return "DegenerateEffect";
    case ErrorCode::InvalidMeasurementKind: return "InvalidMeasurementKind";
    case ErrorCode::TooLargeScenario: return "TooLargeScenario";
    case ErrorCode::UnsupportedOutcomes: return "UnsupportedOutcomes";
    case ErrorCode::NotViolatedAtAnyEfficiency: return "NotViolatedAtAnyEfficiency";
    case ErrorCode::DegenerateIterate: return "DegenerateIterate";
  }
  return "Error";
}

long long totalDim(const Dims& dims) {
  long long n = 1;
  for (int d : dims) {
    if (d < 1) throw Error(ErrorCode::InvalidInput, "subsystem dimension must be positive");
    n *= d;
  }
  return n;
}

void requireHermitian(const HermitianMatrix& m, const char* what) {
  if (!isHermitian(m)) throw Error(ErrorCode::InvalidInput, std::string(what) + ": matrix is not Hermitian");
}

namespace {

void validateState(const HermitianMatrix& rho, const Dims& dims) {
  if (rho.rows() == 0 || rho.rows() != rho.cols())
    throw Error(ErrorCode::InvalidState, "density matrix must be square and nonempty");
  if (totalDim(dims) != rho.rows())
    throw Error(ErrorCode::InvalidState, "subsystem dims do not multiply to the matrix dimension");
  if (!isHermitian(rho)) throw Error(ErrorCode::InvalidState, "density matrix is not Hermitian");
  const Complex tr = rho.trace();
  if (std::abs(tr.real() - 1.0) > kTraceTolerance || std::abs(tr.imag()) > kTraceTolerance)
    throw Error(ErrorCode::InvalidState, "trace is " + std::to_string(tr.real()) + ", expected 1");
  const double lmin = minEigenvalue(rho);
  if (lmin < -kPsdSlack)
    throw Error(ErrorCode::InvalidState, "smallest eigenvalue " + std::to_string(lmin) + " is negative");
}

}  // namespace

QuantumState::QuantumState(HermitianMatrix rho) : QuantumState(rho, Dims{static_cast<int>(rho.rows())}) {}

QuantumState::QuantumState(HermitianMatrix rho, Dims dims) : rho_(std::move(rho)), dims_(std::move(dims)) {
  validateState(rho_, dims_);
}

double QuantumState::purity() const { return (rho_ * rho_).trace().real(); }

MeasurementSet::MeasurementSet(std::vector<HermitianMatrix> effects, MeasurementKind kind)
    : effects_(std::move(effects)), kind_(kind) {
  if (effects_.empty()) throw Error(ErrorCode::InvalidInput, "measurement set has no effects");
  const Eigen::Index d = effects_.front().rows();
  for (const auto& e : effects_) {
    if (e.rows() != d || e.cols() != d)
      throw Error(ErrorCode::InvalidInput, "measurement effects differ in dimension");
    requireHermitian(e, "measurement effect");
  }
  if (kind_ == MeasurementKind::ObservableBasis) {
    for (std::size_t i = 0; i < effects_.size(); ++i) {
      if (effects_[i].squaredNorm() == 0.0)
        throw Error(ErrorCode::DegenerateEffect, "observable with zero Hilbert-Schmidt norm");
      for (std::size_t j = i + 1; j < effects_.size(); ++j)
        if (std::abs((effects_[i] * effects_[j]).trace()) > 1e-8)
          throw Error(ErrorCode::InvalidInput, "observables are not Hilbert-Schmidt orthogonal");
    }
    return;
  }
  HermitianMatrix sum = HermitianMatrix::Zero(d, d);
  for (const auto& e : effects_) {
    if (minEigenvalue(e) < -kPsdSlack) throw Error(ErrorCode::InvalidInput, "effect is not PSD");
    sum += e;
  }
  if ((sum - HermitianMatrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
    throw Error(ErrorCode::InvalidInput, "effects do not sum to identity");
  if (kind_ == MeasurementKind::PVM) {
    for (std::size_t i = 0; i < effects_.size(); ++i)
      for (std::size_t j = i; j < effects_.size(); ++j) {
        const HermitianMatrix p = effects_[i] * effects_[j];
        const double err = i == j ? (p - effects_[i]).cwiseAbs().maxCoeff() : p.cwiseAbs().maxCoeff();
        if (err > 1e-8) throw Error(ErrorCode::InvalidInput, "PVM effects are not orthogonal projectors");
      }
  }
}

MeasurementSet MeasurementSet::fromBasis(const Eigen::MatrixXcd& u) {
  if (u.rows() == 0 || u.rows() != u.cols()) throw Error(ErrorCode::InvalidInput, "basis matrix must be square");
  const Eigen::Index d = u.rows();
  if ((u.adjoint() * u - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
    throw Error(ErrorCode::InvalidInput, "basis columns are not orthonormal");
  std::vector<HermitianMatrix> effects;
  effects.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) effects.push_back(u.col(i) * u.col(i).adjoint());
  return MeasurementSet(Trusted{}, std::move(effects), MeasurementKind::PVM);
}

Eigen::VectorXd probabilities(const HermitianMatrix& rho, const MeasurementSet& m) {
  if (rho.rows() != m.dim()) throw Error(ErrorCode::InvalidInput, "state and measurement dims differ");
  Eigen::VectorXd p(static_cast<Eigen::Index>(m.size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    p(static_cast<Eigen::Index>(i)) = (rho.cwiseProduct(m[i].transpose())).sum().real();
  return p;
}

SubsystemSplit::SubsystemSplit(const Dims& dims, Subsystems keep) : dims_(dims), keep_(std::move(keep)) {
  const int n = static_cast<int>(dims_.size());
  if (keep_.empty()) throw Error(ErrorCode::InvalidSubsystem, "kept subsystem set is empty");
  std::sort(keep_.begin(), keep_.end());
  if (std::adjacent_find(keep_.begin(), keep_.end()) != keep_.end())
    throw Error(ErrorCode::InvalidSubsystem, "duplicate subsystem index");
  for (int k : keep_)
    if (k < 0 || k >= n)
      throw Error(ErrorCode::InvalidSubsystem, "subsystem index " + std::to_string(k) + " out of range");
  totalDim(dims_);

  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (int k : keep_) kept[static_cast<std::size_t>(k)] = true;
  for (int i = 0; i < n; ++i) (kept[i] ? keptDim_ : tracedDim_) *= dims_[i];

  table_.resize(static_cast<std::size_t>(keptDim_ * tracedDim_));
  std::vector<int> digit(static_cast<std::size_t>(n), 0);
  for (Eigen::Index full = 0; full < keptDim_ * tracedDim_; ++full) {
    Eigen::Index ki = 0, ti = 0;
    for (int i = 0; i < n; ++i) {
      if (kept[i]) ki = ki * dims_[i] + digit[i];
      else ti = ti * dims_[i] + digit[i];
    }
    table_[static_cast<std::size_t>(ti * keptDim_ + ki)] = full;
    for (int i = n - 1; i >= 0; --i) {
      if (++digit[i] < dims_[i]) break;
      digit[i] = 0;
    }
  }
}

Dims SubsystemSplit::keptDims() const {
  Dims out;
  for (int k : keep_) out.push_back(dims_[static_cast<std::size_t>(k)]);
  return out;
}

QuantumState partialTrace(const QuantumState& state, const Subsystems& keep) {
  SubsystemSplit split(state.dims(), keep);
  return QuantumState(partialTrace(state.matrix(), split), split.keptDims());
}

HermitianMatrix kron(const std::vector<HermitianMatrix>& factors) {
  HermitianMatrix out = HermitianMatrix::Identity(1, 1);
  for (const auto& f : factors) out = kron(out, f);
  return out;
}

Eigh eigh(const HermitianMatrix& m) {
  requireHermitian(m, "eigh");
  Eigen::SelfAdjointEigenSolver<HermitianMatrix> es(m);
  if (es.info() != Eigen::Success) throw Error(ErrorCode::InvalidInput, "eigh: decomposition failed");
  return {es.eigenvalues().reverse(), es.eigenvectors().rowwise().reverse()};
}

double minEigenvalue(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<HermitianMatrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

namespace {

// Eigenvalues at roundoff level are zeroed so sqrt does not amplify them.
HermitianMatrix psdSqrt(const HermitianMatrix& m) {
  Eigen::SelfAdjointEigenSolver<HermitianMatrix> es(m);
  const double floor = 1e-14 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::VectorXd s = es.eigenvalues().unaryExpr([floor](double x) { return x > floor ? std::sqrt(x) : 0.0; });
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double fidelity(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::InvalidInput, "fidelity: dimension mismatch");
  requireHermitian(a, "fidelity");
  requireHermitian(b, "fidelity");
  if (minEigenvalue(a) < -kPsdSlack || minEigenvalue(b) < -kPsdSlack)
    throw Error(ErrorCode::InvalidInput, "fidelity: argument is not PSD");
  // Tr sqrt(sqrt(b) a sqrt(b)) equals the trace norm of sqrt(a) sqrt(b).
  const Eigen::MatrixXcd prod = psdSqrt(a) * psdSqrt(b);
  const double s = Eigen::JacobiSVD<Eigen::MatrixXcd>(prod).singularValues().sum();
  return std::clamp(s * s, 0.0, 1.0);
}

double fidelity(const QuantumState& a, const QuantumState& b) { return fidelity(a.matrix(), b.matrix()); }

namespace {

Eigen::MatrixXcd ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Eigen::MatrixXcd z(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = g(rng);
      z(i, j) = Complex(re, g(rng));
    }
  return z;
}

}  // namespace

QuantumState randomPureState(const Dims& dims, Rng& rng) {
  const Eigen::VectorXcd psi = ginibre(totalDim(dims), 1, rng).col(0);
  return pureState(psi, dims);
}

QuantumState randomPureState(const Dims& dims, RngSeed seed) {
  Rng rng = makeRng(seed);
  return randomPureState(dims, rng);
}

QuantumState randomMixedState(const Dims& dims, Rng& rng) {
  const Eigen::Index d = totalDim(dims);
  const Eigen::MatrixXcd g = ginibre(d, d, rng);
  HermitianMatrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return QuantumState(hermitianPart(rho), dims);
}

QuantumState randomMixedState(const Dims& dims, RngSeed seed) {
  Rng rng = makeRng(seed);
  return randomMixedState(dims, rng);
}

QuantumState randomState(const Dims& dims, GeneratorKind kind, Rng& rng) {
  return kind == GeneratorKind::HaarPure ? randomPureState(dims, rng) : randomMixedState(dims, rng);
}

Eigen::MatrixXcd randomUnitary(Eigen::Index d, Rng& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(ginibre(d, d, rng));
  Eigen::MatrixXcd q = qr.householderQ();
  const Eigen::MatrixXcd& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < d; ++j) {
    const Complex rjj = r(j, j);
    q.col(j) *= rjj / std::abs(rjj);
  }
  return q;
}

QuantumState maximallyMixed(const Dims& dims) {
  const Eigen::Index d = totalDim(dims);
  return QuantumState(HermitianMatrix::Identity(d, d) / static_cast<double>(d), dims);
}

QuantumState pureState(const Eigen::VectorXcd& psi, Dims dims) {
  if (dims.empty()) dims = {static_cast<int>(psi.size())};
  const double n = psi.norm();
  if (n == 0.0) throw Error(ErrorCode::InvalidInput, "pureState: zero vector");
  const Eigen::VectorXcd v = psi / n;
  return QuantumState(v * v.adjoint(), std::move(dims));
}

}  // namespace qimpose
