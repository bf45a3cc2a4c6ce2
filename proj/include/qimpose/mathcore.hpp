#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "qimpose/error.hpp"

namespace qimpose {

using Complex = std::complex<double>;

// Dense complex square matrix. Hermiticity is checked where an operation
// requires it; intermediate iterates (e.g. non-PSD QMP steps) live here too.
using HermitianMatrix = Eigen::MatrixXcd;

using Dims = std::vector<int>;
using Subsystems = std::vector<int>;

inline constexpr double kHermitianTolerance = 1e-12;
inline constexpr double kTraceTolerance = 1e-10;
inline constexpr double kPsdSlack = 1e-10;

struct RngSeed {
  std::uint64_t value = 0;
};

using Rng = std::mt19937_64;

inline Rng makeRng(RngSeed seed) { return Rng(seed.value); }

// Per-trial stream used by every batch driver.
inline RngSeed deriveSeed(RngSeed base, std::uint64_t index) { return {base.value + index}; }

long long totalDim(const Dims& dims);

template <typename Derived>
bool isHermitian(const Eigen::MatrixBase<Derived>& m, double tol = kHermitianTolerance) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, static_cast<double>(m.cwiseAbs().maxCoeff()));
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

template <typename Derived>
typename Derived::PlainObject hermitianPart(const Eigen::MatrixBase<Derived>& m) {
  return (m + m.adjoint()) / 2.0;
}

void requireHermitian(const HermitianMatrix& m, const char* what);

class QuantumState {
 public:
  // Single system of dimension rho.rows().
  explicit QuantumState(HermitianMatrix rho);
  QuantumState(HermitianMatrix rho, Dims dims);

  const HermitianMatrix& matrix() const { return rho_; }
  const Dims& dims() const { return dims_; }
  Eigen::Index dim() const { return rho_.rows(); }
  double purity() const;

 private:
  HermitianMatrix rho_;
  Dims dims_;
};

enum class MeasurementKind { PVM, POVM, ObservableBasis };

class MeasurementSet {
 public:
  MeasurementSet(std::vector<HermitianMatrix> effects, MeasurementKind kind);

  // Rank-one PVM {|u_i><u_i|} from the columns of a unitary. Only U^dagger U == I
  // is checked, which implies every PVM invariant.
  static MeasurementSet fromBasis(const Eigen::MatrixXcd& u);

  const std::vector<HermitianMatrix>& effects() const { return effects_; }
  const HermitianMatrix& operator[](std::size_t i) const { return effects_[i]; }
  std::size_t size() const { return effects_.size(); }
  Eigen::Index dim() const { return effects_.front().rows(); }
  MeasurementKind kind() const { return kind_; }

 private:
  struct Trusted {};
  MeasurementSet(Trusted, std::vector<HermitianMatrix> effects, MeasurementKind kind)
      : effects_(std::move(effects)), kind_(kind) {}

  std::vector<HermitianMatrix> effects_;
  MeasurementKind kind_;
};

// Born probabilities Tr(rho E_i); for ObservableBasis these are expectation values.
Eigen::VectorXd probabilities(const HermitianMatrix& rho, const MeasurementSet& m);

// Index bookkeeping for splitting a tensor-product space into kept and traced
// factors. Kept subsystems are sorted ascending; the kept index is the row-major
// multi-index over them, likewise for the traced complement.
class SubsystemSplit {
 public:
  SubsystemSplit(const Dims& dims, Subsystems keep);

  Eigen::Index fullDim() const { return keptDim_ * tracedDim_; }
  Eigen::Index keptDim() const { return keptDim_; }
  Eigen::Index tracedDim() const { return tracedDim_; }
  const Subsystems& kept() const { return keep_; }
  Dims keptDims() const;

  Eigen::Index fullIndex(Eigen::Index kept, Eigen::Index traced) const {
    return table_[static_cast<std::size_t>(traced * keptDim_ + kept)];
  }

 private:
  Dims dims_;
  Subsystems keep_;
  Eigen::Index keptDim_ = 1;
  Eigen::Index tracedDim_ = 1;
  std::vector<Eigen::Index> table_;
};

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> partialTrace(
    const Eigen::MatrixBase<Derived>& m, const SubsystemSplit& split) {
  using Result = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (m.rows() != split.fullDim() || m.cols() != split.fullDim())
    throw Error(ErrorCode::InvalidInput, "partialTrace: matrix does not match subsystem dims");
  const Eigen::Index k = split.keptDim();
  Result out = Result::Zero(k, k);
  for (Eigen::Index t = 0; t < split.tracedDim(); ++t)
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index col = split.fullIndex(j, t);
      for (Eigen::Index i = 0; i < k; ++i) out(i, j) += m(split.fullIndex(i, t), col);
    }
  return out;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> partialTrace(
    const Eigen::MatrixBase<Derived>& m, const Dims& dims, const Subsystems& keep) {
  return partialTrace(m, SubsystemSplit(dims, keep));
}

// Adjoint-like embedding sigma_keep ⊗ I_rest / d_rest, so trace is preserved.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> embedMaximallyMixed(
    const Eigen::MatrixBase<Derived>& sigma, const SubsystemSplit& split) {
  using Result = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index k = split.keptDim();
  if (sigma.rows() != k || sigma.cols() != k)
    throw Error(ErrorCode::InvalidInput, "embed: marginal does not match subsystem dims");
  Result out = Result::Zero(split.fullDim(), split.fullDim());
  const double w = 1.0 / static_cast<double>(split.tracedDim());
  for (Eigen::Index t = 0; t < split.tracedDim(); ++t)
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index col = split.fullIndex(j, t);
      for (Eigen::Index i = 0; i < k; ++i) out(split.fullIndex(i, t), col) = sigma(i, j) * w;
    }
  return out;
}

QuantumState partialTrace(const QuantumState& state, const Subsystems& keep);

template <typename A, typename B>
Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(const Eigen::MatrixBase<A>& a,
                                                                      const Eigen::MatrixBase<B>& b) {
  static_assert(std::is_same_v<typename A::Scalar, typename B::Scalar>, "kron: scalar types differ");
  Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                                       a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

HermitianMatrix kron(const std::vector<HermitianMatrix>& factors);

struct Eigh {
  Eigen::VectorXd values;    // descending
  Eigen::MatrixXcd vectors;  // columns match values
};

Eigh eigh(const HermitianMatrix& m);

double minEigenvalue(const HermitianMatrix& m);

// Square-root convention: sqrt(Tr[(a-b)(a-b)^dagger]).
template <typename A, typename B>
double hsDistance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::InvalidInput, "hsDistance: dimension mismatch");
  return (a - b).norm();
}

double fidelity(const QuantumState& a, const QuantumState& b);
double fidelity(const HermitianMatrix& a, const HermitianMatrix& b);

QuantumState randomPureState(const Dims& dims, Rng& rng);
QuantumState randomPureState(const Dims& dims, RngSeed seed);
QuantumState randomMixedState(const Dims& dims, Rng& rng);
QuantumState randomMixedState(const Dims& dims, RngSeed seed);

enum class GeneratorKind { HilbertSchmidt, HaarPure };

QuantumState randomState(const Dims& dims, GeneratorKind kind, Rng& rng);

// Haar unitary via QR of a Ginibre matrix with the phase correction of Mezzadri.
Eigen::MatrixXcd randomUnitary(Eigen::Index d, Rng& rng);

QuantumState maximallyMixed(const Dims& dims);
QuantumState pureState(const Eigen::VectorXcd& psi, Dims dims = {});

}  // namespace qimpose
