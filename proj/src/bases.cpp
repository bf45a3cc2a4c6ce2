#include "qimpose/bases.hpp"

#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace qimpose {

namespace {

constexpr Complex kI{0.0, 1.0};

Eigen::MatrixXcd primeBasis(int d, int k) {
  // Eigenvectors of X Z^k with X|j> = |j+1>, Z|j> = w^j |j>:
  // c_j = lambda^(-j) w^(k j (j-1) / 2), lambda = zeta w^m, zeta^d = w^(k d (d-1) / 2).
  const double two_pi = 2.0 * std::numbers::pi;
  const double zeta_phase = std::numbers::pi * k * (d - 1) / d;
  Eigen::MatrixXcd u(d, d);
  for (int m = 0; m < d; ++m) {
    const double lambda_phase = zeta_phase + two_pi * m / d;
    for (int j = 0; j < d; ++j) {
      const long long tri = static_cast<long long>(j) * (j - 1) / 2;
      const double phase = -lambda_phase * j + two_pi * static_cast<double>((k * tri) % d) / d;
      u(j, m) = std::polar(1.0 / std::sqrt(static_cast<double>(d)), phase);
    }
  }
  return u;
}

class Gf2n {
 public:
  explicit Gf2n(int n) : n_(n), poly_(irreducible(n)) {}

  unsigned mul(unsigned a, unsigned b) const {
    unsigned r = 0;
    while (b) {
      if (b & 1u) r ^= a;
      b >>= 1;
      a <<= 1;
      if (a >> n_ & 1u) a ^= poly_;
    }
    return r;
  }

  // Absolute trace onto GF(2).
  unsigned trace(unsigned a) const {
    unsigned t = 0, p = a;
    for (int k = 0; k < n_; ++k) {
      t ^= p;
      p = mul(p, p);
    }
    return t & 1u;
  }

 private:
  static unsigned irreducible(int n) {
    switch (n) {
      case 1: return 0b11;
      case 2: return 0b111;
      case 3: return 0b1011;
      case 4: return 0b10011;
      case 5: return 0b100101;
      case 6: return 0b1000011;
      case 7: return 0b10000011;
      case 8: return 0b100011011;
    }
    throw Error(ErrorCode::UnsupportedDimension, "GF(2^n) only tabulated for n <= 8");
  }

  int n_;
  unsigned poly_;
};

// Hermitian Pauli i^(a.b) X(a) Z(b) as a monomial: g|j> = phase(j) |j ^ a>.
struct Monomial {
  unsigned a, b;

  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const {
    Eigen::VectorXcd out(v.size());
    const Complex global = std::pow(kI, std::popcount(a & b) % 4);
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const unsigned uj = static_cast<unsigned>(j);
      const double sign = (std::popcount(b & uj) & 1) ? -1.0 : 1.0;
      out(static_cast<Eigen::Index>(uj ^ a)) = global * sign * v(j);
    }
    return out;
  }
};

std::vector<MeasurementSet> powerOfTwoBases(int n) {
  const int d = 1 << n;
  Gf2n field(n);
  std::vector<MeasurementSet> bases;
  bases.push_back(computationalBasis(d));
  for (unsigned s = 0; s < static_cast<unsigned>(d); ++s) {
    std::vector<Monomial> gens;
    for (int k = 0; k < n; ++k) {
      unsigned b = 0;
      for (int j = 0; j < n; ++j)
        if (field.trace(field.mul(s, field.mul(1u << k, 1u << j)))) b |= 1u << j;
      gens.push_back({1u << k, b});
    }
    // Each joint eigenvector has |<0|psi>|^2 = 1/d, so projecting |0> finds it.
    Eigen::MatrixXcd u(d, d);
    for (int v = 0; v < d; ++v) {
      Eigen::VectorXcd psi = Eigen::VectorXcd::Unit(d, 0);
      for (int k = 0; k < n; ++k) {
        const double sign = (v >> k & 1) ? -1.0 : 1.0;
        psi = (psi + sign * gens[static_cast<std::size_t>(k)].apply(psi)) / 2.0;
      }
      u.col(v) = psi.normalized();
    }
    bases.push_back(MeasurementSet::fromBasis(u));
  }
  return bases;
}

}  // namespace

HermitianMatrix pauli(int index) {
  HermitianMatrix m(2, 2);
  switch (index) {
    case 0: m << 1, 0, 0, 1; break;
    case 1: m << 0, 1, 1, 0; break;
    case 2: m << 0, -kI, kI, 0; break;
    case 3: m << 1, 0, 0, -1; break;
    default: throw Error(ErrorCode::InvalidInput, "pauli index must be 0..3");
  }
  return m;
}

bool isPrime(int d) {
  if (d < 2) return false;
  for (int q = 2; q * q <= d; ++q)
    if (d % q == 0) return false;
  return true;
}

MeasurementSet computationalBasis(int d) {
  return MeasurementSet::fromBasis(Eigen::MatrixXcd::Identity(d, d));
}

std::vector<MeasurementSet> mubBases(int d) {
  if (isPrime(d)) {
    std::vector<MeasurementSet> bases{computationalBasis(d)};
    for (int k = 0; k < d; ++k) bases.push_back(MeasurementSet::fromBasis(primeBasis(d, k)));
    return bases;
  }
  if (d > 2 && std::has_single_bit(static_cast<unsigned>(d)) && d <= 256)
    return powerOfTwoBases(std::countr_zero(static_cast<unsigned>(d)));
  throw Error(ErrorCode::UnsupportedDimension,
              "mubBases: d = " + std::to_string(d) + " is neither prime nor a power of two <= 256");
}

std::vector<MeasurementSet> pauliProductBases(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidInput, "pauliProductBases: need at least one qubit");
  const double r = 1.0 / std::sqrt(2.0);
  std::vector<Eigen::MatrixXcd> local(3, Eigen::MatrixXcd(2, 2));
  local[0] << 1, 0, 0, 1;
  local[1] << r, r, r, -r;
  local[2] << r, r, r * kI, -r * kI;

  int count = 1;
  for (int q = 0; q < n; ++q) count *= 3;
  std::vector<MeasurementSet> bases;
  bases.reserve(static_cast<std::size_t>(count));
  for (int idx = 0; idx < count; ++idx) {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(1, 1);
    int rest = idx, place = count / 3;
    for (int q = 0; q < n; ++q, place /= 3) {
      u = kron(u, local[static_cast<std::size_t>(rest / place)]);
      rest %= place;
    }
    bases.push_back(MeasurementSet::fromBasis(u));
  }
  return bases;
}

MeasurementSet pauliObservables(int n) {
  if (n < 1) throw Error(ErrorCode::InvalidInput, "pauliObservables: need at least one qubit");
  const int count = 1 << (2 * n);
  std::vector<HermitianMatrix> obs;
  obs.reserve(static_cast<std::size_t>(count));
  for (int idx = 0; idx < count; ++idx) {
    HermitianMatrix m = HermitianMatrix::Identity(1, 1);
    for (int q = n - 1; q >= 0; --q) m = kron(m, pauli(idx >> (2 * q) & 3));
    obs.push_back(std::move(m));
  }
  return MeasurementSet(std::move(obs), MeasurementKind::ObservableBasis);
}

MeasurementSet randomBasis(int d, Rng& rng) { return MeasurementSet::fromBasis(randomUnitary(d, rng)); }

}  // namespace qimpose
