#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "qimpose/bases.hpp"
#include "support.hpp"

using namespace qimpose;

namespace {

void checkOrthonormalProjectors(const MeasurementSet& m) {
  const Eigen::Index d = m.dim();
  HermitianMatrix sum = HermitianMatrix::Zero(d, d);
  for (std::size_t i = 0; i < m.size(); ++i) {
    sum += m[i];
    CHECK((m[i] * m[i] - m[i]).norm() < 1e-12);
    for (std::size_t j = i + 1; j < m.size(); ++j) CHECK((m[i] * m[j]).norm() < 1e-12);
  }
  CHECK((sum - HermitianMatrix::Identity(d, d)).norm() < 1e-11);
}

}  // namespace

TEST_CASE("Pauli matrices") {
  CHECK(pauli(0) == HermitianMatrix::Identity(2, 2));
  CHECK(pauli(1)(0, 1) == Complex(1, 0));
  CHECK(pauli(2)(0, 1) == Complex(0, -1));
  CHECK(pauli(2)(1, 0) == Complex(0, 1));
  CHECK(pauli(3)(1, 1) == Complex(-1, 0));
  CHECK((pauli(1) * pauli(2) - Complex(0, 1) * pauli(3)).norm() < 1e-15);
  CHECK_THROWS_AS(pauli(4), Error);
}

TEST_CASE("mutually unbiased bases") {
  for (int d : {2, 3, 4, 5, 7, 8, 16}) {
    CAPTURE(d);
    const auto bases = mubBases(d);
    REQUIRE(bases.size() == static_cast<std::size_t>(d + 1));
    for (const auto& b : bases) checkOrthonormalProjectors(b);
    // rank-one effects: |<a|b>|^2 = Tr(P_a P_b) = 1/d across bases
    for (std::size_t i = 0; i < bases.size(); ++i)
      for (std::size_t j = i + 1; j < bases.size(); ++j)
        for (std::size_t a = 0; a < bases[i].size(); ++a)
          for (std::size_t b = 0; b < bases[j].size(); ++b)
            CHECK(std::abs((bases[i][a] * bases[j][b]).trace().real() - 1.0 / d) < 1e-11);
  }
}

TEST_CASE("qubit MUB order is Z, X, Y") {
  const auto b = mubBases(2);
  for (int k = 0; k < 3; ++k) {
    const HermitianMatrix obs = b[k][0] - b[k][1];
    const int idx = k == 0 ? 3 : k;
    CHECK(std::abs(std::abs((obs * pauli(idx)).trace().real()) - 2.0) < 1e-12);
  }
  CHECK(b[0][0](0, 0).real() == doctest::Approx(1.0));
}

TEST_CASE("unsupported MUB dimensions") {
  for (int d : {1, 6, 10, 12, 512}) {
    CAPTURE(d);
    try {
      mubBases(d);
      FAIL("expected UnsupportedDimension");
    } catch (const Error& e) {
      CHECK(hasCode(e, ErrorCode::UnsupportedDimension));
    }
  }
}

TEST_CASE("Pauli product bases are informationally complete") {
  for (int n : {1, 2}) {
    const auto bases = pauliProductBases(n);
    const int d = 1 << n;
    REQUIRE(bases.size() == static_cast<std::size_t>(std::pow(3, n)));
    // Gram matrix of all effects has full rank d^2
    std::vector<HermitianMatrix> effects;
    for (const auto& b : bases) {
      checkOrthonormalProjectors(b);
      for (const auto& e : b.effects()) effects.push_back(e);
    }
    Eigen::MatrixXcd gram(effects.size(), effects.size());
    for (std::size_t i = 0; i < effects.size(); ++i)
      for (std::size_t j = 0; j < effects.size(); ++j) gram(i, j) = (effects[i] * effects[j]).trace();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(gram);
    qr.setThreshold(1e-10);
    CHECK(qr.rank() == d * d);
  }
}

TEST_CASE("Pauli product basis outcome 0 is the +1 eigenvector, qubit 0 leading") {
  const auto b = pauliProductBases(2);
  // basis index 1 is Z on qubit 0, X on qubit 1
  const HermitianMatrix zx = kron(pauli(3), pauli(1));
  CHECK((zx * b[1][0] - b[1][0]).norm() < 1e-12);
}

TEST_CASE("Pauli observables") {
  const MeasurementSet obs = pauliObservables(2);
  REQUIRE(obs.size() == 16);
  CHECK(obs.kind() == MeasurementKind::ObservableBasis);
  CHECK((obs[0] - HermitianMatrix::Identity(4, 4)).norm() == 0.0);
  for (std::size_t i = 0; i < obs.size(); ++i)
    for (std::size_t j = 0; j < obs.size(); ++j)
      CHECK(std::abs((obs[i] * obs[j]).trace() - Complex(i == j ? 4.0 : 0.0)) < 1e-12);
}

TEST_CASE("computational and random bases") {
  checkOrthonormalProjectors(computationalBasis(5));
  Rng rng(1);
  checkOrthonormalProjectors(randomBasis(4, rng));
  CHECK(isPrime(2));
  CHECK(isPrime(13));
  CHECK_FALSE(isPrime(1));
  CHECK_FALSE(isPrime(9));
}
