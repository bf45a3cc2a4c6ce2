#pragma once

#include <random>

#include "qimpose/mathcore.hpp"

namespace qimpose::test {

inline HermitianMatrix randomHermitian(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> g;
  HermitianMatrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const double re = g(rng);
      m(i, j) = Complex(re, g(rng));
    }
  return hermitianPart(m);
}

// Trace-one Hermitian, usually not PSD.
inline HermitianMatrix randomTraceOne(Eigen::Index d, Rng& rng) {
  HermitianMatrix m = randomHermitian(d, rng);
  m.diagonal().array() += (1.0 - m.trace().real()) / static_cast<double>(d);
  return m;
}

inline double maxAbs(const HermitianMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace qimpose::test

namespace qimpose {
// Keeps doctest from stringifying ErrorCode through the library's toString.
inline bool hasCode(const Error& e, ErrorCode c) { return e.code() == c; }
}  // namespace qimpose
