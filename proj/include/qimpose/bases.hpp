#pragma once

#include <vector>

#include "qimpose/mathcore.hpp"

namespace qimpose {

// 0 = I, 1 = X, 2 = Y, 3 = Z.
HermitianMatrix pauli(int index);

// d+1 mutually unbiased bases. d prime uses the eigenbases of Z, X, XZ, ..., XZ^(d-1)
// (for d = 2: sigma3, sigma1, sigma2). d = 2^n (n <= 8) uses the stabilizer
// construction over GF(2^n), starting with the computational basis.
std::vector<MeasurementSet> mubBases(int d);

// 3^n product bases, qubit 0 most significant, local order Z, X, Y; outcome 0 of a
// local basis is the +1 eigenvector.
std::vector<MeasurementSet> pauliProductBases(int n);

// All 4^n Pauli strings (identity included) as one observable basis.
MeasurementSet pauliObservables(int n);

MeasurementSet computationalBasis(int d);

MeasurementSet randomBasis(int d, Rng& rng);

bool isPrime(int d);

}  // namespace qimpose
