#pragma once

#include <string>
#include <vector>

#include "qimpose/mathcore.hpp"

namespace qimpose {

// Two parties, m settings and d outcomes each. Tensors indexed [x][y][a][b] are
// stored flat with b fastest.
struct BellScenario {
  int settings = 2;
  int outcomes = 2;

  void validate() const;
  Eigen::Index jointSize() const { return Eigen::Index{settings} * settings * outcomes * outcomes; }
  Eigen::Index marginalSize() const { return Eigen::Index{settings} * outcomes; }
  Eigen::Index jointIndex(int x, int y, int a, int b) const {
    return ((Eigen::Index{x} * settings + y) * outcomes + a) * outcomes + b;
  }
  Eigen::Index marginalIndex(int x, int a) const { return Eigen::Index{x} * outcomes + a; }
  // Product d*m used to shift numerator and denominator of the gap ratio.
  double shift() const { return double(settings) * outcomes; }
  // d^(2m): number of deterministic strategy pairs.
  double strategyCount() const;

  bool operator==(const BellScenario&) const = default;
};

struct BellInequality {
  BellScenario scenario;
  Eigen::VectorXd joint;  // s[x][y][a][b]
  Eigen::VectorXd margA;  // s_x^a
  Eigen::VectorXd margB;  // s_y^b

  BellInequality() : BellInequality(BellScenario{}) {}
  explicit BellInequality(BellScenario s);
  BellInequality(BellScenario s, Eigen::VectorXd joint, Eigen::VectorXd margA, Eigen::VectorXd margB);

  double& s(int x, int y, int a, int b) { return joint(scenario.jointIndex(x, y, a, b)); }
  double s(int x, int y, int a, int b) const { return joint(scenario.jointIndex(x, y, a, b)); }
  double& sA(int x, int a) { return margA(scenario.marginalIndex(x, a)); }
  double sA(int x, int a) const { return margA(scenario.marginalIndex(x, a)); }
  double& sB(int y, int b) { return margB(scenario.marginalIndex(y, b)); }
  double sB(int y, int b) const { return margB(scenario.marginalIndex(y, b)); }

  // [joint, margA, margB] concatenated; the optimizer's variable vector.
  Eigen::VectorXd flatten() const;
  static BellInequality unflatten(BellScenario s, const Eigen::VectorXd& v);

  double maxAbsCoefficient() const;
  bool inUnitBox(double tol = 0.0) const { return maxAbsCoefficient() <= 1.0 + tol; }
  BellInequality scaled(double k) const;
};

struct CountsTable {
  BellScenario scenario;
  Eigen::VectorXd c;

  CountsTable() : CountsTable(BellScenario{}) {}
  explicit CountsTable(BellScenario s) : scenario(s), c(Eigen::VectorXd::Zero(s.jointSize())) {}

  double& operator()(int x, int y, int a, int b) { return c(scenario.jointIndex(x, y, a, b)); }
  double operator()(int x, int y, int a, int b) const { return c(scenario.jointIndex(x, y, a, b)); }
  double total(int x, int y) const;
  void validate() const;
};

struct BehaviorTable {
  BellScenario scenario;
  Eigen::VectorXd p;

  BehaviorTable() : BehaviorTable(BellScenario{}) {}
  explicit BehaviorTable(BellScenario s) : scenario(s), p(Eigen::VectorXd::Zero(s.jointSize())) {}

  double& operator()(int x, int y, int a, int b) { return p(scenario.jointIndex(x, y, a, b)); }
  double operator()(int x, int y, int a, int b) const { return p(scenario.jointIndex(x, y, a, b)); }
  // Marginals averaged over the other party's settings.
  double marginalA(int x, int a) const;
  double marginalB(int y, int b) const;
  // Largest violation of the no-signaling equalities.
  double signalingResidual() const;
  void validate(double tol = 1e-9) const;

  static BehaviorTable fromCounts(const CountsTable& counts);
};

// Value of the Bell expression on a behavior.
double evaluate(const BellInequality& ineq, const BehaviorTable& behavior);

// Maximum over deterministic local strategies (Alice enumerated, Bob best response).
double lhvBound(const BellInequality& ineq);

struct QuantumValue {
  double value = 0.0;
  double error = 0.0;  // Poissonian error propagated through the counts
};

QuantumValue quantumValue(const BellInequality& ineq, const CountsTable& counts);

// (Q - dQ + dm) / (C + dm); -inf when C + dm <= 0.
double gapRatio(const BellInequality& ineq, const CountsTable& counts);

BehaviorTable behaviorFromState(const QuantumState& state, const std::vector<MeasurementSet>& settingsA,
                                const std::vector<MeasurementSet>& settingsB);

// Exact counts: behavior scaled by perSetting.
CountsTable countsFromBehavior(const BehaviorTable& behavior, double perSetting);
// Poisson counts with mean perSetting * p.
CountsTable sampleCounts(const BehaviorTable& behavior, double perSetting, Rng& rng);

// Minimizes sum_xy w_xy KL(f(.|xy) || p(.|xy)) over the no-signaling polytope.
// Empty weights mean uniform. Frequencies are floored at 1e-12.
BehaviorTable noSignalingFit(const BehaviorTable& f, const Eigen::MatrixXd& weights = {});

struct GapOptions {
  int chains = 1;             // independent restart chains, each seeded seed + chain
  int maxStageIterations = 400;
  double tauStart = 1e-1;     // softmax temperature for the smoothed LHV value
  double tauEnd = 1e-5;
  unsigned threads = 1;
};

struct GapResult {
  BellInequality inequality;
  double ratio = 0.0;
  QuantumValue quantum;
  double lhv = 0.0;
  std::vector<double> restartRatios;  // best ratio after each restart, per chain in order
};

// Restart k optimizes from x_k and seeds x_{k+1} = (s_k + x_k) / 2; x_0 uniform in the box.
GapResult maximizeGap(const CountsTable& counts, int trials, RngSeed seed, const GapOptions& options = {});

struct TiltedBell {
  BellInequality inequality;
  double lhvBound = 0.0;
  double quantumBound = 0.0;
  double theta = 0.0;
  double mu = 0.0;
  QuantumState state;
  std::vector<MeasurementSet> settingsA;
  std::vector<MeasurementSet> settingsB;
};

// alpha [p_A(0|0) - p_A(1|0)] + sum_xy (-1)^(xy) [p(a=b|xy) - p(a!=b|xy)] with its
// optimal two-qubit state and observables (outcome 0 is the +1 eigenvalue).
TiltedBell tiltedInequality(double alpha);

// Tilt whose optimal state cos(theta)|00> + sin(theta)|11> has concurrence sin(2 theta) == c.
double tiltForConcurrence(double c);

// CHSH in probability form: p(00|00)+p(00|01)+p(00|10)-p(00|11)-p_A(0|0)-p_B(0|0) <= 0.
BellInequality chshInequality();

enum class CanonicalScaling { None, UnitJoint };

struct CanonicalForm {
  BellInequality inequality;  // only outcome-0 coefficients are nonzero
  double constant = 0.0;      // original value == canonical value + constant on NS behaviors
  double bound = 0.0;         // LHV bound of the canonical inequality
};

CanonicalForm canonicalForm(const BellInequality& ineq, CanonicalScaling scaling = CanonicalScaling::None);

enum class EfficiencyMode { Symmetric, AsymmetricB1 };

// Smallest detection efficiency for which the canonical inequality is still violated.
double efficiencyThreshold(const BellInequality& canonical, const BehaviorTable& behavior,
                           EfficiencyMode mode = EfficiencyMode::Symmetric);

// Signed coefficients times probability labels, e.g. "+0.5 p(00|01) -1 pA(0|0) <= 0".
std::string formatInequality(const BellInequality& ineq, double bound, double zeroTol = 1e-12);

}  // namespace qimpose
