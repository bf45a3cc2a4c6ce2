#include "qimpose/bell.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "qimpose/bases.hpp"

namespace qimpose {

void BellScenario::validate() const {
  if (settings < 1) throw Error(ErrorCode::InvalidInput, "Bell scenario needs at least one setting");
  if (outcomes < 2) throw Error(ErrorCode::InvalidInput, "Bell scenario needs at least two outcomes");
}

double BellScenario::strategyCount() const { return std::pow(double(outcomes), 2.0 * settings); }

BellInequality::BellInequality(BellScenario s)
    : scenario(s),
      joint(Eigen::VectorXd::Zero(s.jointSize())),
      margA(Eigen::VectorXd::Zero(s.marginalSize())),
      margB(Eigen::VectorXd::Zero(s.marginalSize())) {
  s.validate();
}

BellInequality::BellInequality(BellScenario s, Eigen::VectorXd j, Eigen::VectorXd a, Eigen::VectorXd b)
    : scenario(s), joint(std::move(j)), margA(std::move(a)), margB(std::move(b)) {
  s.validate();
  if (joint.size() != s.jointSize() || margA.size() != s.marginalSize() || margB.size() != s.marginalSize())
    throw Error(ErrorCode::InvalidInput, "Bell inequality coefficient sizes do not match the scenario");
}

Eigen::VectorXd BellInequality::flatten() const {
  Eigen::VectorXd v(joint.size() + margA.size() + margB.size());
  v << joint, margA, margB;
  return v;
}

BellInequality BellInequality::unflatten(BellScenario s, const Eigen::VectorXd& v) {
  const Eigen::Index nj = s.jointSize(), nm = s.marginalSize();
  if (v.size() != nj + 2 * nm) throw Error(ErrorCode::InvalidInput, "flat coefficient vector has the wrong size");
  return BellInequality(s, v.head(nj), v.segment(nj, nm), v.tail(nm));
}

double BellInequality::maxAbsCoefficient() const { return flatten().cwiseAbs().maxCoeff(); }

BellInequality BellInequality::scaled(double k) const { return BellInequality(scenario, k * joint, k * margA, k * margB); }

double CountsTable::total(int x, int y) const {
  return c.segment(scenario.jointIndex(x, y, 0, 0), Eigen::Index{scenario.outcomes} * scenario.outcomes).sum();
}

void CountsTable::validate() const {
  scenario.validate();
  if (c.size() != scenario.jointSize()) throw Error(ErrorCode::InvalidInput, "counts table has the wrong size");
  if ((c.array() < 0.0).any() || !c.allFinite()) throw Error(ErrorCode::InvalidInput, "counts must be nonnegative");
  for (int x = 0; x < scenario.settings; ++x)
    for (int y = 0; y < scenario.settings; ++y)
      if (!(total(x, y) > 0.0))
        throw Error(ErrorCode::InvalidInput,
                    "no counts for settings (" + std::to_string(x) + "," + std::to_string(y) + ")");
}

double BehaviorTable::marginalA(int x, int a) const {
  double s = 0.0;
  for (int y = 0; y < scenario.settings; ++y)
    for (int b = 0; b < scenario.outcomes; ++b) s += (*this)(x, y, a, b);
  return s / scenario.settings;
}

double BehaviorTable::marginalB(int y, int b) const {
  double s = 0.0;
  for (int x = 0; x < scenario.settings; ++x)
    for (int a = 0; a < scenario.outcomes; ++a) s += (*this)(x, y, a, b);
  return s / scenario.settings;
}

double BehaviorTable::signalingResidual() const {
  const int m = scenario.settings, d = scenario.outcomes;
  double worst = 0.0;
  for (int x = 0; x < m; ++x)
    for (int a = 0; a < d; ++a)
      for (int y = 0; y < m; ++y) {
        double s = 0.0;
        for (int b = 0; b < d; ++b) s += (*this)(x, y, a, b);
        worst = std::max(worst, std::abs(s - marginalA(x, a)));
      }
  for (int y = 0; y < m; ++y)
    for (int b = 0; b < d; ++b)
      for (int x = 0; x < m; ++x) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += (*this)(x, y, a, b);
        worst = std::max(worst, std::abs(s - marginalB(y, b)));
      }
  return worst;
}

void BehaviorTable::validate(double tol) const {
  scenario.validate();
  if (p.size() != scenario.jointSize()) throw Error(ErrorCode::InvalidInput, "behavior table has the wrong size");
  if ((p.array() < -tol).any() || (p.array() > 1.0 + tol).any())
    throw Error(ErrorCode::InvalidInput, "behavior entries must lie in [0, 1]");
  const Eigen::Index block = Eigen::Index{scenario.outcomes} * scenario.outcomes;
  for (Eigen::Index i = 0; i < p.size(); i += block)
    if (std::abs(p.segment(i, block).sum() - 1.0) > tol)
      throw Error(ErrorCode::InvalidInput, "behavior is not normalized for every setting pair");
}

BehaviorTable BehaviorTable::fromCounts(const CountsTable& counts) {
  counts.validate();
  BehaviorTable out(counts.scenario);
  const int m = counts.scenario.settings, d = counts.scenario.outcomes;
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) {
      const double n = counts.total(x, y);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) out(x, y, a, b) = counts(x, y, a, b) / n;
    }
  return out;
}

namespace {

void requireSameScenario(const BellScenario& a, const BellScenario& b) {
  if (!(a == b)) throw Error(ErrorCode::InvalidInput, "inequality and data belong to different scenarios");
}

// Effective joint weights once averaged marginals are folded in:
// w = s_xy^ab + (s_x^a + s_y^b) / m.
Eigen::VectorXd effectiveWeights(const BellInequality& ineq) {
  const BellScenario& sc = ineq.scenario;
  const int m = sc.settings, d = sc.outcomes;
  Eigen::VectorXd w(sc.jointSize());
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
          w(sc.jointIndex(x, y, a, b)) = ineq.s(x, y, a, b) + (ineq.sA(x, a) + ineq.sB(y, b)) / m;
  return w;
}

}  // namespace

double evaluate(const BellInequality& ineq, const BehaviorTable& behavior) {
  requireSameScenario(ineq.scenario, behavior.scenario);
  return effectiveWeights(ineq).dot(behavior.p);
}

double lhvBound(const BellInequality& ineq) {
  const BellScenario& sc = ineq.scenario;
  if (sc.strategyCount() > 1e8)
    throw Error(ErrorCode::TooLargeScenario, "d^(2m) exceeds the 1e8 enumeration guard");
  const int m = sc.settings, d = sc.outcomes;
  std::vector<int> alice(static_cast<std::size_t>(m), 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    double value = 0.0;
    for (int x = 0; x < m; ++x) value += ineq.sA(x, alice[x]);
    for (int y = 0; y < m; ++y) {
      double bestB = -std::numeric_limits<double>::infinity();
      for (int b = 0; b < d; ++b) {
        double v = ineq.sB(y, b);
        for (int x = 0; x < m; ++x) v += ineq.s(x, y, alice[x], b);
        bestB = std::max(bestB, v);
      }
      value += bestB;
    }
    best = std::max(best, value);
    int x = 0;
    while (x < m && ++alice[x] == d) alice[x++] = 0;
    if (x == m) break;
  }
  return best;
}

QuantumValue quantumValue(const BellInequality& ineq, const CountsTable& counts) {
  requireSameScenario(ineq.scenario, counts.scenario);
  counts.validate();
  const BellScenario& sc = counts.scenario;
  const Eigen::VectorXd w = effectiveWeights(ineq);
  const Eigen::Index block = Eigen::Index{sc.outcomes} * sc.outcomes;
  double q = 0.0, var = 0.0;
  for (Eigen::Index i = 0; i < sc.jointSize(); i += block) {
    const auto c = counts.c.segment(i, block);
    const auto wi = w.segment(i, block);
    const double n = c.sum();
    const double avg = wi.dot(c) / n;
    q += avg;
    // dQ/dc = (w - avg) / N for every cell of this setting pair.
    var += ((wi.array() - avg) / n).square().matrix().dot(c);
  }
  return {q, std::sqrt(var)};
}

double gapRatio(const BellInequality& ineq, const CountsTable& counts) {
  const double dm = ineq.scenario.shift();
  const double den = lhvBound(ineq) + dm;
  if (!(den > 0.0)) return -std::numeric_limits<double>::infinity();
  const QuantumValue q = quantumValue(ineq, counts);
  return (q.value - q.error + dm) / den;
}

BehaviorTable behaviorFromState(const QuantumState& state, const std::vector<MeasurementSet>& settingsA,
                                const std::vector<MeasurementSet>& settingsB) {
  if (settingsA.empty() || settingsA.size() != settingsB.size())
    throw Error(ErrorCode::InvalidInput, "both parties need the same nonzero number of settings");
  const int m = static_cast<int>(settingsA.size());
  const int d = static_cast<int>(settingsA.front().size());
  const Eigen::Index dA = settingsA.front().dim(), dB = settingsB.front().dim();
  for (const auto* side : {&settingsA, &settingsB})
    for (const auto& s : *side)
      if (static_cast<int>(s.size()) != d || s.dim() != side->front().dim() ||
          s.kind() == MeasurementKind::ObservableBasis)
        throw Error(ErrorCode::InvalidInput, "settings must be measurements with a common outcome count");
  if (state.dim() != dA * dB) throw Error(ErrorCode::InvalidInput, "state dimension does not match dA * dB");

  BehaviorTable out(BellScenario{m, d});
  const HermitianMatrix& rho = state.matrix();
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          const HermitianMatrix op = kron(settingsA[x][a], settingsB[y][b]);
          out(x, y, a, b) = rho.cwiseProduct(op.transpose()).sum().real();
        }
  return out;
}

CountsTable countsFromBehavior(const BehaviorTable& behavior, double perSetting) {
  if (!(perSetting > 0.0)) throw Error(ErrorCode::InvalidInput, "counts per setting must be positive");
  CountsTable out(behavior.scenario);
  out.c = (behavior.p.cwiseMax(0.0) * perSetting).eval();
  return out;
}

CountsTable sampleCounts(const BehaviorTable& behavior, double perSetting, Rng& rng) {
  CountsTable out = countsFromBehavior(behavior, perSetting);
  for (Eigen::Index i = 0; i < out.c.size(); ++i)
    if (out.c(i) > 0.0) out.c(i) = static_cast<double>(std::poisson_distribution<long long>(out.c(i))(rng));
  return out;
}

BehaviorTable noSignalingFit(const BehaviorTable& f, const Eigen::MatrixXd& weights) {
  f.validate();
  const BellScenario& sc = f.scenario;
  const int m = sc.settings, d = sc.outcomes;
  const Eigen::Index n = sc.jointSize();
  Eigen::MatrixXd w = weights.size() == 0 ? Eigen::MatrixXd::Ones(m, m) : weights;
  if (w.rows() != m || w.cols() != m || (w.array() <= 0.0).any())
    throw Error(ErrorCode::InvalidInput, "setting weights must be a positive m x m matrix");

  // Equality constraints: normalization per (x,y) and no-signaling on both sides.
  std::vector<Eigen::VectorXd> rows;
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) {
      Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) r(sc.jointIndex(x, y, a, b)) = 1.0;
      rows.push_back(r);
    }
  for (int x = 0; x < m; ++x)
    for (int a = 0; a < d; ++a)
      for (int y = 0; y + 1 < m; ++y) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        for (int b = 0; b < d; ++b) {
          r(sc.jointIndex(x, y, a, b)) += 1.0;
          r(sc.jointIndex(x, y + 1, a, b)) -= 1.0;
        }
        rows.push_back(r);
      }
  for (int y = 0; y < m; ++y)
    for (int b = 0; b < d; ++b)
      for (int x = 0; x + 1 < m; ++x) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        for (int a = 0; a < d; ++a) {
          r(sc.jointIndex(x, y, a, b)) += 1.0;
          r(sc.jointIndex(x + 1, y, a, b)) -= 1.0;
        }
        rows.push_back(r);
      }
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), n);
  for (std::size_t i = 0; i < rows.size(); ++i) a.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::MatrixXd basis = lu.kernel().householderQr().householderQ() *
                                Eigen::MatrixXd::Identity(n, lu.dimensionOfKernel());

  Eigen::VectorXd fw(n);
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y)
      for (int ab = 0; ab < d * d; ++ab) {
        const Eigen::Index i = sc.jointIndex(x, y, 0, 0) + ab;
        fw(i) = w(x, y) * std::max(f.p(i), 1e-12);
      }

  // Damped Newton on -sum fw log p in the affine hull, starting from uniform.
  Eigen::VectorXd p = Eigen::VectorXd::Constant(n, 1.0 / (d * d));
  auto objective = [&](const Eigen::VectorXd& q) { return -(fw.array() * q.array().log()).sum(); };
  double fval = objective(p);
  for (int it = 0; it < 10000; ++it) {
    const Eigen::VectorXd g = basis.transpose() * (-fw.array() / p.array()).matrix();
    const Eigen::MatrixXd h = basis.transpose() * (fw.array() / p.array().square()).matrix().asDiagonal() * basis;
    const Eigen::VectorXd step = -h.ldlt().solve(g);
    const double decrement = -g.dot(step);
    if (!(decrement > 1e-15)) break;
    const Eigen::VectorXd dp = basis * step;
    double t = 1.0;
    Eigen::VectorXd trial;
    double tval = 0.0;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      trial = p + t * dp;
      if ((trial.array() > 0.0).all() && (tval = objective(trial)) <= fval - 1e-4 * t * decrement) break;
    }
    if (!((trial.array() > 0.0).all()) || tval > fval) break;
    p = trial;
    fval = tval;
  }
  BehaviorTable out(sc);
  out.p = p;
  return out;
}

BellInequality chshInequality() {
  BellInequality s(BellScenario{2, 2});
  s.s(0, 0, 0, 0) = 1.0;
  s.s(0, 1, 0, 0) = 1.0;
  s.s(1, 0, 0, 0) = 1.0;
  s.s(1, 1, 0, 0) = -1.0;
  s.sA(0, 0) = -1.0;
  s.sB(0, 0) = -1.0;
  return s;
}

TiltedBell tiltedInequality(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 2.0)) throw Error(ErrorCode::InvalidInput, "tilt alpha must lie in [0, 2]");
  BellInequality s(BellScenario{2, 2});
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) s.s(x, y, a, b) = ((x * y + a + b) % 2) ? -1.0 : 1.0;
  s.sA(0, 0) = alpha;
  s.sA(0, 1) = -alpha;

  const double q = alpha / 2.0;
  const double theta = 0.5 * std::asin(std::sqrt((1.0 - q * q) / (1.0 + q * q)));
  const double mu = std::atan(std::sin(2.0 * theta));

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
  psi(0) = std::cos(theta);
  psi(3) = std::sin(theta);

  auto observable = [](const HermitianMatrix& obs) {
    const HermitianMatrix id = HermitianMatrix::Identity(2, 2);
    return MeasurementSet({(id + obs) / 2.0, (id - obs) / 2.0}, MeasurementKind::PVM);
  };
  const HermitianMatrix z = pauli(3), x = pauli(1);
  std::vector<MeasurementSet> settingsA{observable(z), observable(x)};
  std::vector<MeasurementSet> settingsB{observable(std::cos(mu) * z + std::sin(mu) * x),
                                        observable(std::cos(mu) * z - std::sin(mu) * x)};
  return {s,
          alpha + 2.0,
          std::sqrt(8.0 + 2.0 * alpha * alpha),
          theta,
          mu,
          pureState(psi, {2, 2}),
          std::move(settingsA),
          std::move(settingsB)};
}

double tiltForConcurrence(double c) {
  if (!(c >= 0.0 && c <= 1.0)) throw Error(ErrorCode::InvalidInput, "concurrence must lie in [0, 1]");
  return 2.0 * std::sqrt((1.0 - c * c) / (1.0 + c * c));
}

CanonicalForm canonicalForm(const BellInequality& ineq, CanonicalScaling scaling) {
  const BellScenario& sc = ineq.scenario;
  if (sc.outcomes != 2) throw Error(ErrorCode::UnsupportedOutcomes, "canonical form needs two outcomes");
  const int m = sc.settings;
  BellInequality out(sc);
  double constant = 0.0;
  for (int x = 0; x < m; ++x)
    for (int y = 0; y < m; ++y) {
      out.s(x, y, 0, 0) = ineq.s(x, y, 0, 0) - ineq.s(x, y, 0, 1) - ineq.s(x, y, 1, 0) + ineq.s(x, y, 1, 1);
      out.sA(x, 0) += ineq.s(x, y, 0, 1) - ineq.s(x, y, 1, 1);
      out.sB(y, 0) += ineq.s(x, y, 1, 0) - ineq.s(x, y, 1, 1);
      constant += ineq.s(x, y, 1, 1);
    }
  for (int x = 0; x < m; ++x) {
    out.sA(x, 0) += ineq.sA(x, 0) - ineq.sA(x, 1);
    constant += ineq.sA(x, 1);
  }
  for (int y = 0; y < m; ++y) {
    out.sB(y, 0) += ineq.sB(y, 0) - ineq.sB(y, 1);
    constant += ineq.sB(y, 1);
  }
  double bound = lhvBound(ineq) - constant;
  if (scaling == CanonicalScaling::UnitJoint) {
    const double k = out.joint.cwiseAbs().maxCoeff();
    if (k > 0.0) {
      out = out.scaled(1.0 / k);
      constant /= k;
      bound /= k;
    }
  }
  return {out, constant, bound};
}

double efficiencyThreshold(const BellInequality& canonical, const BehaviorTable& behavior, EfficiencyMode mode) {
  requireSameScenario(canonical.scenario, behavior.scenario);
  const BellScenario& sc = canonical.scenario;
  if (sc.outcomes != 2) throw Error(ErrorCode::UnsupportedOutcomes, "efficiency threshold needs two outcomes");
  const int m = sc.settings;
  double j = 0.0, a = 0.0, b = 0.0;
  for (int x = 0; x < m; ++x) {
    for (int y = 0; y < m; ++y) {
      if (canonical.s(x, y, 0, 1) != 0.0 || canonical.s(x, y, 1, 0) != 0.0 || canonical.s(x, y, 1, 1) != 0.0)
        throw Error(ErrorCode::InvalidInput, "inequality is not in canonical form");
      j += canonical.s(x, y, 0, 0) * behavior(x, y, 0, 0);
    }
    if (canonical.sA(x, 1) != 0.0 || canonical.sB(x, 1) != 0.0)
      throw Error(ErrorCode::InvalidInput, "inequality is not in canonical form");
    a += canonical.sA(x, 0) * behavior.marginalA(x, 0);
    b += canonical.sB(x, 0) * behavior.marginalB(x, 0);
  }
  const double c = lhvBound(canonical);
  const double excess = j + a + b - c;
  const double tol = 1e-12 * std::max({1.0, std::abs(j), std::abs(a), std::abs(b), std::abs(c)});
  if (excess < -tol) throw Error(ErrorCode::NotViolatedAtAnyEfficiency, "not violated even at unit efficiency");
  if (excess <= tol) return 1.0;

  auto accept = [&](double eta) {
    if (!(eta > 0.0 && eta <= 1.0 + 1e-12))
      throw Error(ErrorCode::NotViolatedAtAnyEfficiency, "threshold efficiency outside (0, 1]");
    return std::min(eta, 1.0);
  };
  if (mode == EfficiencyMode::AsymmetricB1) {
    if (j + a == 0.0) throw Error(ErrorCode::NotViolatedAtAnyEfficiency, "violation does not depend on eta_A");
    return accept((c - b) / (j + a));
  }
  // eta^2 J + eta (A + B) - C = 0; the violation region ends at the largest root in (0, 1].
  const double lin = a + b;
  if (std::abs(j) < 1e-300) return accept(c / lin);
  const double disc = lin * lin + 4.0 * j * c;
  if (disc < 0.0) throw Error(ErrorCode::NotViolatedAtAnyEfficiency, "no real threshold efficiency");
  const double sq = std::sqrt(disc);
  // Cancellation-free pair of roots.
  const double qq = -0.5 * (lin + std::copysign(sq, lin));
  double best = -1.0;
  for (double r : {qq / j, qq != 0.0 ? -c / qq : -1.0})
    if (r > 0.0 && r <= 1.0 + 1e-12) best = std::max(best, r);
  return accept(best);
}

std::string formatInequality(const BellInequality& ineq, double bound, double zeroTol) {
  const BellScenario& sc = ineq.scenario;
  std::ostringstream os;
  os << std::setprecision(6);
  bool first = true;
  auto term = [&](double v, const std::string& label) {
    if (std::abs(v) <= zeroTol) return;
    if (!first) os << ' ';
    os << (v < 0 ? "-" : "+") << std::abs(v) << ' ' << label;
    first = false;
  };
  for (int x = 0; x < sc.settings; ++x)
    for (int y = 0; y < sc.settings; ++y)
      for (int a = 0; a < sc.outcomes; ++a)
        for (int b = 0; b < sc.outcomes; ++b)
          term(ineq.s(x, y, a, b),
               "p(" + std::to_string(a) + std::to_string(b) + "|" + std::to_string(x) + std::to_string(y) + ")");
  for (int x = 0; x < sc.settings; ++x)
    for (int a = 0; a < sc.outcomes; ++a)
      term(ineq.sA(x, a), "pA(" + std::to_string(a) + "|" + std::to_string(x) + ")");
  for (int y = 0; y < sc.settings; ++y)
    for (int b = 0; b < sc.outcomes; ++b)
      term(ineq.sB(y, b), "pB(" + std::to_string(b) + "|" + std::to_string(y) + ")");
  if (first) os << '0';
  os << " <= " << bound;
  return os.str();
}

}  // namespace qimpose
