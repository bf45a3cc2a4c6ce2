#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "qimpose/bases.hpp"
#include "qimpose/bell.hpp"
#include "support.hpp"

using namespace qimpose;

namespace {

// Value of every deterministic strategy, reached by recursing over a(0..m-1) then b(0..m-1).
double recursiveLhv(const BellInequality& s) {
  const int m = s.scenario.settings, d = s.scenario.outcomes;
  std::vector<int> a(m), b(m);
  double best = -std::numeric_limits<double>::infinity();
  std::function<void(int)> go = [&](int pos) {
    if (pos == 2 * m) {
      double v = 0.0;
      for (int x = 0; x < m; ++x) {
        v += s.sA(x, a[x]) + s.sB(x, b[x]);
        for (int y = 0; y < m; ++y) v += s.s(x, y, a[x], b[y]);
      }
      best = std::max(best, v);
      return;
    }
    for (int o = 0; o < d; ++o) {
      (pos < m ? a[pos] : b[pos - m]) = o;
      go(pos + 1);
    }
  };
  go(0);
  return best;
}

BellInequality randomInequality(BellScenario sc, Rng& rng, bool integer = false) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> k(-3, 3);
  BellInequality s(sc);
  Eigen::VectorXd v = s.flatten();
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = integer ? k(rng) : u(rng);
  return BellInequality::unflatten(sc, v);
}

BehaviorTable deterministic(BellScenario sc, const std::vector<int>& a, const std::vector<int>& b) {
  BehaviorTable p(sc);
  for (int x = 0; x < sc.settings; ++x)
    for (int y = 0; y < sc.settings; ++y) p(x, y, a[x], b[y]) = 1.0;
  return p;
}

// PR box variant: a xor b == xy xor (r x) xor (s y) xor t.
BehaviorTable prBox(int r, int s, int t) {
  BehaviorTable p(BellScenario{2, 2});
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if ((a ^ b) == ((x & y) ^ (r & x) ^ (s & y) ^ t)) p(x, y, a, b) = 0.5;
  return p;
}

// Random point of the CHSH no-signaling polytope: convex mixture of its 24 vertices.
BehaviorTable randomNoSignaling(Rng& rng, bool localOnly = false) {
  std::vector<BehaviorTable> vertices;
  const BellScenario sc{2, 2};
  for (int i = 0; i < 16; ++i) vertices.push_back(deterministic(sc, {i & 1, (i >> 1) & 1}, {(i >> 2) & 1, (i >> 3) & 1}));
  if (!localOnly)
    for (int i = 0; i < 8; ++i) vertices.push_back(prBox(i & 1, (i >> 1) & 1, (i >> 2) & 1));
  std::exponential_distribution<double> e(1.0);
  BehaviorTable out(sc);
  double total = 0.0;
  for (const auto& v : vertices) {
    const double w = e(rng);
    out.p += w * v.p;
    total += w;
  }
  out.p /= total;
  return out;
}

double kl(const BehaviorTable& f, const BehaviorTable& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.p.size(); ++i)
    if (f.p(i) > 0.0) s += f.p(i) * std::log(f.p(i) / std::max(p.p(i), 1e-300));
  return s;
}

}  // namespace

TEST_CASE("LHV enumeration matches the recursive oracle") {
  Rng rng(71);
  for (const BellScenario sc : {BellScenario{2, 2}, BellScenario{3, 2}, BellScenario{2, 3}, BellScenario{3, 3}}) {
    for (int i = 0; i < 50; ++i) {
      const BellInequality s = randomInequality(sc, rng, i % 2 == 0);
      CHECK(std::abs(lhvBound(s) - recursiveLhv(s)) < 1e-12);
    }
  }
}

TEST_CASE("LHV values of known inequalities") {
  CHECK(lhvBound(chshInequality()) == 0.0);
  for (double alpha : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    const TiltedBell t = tiltedInequality(alpha);
    CHECK(lhvBound(t.inequality) == alpha + 2.0);
    CHECK(t.lhvBound == alpha + 2.0);
  }
  BellInequality zero(BellScenario{3, 2});
  CHECK(lhvBound(zero) == 0.0);
  try {
    lhvBound(BellInequality(BellScenario{14, 4}));
    FAIL("guard not enforced");
  } catch (const Error& e) {
    CHECK(hasCode(e, ErrorCode::TooLargeScenario));
  }
}

TEST_CASE("tilted quantum value") {
  for (double alpha : {0.0, 0.3, 0.5, 1.0, 1.5, 1.9, 2.0}) {
    CAPTURE(alpha);
    const TiltedBell t = tiltedInequality(alpha);
    const BehaviorTable p = behaviorFromState(t.state, t.settingsA, t.settingsB);
    CHECK(std::abs(evaluate(t.inequality, p) - std::sqrt(8.0 + 2.0 * alpha * alpha)) < 1e-8);
    CHECK(p.signalingResidual() < 1e-10);
  }
  CHECK(tiltedInequality(0.0).theta == doctest::Approx(M_PI / 4));
  CHECK(tiltedInequality(2.0).theta == doctest::Approx(0.0));
  CHECK_THROWS_AS(tiltedInequality(2.5), Error);
}

TEST_CASE("tilt for a target concurrence") {
  for (double c : {0.1, 0.375, 0.8, 1.0}) {
    const TiltedBell t = tiltedInequality(tiltForConcurrence(c));
    CHECK(std::sin(2.0 * t.theta) == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("quantum behaviors are no-signaling") {
  Rng rng(73);
  for (int i = 0; i < 20; ++i) {
    const QuantumState s = randomMixedState({3, 3}, rng);
    std::vector<MeasurementSet> sa, sb;
    for (int k = 0; k < 3; ++k) {
      sa.push_back(randomBasis(3, rng));
      sb.push_back(randomBasis(3, rng));
    }
    const BehaviorTable p = behaviorFromState(s, sa, sb);
    CHECK(p.signalingResidual() < 1e-10);
    CHECK_NOTHROW(p.validate());
  }
}

TEST_CASE("quantum value statistics") {
  const TiltedBell t = tiltedInequality(0.7);
  const BehaviorTable p = behaviorFromState(t.state, t.settingsA, t.settingsB);
  const QuantumValue q1 = quantumValue(t.inequality, countsFromBehavior(p, 1e4));
  const QuantumValue q4 = quantumValue(t.inequality, countsFromBehavior(p, 4e4));
  CHECK(q1.value == doctest::Approx(q4.value).epsilon(1e-12));
  CHECK(q1.value == doctest::Approx(evaluate(t.inequality, p)).epsilon(1e-12));
  CHECK(q4.error / q1.error == doctest::Approx(0.5).epsilon(1e-9));

  // error propagation: sum over settings of Var(w) / N for a multinomial average
  const CountsTable c = countsFromBehavior(p, 1e4);
  double var = 0.0;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) {
      double m1 = 0.0, m2 = 0.0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          const double w = t.inequality.s(x, y, a, b) + (t.inequality.sA(x, a) + t.inequality.sB(y, b)) / 2.0;
          m1 += w * p(x, y, a, b);
          m2 += w * w * p(x, y, a, b);
        }
      var += (m2 - m1 * m1) / 1e4;
    }
  CHECK(q1.error == doctest::Approx(std::sqrt(var)).epsilon(1e-9));
}

TEST_CASE("scaling covariance") {
  Rng rng(79);
  const BehaviorTable p = randomNoSignaling(rng);
  const CountsTable c = countsFromBehavior(p, 1000.0);
  for (int i = 0; i < 10; ++i) {
    const BellInequality s = randomInequality(BellScenario{2, 2}, rng);
    const double kappa = 0.25 + i;
    const QuantumValue a = quantumValue(s, c), b = quantumValue(s.scaled(kappa), c);
    CHECK(std::abs(b.value - kappa * a.value) < 1e-10 * kappa);
    CHECK(std::abs(b.error - kappa * a.error) < 1e-10 * kappa);
    CHECK(std::abs(lhvBound(s.scaled(kappa)) - kappa * lhvBound(s)) < 1e-10 * kappa);
  }
}

TEST_CASE("gap ratio identity") {
  Rng rng(83);
  const BehaviorTable p = randomNoSignaling(rng);
  const CountsTable c = countsFromBehavior(p, 500.0);
  for (int i = 0; i < 20; ++i) {
    const BellInequality s = randomInequality(BellScenario{2, 2}, rng);
    const double r = gapRatio(s, c);
    const double cl = lhvBound(s);
    if (cl + 4.0 <= 0.0) {
      CHECK(r == -std::numeric_limits<double>::infinity());
      continue;
    }
    const QuantumValue q = quantumValue(s, c);
    CHECK(std::abs((q.value - q.error - cl) - (r - 1.0) * (cl + 4.0)) < 1e-9);
  }
}

TEST_CASE("canonical form") {
  Rng rng(89);
  for (int i = 0; i < 5; ++i) {
    const BellInequality s = randomInequality(BellScenario{2 + i % 2, 2}, rng);
    const CanonicalForm cf = canonicalForm(s);
    for (int x = 0; x < s.scenario.settings; ++x) {
      CHECK(cf.inequality.sA(x, 1) == 0.0);
      CHECK(cf.inequality.sB(x, 1) == 0.0);
    }
    // value difference is the same constant on every no-signaling behavior
    for (int k = 0; k < 20; ++k) {
      BehaviorTable p(s.scenario);
      if (s.scenario.settings == 2) {
        p = randomNoSignaling(rng);
      } else {
        std::uniform_int_distribution<int> bit(0, 1);
        p = deterministic(s.scenario, {bit(rng), bit(rng), bit(rng)}, {bit(rng), bit(rng), bit(rng)});
      }
      CHECK(std::abs(evaluate(s, p) - evaluate(cf.inequality, p) - cf.constant) < 1e-10);
    }
    CHECK(std::abs(cf.bound - lhvBound(cf.inequality)) < 1e-10);
  }
  CHECK(canonicalForm(BellInequality(BellScenario{2, 2})).inequality.flatten().isZero());
  try {
    canonicalForm(BellInequality(BellScenario{2, 3}));
  } catch (const Error& e) {
    CHECK(hasCode(e, ErrorCode::UnsupportedOutcomes));
  }
}

TEST_CASE("canonical tilted inequality") {
  for (double alpha : {0.0, 0.5, 1.0, 2.0}) {
    const CanonicalForm cf = canonicalForm(tiltedInequality(alpha).inequality, CanonicalScaling::UnitJoint);
    const BellInequality& s = cf.inequality;
    CHECK(s.sA(0, 0) == doctest::Approx(alpha / 2.0 - 1.0));
    CHECK(s.sA(1, 0) == doctest::Approx(0.0));
    CHECK(s.sB(0, 0) == doctest::Approx(-1.0));
    CHECK(s.sB(1, 0) == doctest::Approx(0.0));
    CHECK(s.s(0, 0, 0, 0) == doctest::Approx(1.0));
    CHECK(s.s(0, 1, 0, 0) == doctest::Approx(1.0));
    CHECK(s.s(1, 0, 0, 0) == doctest::Approx(1.0));
    CHECK(s.s(1, 1, 0, 0) == doctest::Approx(-1.0));
    CHECK(cf.bound == doctest::Approx((alpha + 2.0 + alpha - 2.0) / 4.0));
  }
}

TEST_CASE("detection efficiency thresholds") {
  const TiltedBell t0 = tiltedInequality(0.0);
  const BehaviorTable best = behaviorFromState(t0.state, t0.settingsA, t0.settingsB);
  const double eta = efficiencyThreshold(chshInequality(), best);
  CHECK(eta == doctest::Approx(2.0 / (1.0 + std::sqrt(2.0))).epsilon(1e-10));

  // eta solves the threshold equation
  double j = 0, a = 0, b = 0;
  const BellInequality chsh = chshInequality();
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < 2; ++y) j += chsh.s(x, y, 0, 0) * best(x, y, 0, 0);
    a += chsh.sA(x, 0) * best.marginalA(x, 0);
    b += chsh.sB(x, 0) * best.marginalB(x, 0);
  }
  CHECK(std::abs(eta * eta * j + eta * (a + b)) < 1e-12);

  // a behavior that saturates the local bound needs perfect detection
  const BehaviorTable local = deterministic(BellScenario{2, 2}, {0, 0}, {0, 0});
  CHECK(evaluate(chsh, local) == doctest::Approx(0.0));
  CHECK(efficiencyThreshold(chsh, local) == 1.0);
  try {
    efficiencyThreshold(chsh, deterministic(BellScenario{2, 2}, {1, 1}, {0, 0}));
    FAIL("local point below the bound accepted");
  } catch (const Error& e) {
    CHECK(hasCode(e, ErrorCode::NotViolatedAtAnyEfficiency));
  }
  CHECK_THROWS_AS(efficiencyThreshold(tiltedInequality(0.5).inequality, best), Error);

  for (double alpha : {0.5, 1.0}) {
    const TiltedBell t = tiltedInequality(alpha);
    const BehaviorTable p = behaviorFromState(t.state, t.settingsA, t.settingsB);
    const CanonicalForm cf = canonicalForm(t.inequality);
    const double sym = efficiencyThreshold(cf.inequality, p, EfficiencyMode::Symmetric);
    const double asym = efficiencyThreshold(cf.inequality, p, EfficiencyMode::AsymmetricB1);
    CHECK(asym < sym);
  }
}

TEST_CASE("no-signaling fit") {
  Rng rng(97);
  const BehaviorTable ns = randomNoSignaling(rng);
  CHECK((noSignalingFit(ns).p - ns.p).cwiseAbs().maxCoeff() < 1e-8);

  // signaling perturbation
  BehaviorTable f = ns;
  f(0, 0, 0, 0) += 0.05;
  f(0, 0, 1, 1) -= 0.05;
  f(1, 1, 0, 1) += 0.03;
  f(1, 1, 1, 0) -= 0.03;
  f.p = f.p.cwiseMax(0.0);
  REQUIRE(f.signalingResidual() > 1e-3);
  const BehaviorTable fit = noSignalingFit(f);
  CHECK(fit.signalingResidual() < 1e-8);
  CHECK_NOTHROW(fit.validate(1e-8));

  // optimality against many candidates inside the polytope
  const double k = kl(f, fit);
  for (int i = 0; i < 20000; ++i) CHECK(kl(f, randomNoSignaling(rng)) >= k - 1e-8);

  // local optimality: small moves along the polytope never improve
  for (int i = 0; i < 200; ++i) {
    BehaviorTable q = fit;
    q.p = 0.999 * fit.p + 0.001 * randomNoSignaling(rng).p;
    CHECK(kl(f, q) >= k - 1e-10);
  }
}

TEST_CASE("no-signaling fit handles zero counts") {
  const BehaviorTable local = deterministic(BellScenario{2, 2}, {0, 1}, {1, 0});
  const BehaviorTable fit = noSignalingFit(local);
  CHECK(fit.signalingResidual() < 1e-8);
  CHECK((fit.p - local.p).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("gap maximization certifies local data") {
  Rng rng(101);
  for (int i = 0; i < 5; ++i) {
    const BehaviorTable p = randomNoSignaling(rng, true);
    const CountsTable c = countsFromBehavior(p, 1e4);
    const GapResult g = maximizeGap(c, 3, RngSeed{static_cast<std::uint64_t>(i)});
    CHECK(g.ratio <= 1.0 + 1e-6);
    CHECK(g.inequality.inUnitBox(1e-12));
    CHECK(std::abs(gapRatio(g.inequality, c) - g.ratio) < 1e-9);
  }
}

TEST_CASE("gap maximization detects CHSH-optimal data") {
  const TiltedBell t = tiltedInequality(0.0);
  const CountsTable c = countsFromBehavior(behaviorFromState(t.state, t.settingsA, t.settingsB), 1e6);
  const GapResult g = maximizeGap(c, 5, RngSeed{1});
  CHECK(g.ratio > 1.0);
  CHECK(g.inequality.inUnitBox(1e-12));
  CHECK(std::abs(gapRatio(g.inequality, c) - g.ratio) < 1e-9 * std::max(1.0, g.ratio));
  CHECK(g.restartRatios.size() == 5);
  for (std::size_t i = 1; i < g.restartRatios.size(); ++i) CHECK(g.restartRatios[i] >= g.restartRatios[i - 1]);
}

TEST_CASE("optimized inequality beats the tilted one on low-concurrence data") {
  const TiltedBell t = tiltedInequality(tiltForConcurrence(0.375));
  Rng rng(103);
  const CountsTable c = sampleCounts(behaviorFromState(t.state, t.settingsA, t.settingsB), 1e5, rng);
  const BellInequality boxed = t.inequality.scaled(1.0 / t.inequality.maxAbsCoefficient());
  const GapResult g = maximizeGap(c, 5, RngSeed{2});
  CHECK(g.ratio > gapRatio(boxed, c));
}

TEST_CASE("gap maximization is reproducible and thread independent") {
  const TiltedBell t = tiltedInequality(0.5);
  const CountsTable c = countsFromBehavior(behaviorFromState(t.state, t.settingsA, t.settingsB), 1e5);
  GapOptions one, many;
  one.chains = many.chains = 3;
  many.threads = 3;
  const GapResult a = maximizeGap(c, 2, RngSeed{5}, one), b = maximizeGap(c, 2, RngSeed{5}, many);
  CHECK(a.ratio == b.ratio);
  CHECK(a.inequality.flatten() == b.inequality.flatten());
}

TEST_CASE("inequality formatting") {
  CHECK(formatInequality(chshInequality(), 0.0) ==
        "+1 p(00|00) +1 p(00|01) +1 p(00|10) -1 p(00|11) -1 pA(0|0) -1 pB(0|0) <= 0");
}

TEST_CASE("counts and behaviors") {
  Rng rng(107);
  const BehaviorTable p = randomNoSignaling(rng);
  const CountsTable c = countsFromBehavior(p, 200.0);
  CHECK(c.total(1, 0) == doctest::Approx(200.0));
  CHECK((BehaviorTable::fromCounts(c).p - p.p).cwiseAbs().maxCoeff() < 1e-12);
  const CountsTable s = sampleCounts(p, 200.0, rng);
  CHECK((s.c.array() - s.c.array().round()).abs().maxCoeff() == 0.0);
  CountsTable bad = c;
  bad(0, 0, 0, 0) = -1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
