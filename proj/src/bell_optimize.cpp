// Gap-ratio maximization over the coefficient box [-1, 1].
//
// The LHV value is a max over deterministic strategies, so the ratio is only
// piecewise smooth. Each restart runs projected gradient ascent on a softmax
// smoothing of that max while annealing the temperature; candidates are always
// scored with the exact ratio, and points whose exact denominator is not
// positive are rejected even if the smoothed one is.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qimpose/bell.hpp"
#include "qimpose/parallel.hpp"

namespace qimpose {

namespace {

constexpr double kMinDenominator = 1e-9;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

class GapObjective {
 public:
  explicit GapObjective(const CountsTable& counts) : counts_(counts), sc_(counts.scenario) {
    if (sc_.strategyCount() > 1e6)
      throw Error(ErrorCode::TooLargeScenario, "gap optimizer enumerates at most 1e6 strategy pairs");
    const int m = sc_.settings, d = sc_.outcomes;
    nj_ = sc_.jointSize();
    nm_ = sc_.marginalSize();
    perStrategy_ = m * m + 2 * m;
    std::vector<int> alice(static_cast<std::size_t>(m), 0), bob(static_cast<std::size_t>(m), 0);
    auto advance = [&](std::vector<int>& digits) {
      for (int& v : digits) {
        if (++v < d) return true;
        v = 0;
      }
      return false;
    };
    do {
      do {
        for (int x = 0; x < m; ++x)
          for (int y = 0; y < m; ++y) strategies_.push_back(sc_.jointIndex(x, y, alice[x], bob[y]));
        for (int x = 0; x < m; ++x) strategies_.push_back(nj_ + sc_.marginalIndex(x, alice[x]));
        for (int y = 0; y < m; ++y) strategies_.push_back(nj_ + nm_ + sc_.marginalIndex(y, bob[y]));
      } while (advance(bob));
    } while (advance(alice));
    count_ = static_cast<Eigen::Index>(strategies_.size()) / perStrategy_;
  }

  Eigen::Index size() const { return nj_ + 2 * nm_; }
  double shift() const { return sc_.shift(); }

  Eigen::VectorXd strategyValues(const Eigen::VectorXd& v) const {
    Eigen::VectorXd out(count_);
    for (Eigen::Index k = 0; k < count_; ++k) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < perStrategy_; ++i) s += v(strategies_[k * perStrategy_ + i]);
      out(k) = s;
    }
    return out;
  }

  double lhv(const Eigen::VectorXd& v) const { return strategyValues(v).maxCoeff(); }

  // Q - dQ and its gradient with respect to the flat coefficients.
  double lowerQuantum(const Eigen::VectorXd& v, Eigen::VectorXd* grad) const {
    const int m = sc_.settings, d = sc_.outcomes;
    const Eigen::Index block = Eigen::Index{d} * d;
    Eigen::VectorXd w(nj_);
    for (int x = 0; x < m; ++x)
      for (int y = 0; y < m; ++y)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b)
            w(sc_.jointIndex(x, y, a, b)) =
                v(sc_.jointIndex(x, y, a, b)) + (v(nj_ + sc_.marginalIndex(x, a)) + v(nj_ + nm_ + sc_.marginalIndex(y, b))) / m;
    double q = 0.0, var = 0.0;
    Eigen::VectorXd gq(nj_), gdq(nj_);
    for (Eigen::Index i = 0; i < nj_; i += block) {
      const auto c = counts_.c.segment(i, block);
      const double n = c.sum();
      const double avg = w.segment(i, block).dot(c) / n;
      q += avg;
      const Eigen::VectorXd der = (w.segment(i, block).array() - avg) / n;
      var += der.array().square().matrix().dot(c);
      gq.segment(i, block) = c / n;
      // Uses sum_i der_i c_i == 0 within a setting pair.
      gdq.segment(i, block) = (der.array() * c.array() / n).matrix();
    }
    const double dq = std::sqrt(var);
    if (grad) {
      const Eigen::VectorXd gw = gq - (dq > 0.0 ? Eigen::VectorXd(gdq / dq) : Eigen::VectorXd::Zero(nj_));
      grad->setZero(size());
      grad->head(nj_) = gw;
      for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y)
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
              const double g = gw(sc_.jointIndex(x, y, a, b)) / m;
              (*grad)(nj_ + sc_.marginalIndex(x, a)) += g;
              (*grad)(nj_ + nm_ + sc_.marginalIndex(y, b)) += g;
            }
    }
    return q - dq;
  }

  double exactRatio(const Eigen::VectorXd& v) const {
    const double den = lhv(v) + shift();
    if (!(den > kMinDenominator)) return kNegInf;
    return (lowerQuantum(v, nullptr) + shift()) / den;
  }

  // Ratio with the LHV max replaced by tau * logsumexp(values / tau).
  double smoothRatio(const Eigen::VectorXd& v, double tau, Eigen::VectorXd* grad) const {
    const Eigen::VectorXd vals = strategyValues(v);
    const double top = vals.maxCoeff();
    if (!(top + shift() > kMinDenominator)) return kNegInf;
    const Eigen::ArrayXd e = ((vals.array() - top) / tau).exp();
    const double z = e.sum();
    const double den = top + tau * std::log(z) + shift();
    Eigen::VectorXd gnum;
    const double num = lowerQuantum(v, grad ? &gnum : nullptr) + shift();
    if (grad) {
      Eigen::VectorXd gden = Eigen::VectorXd::Zero(size());
      for (Eigen::Index k = 0; k < count_; ++k) {
        const double pk = e(k) / z;
        if (pk < 1e-300) continue;
        for (Eigen::Index i = 0; i < perStrategy_; ++i) gden(strategies_[k * perStrategy_ + i]) += pk;
      }
      *grad = (gnum * den - num * gden) / (den * den);
    }
    return num / den;
  }

 private:
  const CountsTable& counts_;
  BellScenario sc_;
  Eigen::Index nj_ = 0, nm_ = 0, perStrategy_ = 0, count_ = 0;
  std::vector<Eigen::Index> strategies_;
};

Eigen::VectorXd boxProject(const Eigen::VectorXd& v) { return v.cwiseMax(-1.0).cwiseMin(1.0); }

struct Candidate {
  Eigen::VectorXd v;
  double ratio = kNegInf;
};

Candidate ascend(const GapObjective& obj, Eigen::VectorXd v, const GapOptions& opt) {
  Candidate best{v, obj.exactRatio(v)};
  for (double tau = opt.tauStart; tau >= opt.tauEnd * (1.0 - 1e-12); tau *= 0.1) {
    Eigen::VectorXd g;
    double f = obj.smoothRatio(v, tau, &g);
    if (f == kNegInf) break;
    double step = 1.0;
    for (int it = 0; it < opt.maxStageIterations; ++it) {
      bool accepted = false;
      Eigen::VectorXd next, gnext;
      double fnext = kNegInf;
      for (int k = 0; k < 50; ++k, step *= 0.5) {
        next = boxProject(v + step * g);
        const double gain = g.dot(next - v);
        if (gain <= 0.0) break;
        if (obj.exactRatio(next) == kNegInf) continue;
        fnext = obj.smoothRatio(next, tau, &gnext);
        if (fnext >= f + 1e-4 * gain) {
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
      const Eigen::VectorXd s = next - v, y = gnext - g;
      v = std::move(next);
      g = std::move(gnext);
      const double improvement = fnext - f;
      f = fnext;
      const double r = obj.exactRatio(v);
      if (r > best.ratio) best = {v, r};
      // Barzilai-Borwein step for ascent: s.s / -(s.y).
      const double sy = s.dot(y);
      step = sy < 0.0 ? std::clamp(s.squaredNorm() / -sy, 1e-8, 1e8) : 1e2;
      if (s.norm() < 1e-12 || improvement < 1e-15) break;
    }
  }
  return best;
}

}  // namespace

GapResult maximizeGap(const CountsTable& counts, int trials, RngSeed seed, const GapOptions& options) {
  if (trials < 1) throw Error(ErrorCode::InvalidInput, "maximizeGap needs at least one trial");
  if (options.chains < 1) throw Error(ErrorCode::InvalidInput, "maximizeGap needs at least one chain");
  if (!(options.tauStart >= options.tauEnd && options.tauEnd > 0.0))
    throw Error(ErrorCode::InvalidInput, "softmax temperatures must satisfy tauStart >= tauEnd > 0");
  counts.validate();
  const GapObjective obj(counts);

  std::vector<Candidate> chainBest(static_cast<std::size_t>(options.chains));
  std::vector<std::vector<double>> history(static_cast<std::size_t>(options.chains));
  parallelFor(chainBest.size(), options.threads, [&](std::size_t chain) {
    Rng rng = makeRng(deriveSeed(seed, chain));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Eigen::VectorXd x(obj.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = uni(rng);
    Candidate best;
    for (int k = 0; k < trials; ++k) {
      // Shrinking towards 0 always reaches a feasible point (C(0) + dm = dm > 0).
      while (obj.exactRatio(x) == kNegInf) x /= 2.0;
      const Candidate c = ascend(obj, x, options);
      if (c.ratio > best.ratio) best = c;
      history[chain].push_back(best.ratio);
      x = (c.v + x) / 2.0;
    }
    chainBest[chain] = std::move(best);
  });

  std::size_t pick = 0;
  for (std::size_t i = 1; i < chainBest.size(); ++i)
    if (chainBest[i].ratio > chainBest[pick].ratio) pick = i;
  GapResult out;
  out.inequality = BellInequality::unflatten(counts.scenario, chainBest[pick].v);
  out.quantum = quantumValue(out.inequality, counts);
  out.lhv = lhvBound(out.inequality);
  out.ratio = gapRatio(out.inequality, counts);
  for (auto& h : history) out.restartRatios.insert(out.restartRatios.end(), h.begin(), h.end());
  return out;
}

}  // namespace qimpose
