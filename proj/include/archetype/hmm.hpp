#pragma once

// Single-HMM mathematics for Gaussian-emission hidden Markov models with an
// optional forward-only (upper triangular) transition structure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "archetype/common.hpp"
#include "archetype/sequence.hpp"

namespace archetype {

inline constexpr double kDefaultVarFloor = 1e-4;
inline constexpr double kStochasticTolerance = 1e-9;

using StatePath = std::vector<std::size_t>;

/// One Gaussian HMM: prior, transition matrix, and per-state diagonal
/// Gaussian emissions.
struct ArchetypeModel {
  std::vector<double> prior;
  Matrix trans;
  std::vector<std::vector<double>> means;
  std::vector<std::vector<double>> vars;
  bool leftRight = true;

  std::size_t numStates() const { return prior.size(); }
  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }

  bool operator==(const ArchetypeModel&) const = default;

  /// Throws UsageError if any structural or stochastic invariant fails.
  void validate(double varFloor = kDefaultVarFloor) const {
    const std::size_t k = numStates();
    if (k == 0) throw UsageError("ArchetypeModel: no states");
    if (trans.rows() != k || trans.cols() != k || means.size() != k || vars.size() != k) {
      throw UsageError("ArchetypeModel: inconsistent state count");
    }
    const std::size_t m = dim();
    if (m == 0) throw UsageError("ArchetypeModel: zero-dimensional emissions");
    double priorSum = 0.0;
    for (double p : prior) {
      if (!(p >= 0.0)) throw UsageError("ArchetypeModel: negative prior");
      priorSum += p;
    }
    if (std::abs(priorSum - 1.0) > kStochasticTolerance) {
      throw UsageError("ArchetypeModel: prior does not sum to 1");
    }
    for (std::size_t r = 0; r < k; ++r) {
      double rowSum = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double p = trans(r, c);
        if (!(p >= 0.0)) throw UsageError("ArchetypeModel: negative transition");
        if (leftRight && c < r && p != 0.0) {
          throw UsageError("ArchetypeModel: backward transition in left-right model");
        }
        rowSum += p;
      }
      if (std::abs(rowSum - 1.0) > kStochasticTolerance) {
        throw UsageError("ArchetypeModel: transition row " + std::to_string(r) +
                         " does not sum to 1");
      }
      if (means[r].size() != m || vars[r].size() != m) {
        throw UsageError("ArchetypeModel: inconsistent emission dimension");
      }
      for (std::size_t d = 0; d < m; ++d) {
        if (!std::isfinite(means[r][d])) throw UsageError("ArchetypeModel: non-finite mean");
        if (!(vars[r][d] >= varFloor) || !std::isfinite(vars[r][d])) {
          throw UsageError("ArchetypeModel: variance below floor");
        }
      }
    }
  }
};

/// Log-density of a diagonal Gaussian.
inline double logEmission(std::span<const double> x, std::span<const double> mean,
                          std::span<const double> var) {
  if (x.size() != mean.size() || x.size() != var.size()) {
    throw UsageError("logEmission: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t m = 0; m < x.size(); ++m) {
    const double diff = x[m] - mean[m];
    acc += -0.5 * std::log(2.0 * std::numbers::pi * var[m]) - diff * diff / (2.0 * var[m]);
  }
  return acc;
}

inline double logEmission(const SessionVector& x, std::span<const double> mean,
                          std::span<const double> var) {
  return logEmission(x.values(), mean, var);
}

namespace detail {

inline void checkDims(std::span<const SessionVector> sessions, const ArchetypeModel& model) {
  if (sessions.empty()) throw UsageError("empty sequence");
  const std::size_t m = model.dim();
  for (const auto& s : sessions) {
    if (s.size() != m) {
      throw UsageError("session dimension " + std::to_string(s.size()) +
                       " does not match model dimension " + std::to_string(m));
    }
  }
}

/// Emission log-densities, T x K.
inline Matrix emissionTable(std::span<const SessionVector> sessions, const ArchetypeModel& model) {
  const std::size_t k = model.numStates();
  Matrix table(sessions.size(), k);
  for (std::size_t t = 0; t < sessions.size(); ++t) {
    for (std::size_t s = 0; s < k; ++s) {
      table(t, s) = logEmission(sessions[t].values(), model.means[s], model.vars[s]);
    }
  }
  return table;
}

inline Matrix logTransitions(const ArchetypeModel& model) {
  const std::size_t k = model.numStates();
  Matrix out(k, k);
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t c = 0; c < k; ++c) out(r, c) = safeLog(model.trans(r, c));
  }
  return out;
}

inline std::vector<double> logVector(std::span<const double> p) {
  std::vector<double> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = safeLog(p[i]);
  return out;
}

/// Log-space forward pass. Each row of the returned matrix is normalized to
/// log-sum zero; the per-step normalizers are accumulated into `logLik`.
struct ForwardPass {
  Matrix logAlpha;
  std::vector<double> logScale;
  double logLik = 0.0;
};

inline ForwardPass forward(const Matrix& logB, const Matrix& logTrans,
                           std::span<const double> logInit) {
  const std::size_t steps = logB.rows();
  const std::size_t k = logB.cols();
  ForwardPass out{Matrix(steps, k), std::vector<double>(steps), 0.0};
  std::vector<double> terms(k);
  for (std::size_t s = 0; s < k; ++s) out.logAlpha(0, s) = logInit[s] + logB(0, s);
  for (std::size_t t = 0;; ++t) {
    const double scale = logSumExp(out.logAlpha.row(t));
    out.logScale[t] = scale;
    out.logLik += scale;
    if (scale == kNegInf) {
      out.logLik = kNegInf;
      return out;
    }
    for (std::size_t s = 0; s < k; ++s) out.logAlpha(t, s) -= scale;
    if (t + 1 == steps) break;
    for (std::size_t next = 0; next < k; ++next) {
      for (std::size_t prev = 0; prev < k; ++prev) {
        terms[prev] = out.logAlpha(t, prev) + logTrans(prev, next);
      }
      out.logAlpha(t + 1, next) = logSumExp(terms) + logB(t + 1, next);
    }
  }
  return out;
}

/// Backward pass scaled with the forward normalizers, so that
/// alpha(t,k) + beta(t,k) is the log state posterior.
inline Matrix backward(const Matrix& logB, const Matrix& logTrans,
                       std::span<const double> logScale) {
  const std::size_t steps = logB.rows();
  const std::size_t k = logB.cols();
  Matrix logBeta(steps, k, 0.0);
  std::vector<double> terms(k);
  for (std::size_t t = steps - 1; t-- > 0;) {
    for (std::size_t prev = 0; prev < k; ++prev) {
      for (std::size_t next = 0; next < k; ++next) {
        terms[next] = logTrans(prev, next) + logB(t + 1, next) + logBeta(t + 1, next);
      }
      logBeta(t, prev) = logSumExp(terms) - logScale[t + 1];
    }
  }
  return logBeta;
}

struct Decoded {
  StatePath path;
  double logProb = kNegInf;
};

/// Max-product decoding from an arbitrary initial log-weight vector. Ties
/// go to the lowest state index.
inline Decoded decode(const Matrix& logB, const Matrix& logTrans, std::span<const double> logInit) {
  const std::size_t steps = logB.rows();
  const std::size_t k = logB.cols();
  Matrix delta(steps, k);
  std::vector<std::size_t> back(steps * k, 0);
  for (std::size_t s = 0; s < k; ++s) delta(0, s) = logInit[s] + logB(0, s);
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t next = 0; next < k; ++next) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t prev = 0; prev < k; ++prev) {
        const double cand = delta(t - 1, prev) + logTrans(prev, next);
        if (cand > best) {
          best = cand;
          arg = prev;
        }
      }
      delta(t, next) = best + logB(t, next);
      back[t * k + next] = arg;
    }
  }
  Decoded out;
  out.path.assign(steps, 0);
  std::size_t last = 0;
  for (std::size_t s = 0; s < k; ++s) {
    if (delta(steps - 1, s) > out.logProb) {
      out.logProb = delta(steps - 1, s);
      last = s;
    }
  }
  out.path[steps - 1] = last;
  for (std::size_t t = steps - 1; t > 0; --t) out.path[t - 1] = back[t * k + out.path[t]];
  return out;
}

}  // namespace detail

/// log P(sessions | model), summed over all state paths.
inline double forwardLogLik(std::span<const SessionVector> sessions, const ArchetypeModel& model) {
  detail::checkDims(sessions, model);
  const Matrix logB = detail::emissionTable(sessions, model);
  return detail::forward(logB, detail::logTransitions(model), detail::logVector(model.prior)).logLik;
}

inline double forwardLogLik(const Sequence& seq, const ArchetypeModel& model) {
  return forwardLogLik(std::span<const SessionVector>(seq.sessions), model);
}

/// Most probable state path and its joint log-probability.
inline std::pair<StatePath, double> viterbi(std::span<const SessionVector> sessions,
                                            const ArchetypeModel& model) {
  detail::checkDims(sessions, model);
  auto decoded = detail::decode(detail::emissionTable(sessions, model),
                                detail::logTransitions(model), detail::logVector(model.prior));
  return {std::move(decoded.path), decoded.logProb};
}

inline std::pair<StatePath, double> viterbi(const Sequence& seq, const ArchetypeModel& model) {
  return viterbi(std::span<const SessionVector>(seq.sessions), model);
}

/// Decodes `continuation` as if it directly followed a session decoded into
/// state `fromState`: the first step is drawn from row `fromState` of the
/// transition matrix rather than from the prior.
inline std::pair<StatePath, double> viterbiContinue(std::span<const SessionVector> continuation,
                                                    const ArchetypeModel& model,
                                                    std::size_t fromState) {
  detail::checkDims(continuation, model);
  if (fromState >= model.numStates()) throw UsageError("viterbiContinue: state out of range");
  auto decoded = detail::decode(detail::emissionTable(continuation, model),
                                detail::logTransitions(model),
                                detail::logVector(model.trans.row(fromState)));
  return {std::move(decoded.path), decoded.logProb};
}

struct FitConfig {
  std::size_t maxIter = 100;
  /// Stop once the relative log-likelihood improvement drops below this.
  double tol = 1e-6;
  bool learnVariance = false;
  double varFloor = kDefaultVarFloor;
  /// When false only the prior and transitions are re-estimated.
  bool updateEmissions = true;
  std::size_t threads = 1;
};

struct FitResult {
  ArchetypeModel model;
  /// history[i] is the total log-likelihood after i re-estimation steps.
  std::vector<double> history;
  std::size_t emptyStateEvents = 0;
  bool converged = false;
};

namespace detail {

struct SufficientStats {
  std::vector<double> initial;  // K
  std::vector<double> occupancy;  // K
  Matrix transitions;  // K x K
  Matrix weightedSum;  // K x M
  Matrix weightedSquares;  // K x M
  double logLik = 0.0;

  SufficientStats(std::size_t k, std::size_t m)
      : initial(k, 0.0), occupancy(k, 0.0), transitions(k, k), weightedSum(k, m),
        weightedSquares(k, m) {}

  void add(const SufficientStats& o) {
    for (std::size_t s = 0; s < initial.size(); ++s) {
      initial[s] += o.initial[s];
      occupancy[s] += o.occupancy[s];
      for (std::size_t c = 0; c < transitions.cols(); ++c) transitions(s, c) += o.transitions(s, c);
      for (std::size_t d = 0; d < weightedSum.cols(); ++d) {
        weightedSum(s, d) += o.weightedSum(s, d);
        weightedSquares(s, d) += o.weightedSquares(s, d);
      }
    }
    logLik += o.logLik;
  }
};

inline SufficientStats sequenceStats(std::span<const SessionVector> sessions,
                                     const ArchetypeModel& model, const Matrix& logTrans,
                                     std::span<const double> logPrior) {
  const std::size_t k = model.numStates();
  const std::size_t m = model.dim();
  const std::size_t steps = sessions.size();
  SufficientStats stats(k, m);
  const Matrix logB = emissionTable(sessions, model);
  const ForwardPass fwd = forward(logB, logTrans, logPrior);
  if (!std::isfinite(fwd.logLik)) {
    throw NumericalError("Baum-Welch: sequence has zero likelihood under the model");
  }
  const Matrix logBeta = backward(logB, logTrans, fwd.logScale);
  stats.logLik = fwd.logLik;
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t s = 0; s < k; ++s) {
      const double gamma = std::exp(fwd.logAlpha(t, s) + logBeta(t, s));
      if (t == 0) stats.initial[s] += gamma;
      stats.occupancy[s] += gamma;
      const auto x = sessions[t].values();
      for (std::size_t d = 0; d < m; ++d) {
        stats.weightedSum(s, d) += gamma * x[d];
        stats.weightedSquares(s, d) += gamma * x[d] * x[d];
      }
    }
    if (t + 1 == steps) continue;
    for (std::size_t prev = 0; prev < k; ++prev) {
      if (fwd.logAlpha(t, prev) == kNegInf) continue;
      for (std::size_t next = 0; next < k; ++next) {
        if (logTrans(prev, next) == kNegInf) continue;
        const double logXi = fwd.logAlpha(t, prev) + logTrans(prev, next) + logB(t + 1, next) +
                             logBeta(t + 1, next) - fwd.logScale[t + 1];
        stats.transitions(prev, next) += std::exp(logXi);
      }
    }
  }
  return stats;
}

inline SufficientStats collectStats(std::span<const Sequence> seqs, const ArchetypeModel& model,
                                    std::size_t threads) {
  const Matrix logTrans = logTransitions(model);
  const std::vector<double> logPrior = logVector(model.prior);
  std::vector<SufficientStats> perSeq(seqs.size(), SufficientStats(model.numStates(), model.dim()));
  parallelFor(seqs.size(), threads, [&](std::size_t i) {
    perSeq[i] = sequenceStats(seqs[i].sessions, model, logTrans, logPrior);
  });
  SufficientStats total(model.numStates(), model.dim());
  for (const auto& s : perSeq) total.add(s);
  return total;
}

/// Normalizes transition counts into a row-stochastic matrix. Backward
/// entries are zeroed first for left-right models; rows with no mass become
/// a self-loop.
inline Matrix normalizeTransitions(Matrix counts, bool leftRight) {
  const std::size_t k = counts.rows();
  for (std::size_t r = 0; r < k; ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (leftRight && c < r) counts(r, c) = 0.0;
      total += counts(r, c);
    }
    if (total > 0.0) {
      for (std::size_t c = 0; c < k; ++c) counts(r, c) /= total;
    } else {
      for (std::size_t c = 0; c < k; ++c) counts(r, c) = (c == r) ? 1.0 : 0.0;
    }
  }
  return counts;
}

inline ArchetypeModel reestimate(const ArchetypeModel& current, const SufficientStats& stats,
                                 const FitConfig& cfg, std::size_t& emptyStates) {
  const std::size_t k = current.numStates();
  const std::size_t m = current.dim();
  ArchetypeModel next = current;

  double initialTotal = 0.0;
  for (double v : stats.initial) initialTotal += v;
  if (initialTotal > 0.0) {
    for (std::size_t s = 0; s < k; ++s) next.prior[s] = stats.initial[s] / initialTotal;
  }

  Matrix counts = stats.transitions;
  for (std::size_t s = 0; s < k; ++s) {
    if (!(stats.occupancy[s] >= std::numeric_limits<double>::min())) {
      ++emptyStates;
      // Unvisited state: keep its outgoing row as well as its emission.
      for (std::size_t c = 0; c < k; ++c) counts(s, c) = current.trans(s, c);
    }
  }
  next.trans = normalizeTransitions(std::move(counts), current.leftRight);

  if (!cfg.updateEmissions) return next;
  for (std::size_t s = 0; s < k; ++s) {
    const double mass = stats.occupancy[s];
    if (!(mass >= std::numeric_limits<double>::min())) continue;
    for (std::size_t d = 0; d < m; ++d) {
      const double mean = stats.weightedSum(s, d) / mass;
      next.means[s][d] = mean;
      if (cfg.learnVariance) {
        const double var = stats.weightedSquares(s, d) / mass - mean * mean;
        next.vars[s][d] = std::max(cfg.varFloor, var);
      }
    }
  }
  return next;
}

}  // namespace detail

/// Baum-Welch re-estimation restricted to forward-only transitions when the
/// initial model is left-right.
inline FitResult baumWelchFit(std::span<const Sequence> seqs, const ArchetypeModel& init,
                              const FitConfig& cfg = {}) {
  if (seqs.empty()) throw UsageError("baumWelchFit: no sequences");
  init.validate(std::min(cfg.varFloor, kDefaultVarFloor));
  for (const auto& seq : seqs) detail::checkDims(seq.sessions, init);

  FitResult result{init, {}, 0, false};
  auto stats = detail::collectStats(seqs, result.model, cfg.threads);
  result.history.push_back(stats.logLik);
  for (std::size_t iter = 0; iter < cfg.maxIter; ++iter) {
    result.model = detail::reestimate(result.model, stats, cfg, result.emptyStateEvents);
    stats = detail::collectStats(seqs, result.model, cfg.threads);
    const double prev = result.history.back();
    result.history.push_back(stats.logLik);
    const double scale = std::max(std::abs(prev), 1e-300);
    if ((stats.logLik - prev) / scale < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

inline FitResult baumWelchFit(const Sequence& seq, const ArchetypeModel& init,
                              const FitConfig& cfg = {}) {
  return baumWelchFit(std::span<const Sequence>(&seq, 1), init, cfg);
}

struct SampledSequence {
  Sequence sequence;
  StatePath states;
};

/// Draws a state path from the chain and one session per state from its
/// Gaussian; each session is clamped at zero and renormalized to the simplex.
inline SampledSequence sampleWithStates(const ArchetypeModel& model, std::size_t length,
                                        std::uint64_t seed, std::string id = {}) {
  if (length == 0) throw UsageError("sampleSequence: length must be >= 1");
  model.validate(0.0);
  Rng rng(seed);
  SampledSequence out;
  out.sequence.id = std::move(id);
  out.states.reserve(length);
  out.sequence.sessions.reserve(length);
  const std::size_t m = model.dim();
  std::size_t state = rng.categorical(model.prior);
  for (std::size_t t = 0; t < length; ++t) {
    if (t > 0) state = rng.categorical(model.trans.row(state));
    out.states.push_back(state);
    std::vector<double> raw(m);
    double total = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
      raw[d] = std::max(0.0, model.means[state][d] + std::sqrt(model.vars[state][d]) * rng.normal());
      total += raw[d];
    }
    std::vector<double> session = total > 0.0 ? projectToSimplex(raw) : projectToSimplex(model.means[state]);
    out.sequence.sessions.emplace_back(std::move(session));
  }
  return out;
}

inline Sequence sampleSequence(const ArchetypeModel& model, std::size_t length, std::uint64_t seed) {
  return sampleWithStates(model, length, seed).sequence;
}

}  // namespace archetype
