#pragma once

// Held-out evaluation (future-session prediction, perplexity), archetype
// separation tests, subgroup refits with likelihood ratios, and dwell-time
// statistics.

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "archetype/baselines.hpp"
#include "archetype/cluster.hpp"
#include "archetype/common.hpp"
#include "archetype/hmm.hpp"
#include "archetype/sequence.hpp"

namespace archetype {

inline constexpr double kMeanClamp = 1e-9;

/// Jensen-Shannon divergence in bits, so the value lies in [0, 1]. Inputs
/// must be non-negative with unit sum; zero components contribute nothing.
inline double jsDivergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw UsageError("jsDivergence: dimension mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double mix = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) total += 0.5 * p[i] * std::log2(p[i] / mix);
    if (q[i] > 0.0) total += 0.5 * q[i] * std::log2(q[i] / mix);
  }
  return std::clamp(total, 0.0, 1.0);
}

inline double jsDivergence(const SessionVector& p, const SessionVector& q) {
  return jsDivergence(p.values(), q.values());
}

enum class Method { Ghmm, GCluster, Var, DistanceHmm };

inline const char* toString(Method m) {
  switch (m) {
    case Method::Ghmm: return "ghmm";
    case Method::GCluster: return "gcluster";
    case Method::Var: return "var";
    case Method::DistanceHmm: return "dhmm";
  }
  return "?";
}

inline Method parseMethod(const std::string& name) {
  if (name == "ghmm") return Method::Ghmm;
  if (name == "gcluster") return Method::GCluster;
  if (name == "var") return Method::Var;
  if (name == "dhmm") return Method::DistanceHmm;
  throw UsageError("unknown method '" + name + "' (expected ghmm, gcluster, var or dhmm)");
}

struct SplitSpec {
  double trainFrac = 0.9;

  void validate() const {
    if (!(trainFrac > 0.0 && trainFrac < 1.0)) throw UsageError("SplitSpec: trainFrac must lie in (0, 1)");
  }

  /// Number of leading sessions used for training; 0 when the sequence is
  /// too short for both parts to be non-empty.
  std::size_t trainLength(std::size_t t) const {
    const auto n = static_cast<std::size_t>(std::floor(trainFrac * static_cast<double>(t) + 1e-9));
    return n >= 1 && n < t ? n : 0;
  }
};

/// Trains `method` and returns the model set plus training assignments.
/// VAR has no model set; callers handle it separately.
inline TrainResult trainMethod(std::span<const Sequence> data, Method method, const TrainConfig& cfg) {
  switch (method) {
    case Method::Ghmm: return train(data, cfg);
    case Method::GCluster: return gclusterTrain(data, cfg);
    case Method::DistanceHmm: {
      auto r = distanceHmmTrain(data, cfg);
      TrainResult out;
      out.models = std::move(r.models);
      out.assignments = std::move(r.assignments);
      return out;
    }
    case Method::Var: break;
  }
  throw UsageError("trainMethod: VAR does not produce archetype models");
}

struct SequencePrediction {
  std::string id;
  std::size_t testSessions = 0;
  double meanJs = 0.0;
};

struct PredictionReport {
  Method method = Method::Ghmm;
  /// Mean JS divergence over every test session of every sequence.
  double meanJs = 0.0;
  std::size_t testSessions = 0;
  std::vector<SequencePrediction> perSequence;
  /// Sequences too short to split.
  std::size_t excluded = 0;
};

namespace detail {

inline std::vector<std::vector<double>> clampedMeans(const ArchetypeModel& model) {
  std::vector<std::vector<double>> out;
  for (const auto& mean : model.means) out.push_back(projectToSimplex(mean, kMeanClamp));
  return out;
}

/// Indices of sequences long enough to split, and their prefixes.
inline std::vector<std::size_t> splittable(std::span<const Sequence> data, const SplitSpec& split,
                                           Corpus* prefixes) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t n = split.trainLength(data[i].length());
    if (n == 0) continue;
    kept.push_back(i);
    if (prefixes) {
      Sequence prefix = data[i];
      prefix.sessions.resize(n);
      prefixes->push_back(std::move(prefix));
    }
  }
  return kept;
}

inline PredictionReport summarize(Method method, std::span<const Sequence> data,
                                  const std::vector<std::size_t>& kept,
                                  const std::vector<std::vector<double>>& scores) {
  PredictionReport report;
  report.method = method;
  report.excluded = data.size() - kept.size();
  double total = 0.0;
  for (std::size_t k = 0; k < kept.size(); ++k) {
    SequencePrediction sp;
    sp.id = data[kept[k]].id;
    sp.testSessions = scores[k].size();
    for (double s : scores[k]) {
      sp.meanJs += s;
      total += s;
    }
    sp.meanJs /= static_cast<double>(sp.testSessions);
    report.testSessions += sp.testSessions;
    report.perSequence.push_back(std::move(sp));
  }
  report.meanJs = report.testSessions ? total / static_cast<double>(report.testSessions) : 0.0;
  return report;
}

}  // namespace detail

/// Scores the test part of every splittable sequence under fixed models.
/// archetypes[i] is sequence i's archetype from training. The training prefix
/// keeps its own Viterbi path; test sessions are decoded forward from the
/// last prefix state and compared with the decoded state's mean.
inline PredictionReport scoreFuturePrediction(const ModelSet& ms, std::span<const Sequence> data,
                                              std::span<const std::size_t> archetypes,
                                              const SplitSpec& split = {}, std::size_t threads = 1,
                                              Method method = Method::Ghmm) {
  split.validate();
  if (archetypes.size() != data.size()) throw UsageError("scoreFuturePrediction: size mismatch");
  const auto kept = detail::splittable(data, split, nullptr);
  std::vector<std::vector<std::vector<double>>> means;
  for (const auto& model : ms.models) means.push_back(detail::clampedMeans(model));
  std::vector<std::vector<double>> scores(kept.size());
  parallelFor(kept.size(), threads, [&](std::size_t k) {
    const auto& seq = data[kept[k]];
    const std::size_t n = split.trainLength(seq.length());
    const std::size_t c = archetypes[kept[k]];
    const auto& model = ms.models.at(c);
    std::span<const SessionVector> prefix(seq.sessions.data(), n);
    std::span<const SessionVector> rest(seq.sessions.data() + n, seq.length() - n);
    const auto prefixPath = viterbi(prefix, model).first;
    const auto testPath = viterbiContinue(rest, model, prefixPath.back()).first;
    for (std::size_t j = 0; j < rest.size(); ++j) {
      scores[k].push_back(jsDivergence(means[c][testPath[j]], rest[j].values()));
    }
  });
  return detail::summarize(method, data, kept, scores);
}

/// Trains on the leading trainFrac of every sequence and scores the
/// remaining sessions by JS divergence from the predicted session. VAR
/// forecasts from the last training session of each sequence.
inline PredictionReport futurePrediction(std::span<const Sequence> data, Method method,
                                         const TrainConfig& cfg, const SplitSpec& split = {}) {
  split.validate();
  Corpus prefixes;
  const auto kept = detail::splittable(data, split, &prefixes);
  if (kept.empty()) throw UsageError("futurePrediction: no sequence is long enough to split");

  if (method != Method::Var) {
    const auto trained = trainMethod(prefixes, method, cfg);
    std::vector<std::size_t> archetypes(data.size(), 0);
    for (std::size_t k = 0; k < kept.size(); ++k) archetypes[kept[k]] = trained.assignments[k].archetype;
    return scoreFuturePrediction(trained.models, data, archetypes, split, cfg.threads, method);
  }

  std::vector<std::vector<double>> scores(kept.size());
  parallelFor(kept.size(), cfg.threads, [&](std::size_t k) {
    const auto& seq = data[kept[k]];
    const std::size_t n = prefixes[k].length();
    const auto pred = varPredict(varFit(prefixes[k]), prefixes[k].sessions.back(), seq.length() - n);
    for (std::size_t j = n; j < seq.length(); ++j) scores[k].push_back(jsDivergence(pred[j - n], seq.sessions[j]));
  });
  return detail::summarize(method, data, kept, scores);
}

/// Negative mean over sequences of the best archetype log-likelihood
/// (natural log). Can be negative because densities exceed 1.
inline double perplexity(const ModelSet& ms, std::span<const Sequence> test, std::size_t threads = 1) {
  if (test.empty()) throw UsageError("perplexity: no test sequences");
  const auto assign = assignAll(test, ms, threads);
  double total = 0.0;
  for (const auto& a : assign) total += a.logLik;
  return -total / static_cast<double>(test.size());
}

/// Deterministic fold label for each sequence: a seeded shuffle dealt
/// round-robin.
inline std::vector<std::size_t> foldLabels(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2 || folds > n) {
    throw UsageError("foldLabels: need 2 <= folds <= " + std::to_string(n) + ", got " + std::to_string(folds));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::size_t> label(n);
  for (std::size_t k = 0; k < n; ++k) label[order[k]] = k % folds;
  return label;
}

/// Held-out perplexity of `method` for each of `folds` cross-validation
/// folds over whole sequences.
inline std::vector<double> crossValidatedPerplexity(std::span<const Sequence> data, Method method,
                                                    const TrainConfig& cfg, std::size_t folds) {
  if (method == Method::Var) throw UsageError("perplexity is not defined for the var method");
  const auto label = foldLabels(data.size(), folds, cfg.seed);
  std::vector<double> out;
  for (std::size_t f = 0; f < folds; ++f) {
    Corpus trainSet, testSet;
    for (std::size_t i = 0; i < data.size(); ++i) (label[i] == f ? testSet : trainSet).push_back(data[i]);
    out.push_back(perplexity(trainMethod(trainSet, method, cfg).models, testSet, cfg.threads));
  }
  return out;
}

struct TTestResult {
  double t = 0.0;
  double pValue = 1.0;
  std::size_t df = 0;
  /// The differences have zero variance; t is 0 or +-inf and p is 1 or 0.
  bool degenerate = false;
};

/// Paired two-sided t-test on x - y.
inline TTestResult pairedTTest(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("pairedTTest: length mismatch");
  if (x.size() < 2) throw UsageError("pairedTTest: need at least 2 pairs");
  const std::size_t n = x.size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = x[i] - y[i];
  const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double d : diff) ss += (d - mean) * (d - mean);
  TTestResult r;
  r.df = n - 1;
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const bool constant = std::all_of(diff.begin(), diff.end(), [&](double d) { return d == diff[0]; });
  if (constant || !(sd > 0.0)) {
    r.degenerate = true;
    if (mean == 0.0) {
      r.t = 0.0;
      r.pValue = 1.0;
    } else {
      r.t = mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.pValue = 0.0;
    }
    return r;
  }
  r.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(r.df));
  r.pValue = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  return r;
}

struct SeparationMatrix {
  /// p(a, b): test of log P(X|a) against log P(X|b) over members of a. NaN on
  /// the diagonal and in untestable rows.
  Matrix pValue;
  Matrix tStat;
  std::vector<std::vector<char>> degenerate;
  /// Archetypes with fewer than 2 members.
  std::vector<char> untestable;
};

inline SeparationMatrix archetypeSeparation(const ModelSet& ms, std::span<const Sequence> data,
                                            const std::vector<Assignment>& assignments,
                                            std::size_t threads = 1) {
  if (assignments.size() != data.size()) throw UsageError("archetypeSeparation: size mismatch");
  const std::size_t c = ms.numArchetypes();
  const Matrix table = detail::logLikTable(data, ms, threads);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  SeparationMatrix out{Matrix(c, c, nan), Matrix(c, c, nan),
                       std::vector<std::vector<char>>(c, std::vector<char>(c, 0)), std::vector<char>(c, 0)};
  for (std::size_t a = 0; a < c; ++a) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (assignments[i].archetype == a) members.push_back(i);
    }
    if (members.size() < 2) {
      out.untestable[a] = 1;
      continue;
    }
    for (std::size_t b = 0; b < c; ++b) {
      if (a == b) continue;
      std::vector<double> own, other;
      for (std::size_t i : members) {
        own.push_back(table(i, a));
        other.push_back(table(i, b));
      }
      const auto r = pairedTTest(own, other);
      out.pValue(a, b) = r.pValue;
      out.tStat(a, b) = r.t;
      out.degenerate[a][b] = r.degenerate;
    }
  }
  return out;
}

struct RefitConfig {
  std::size_t maxIter = 100;
  double tol = 1e-6;
  /// Also re-estimate emission means (and variances if learnVariance).
  bool refitEmissions = false;
  bool learnVariance = false;
  std::size_t threads = 1;

  FitConfig fit(double varFloor) const {
    FitConfig f;
    f.maxIter = maxIter;
    f.tol = tol;
    f.updateEmissions = refitEmissions;
    f.learnVariance = refitEmissions && learnVariance;
    f.varFloor = varFloor;
    f.threads = threads;
    return f;
  }
};

struct SubgroupRefit {
  std::string group;
  /// Empty where the subgroup has no member in that archetype.
  std::vector<std::optional<ArchetypeModel>> models;
  std::vector<std::size_t> members;
};

/// Re-estimates each archetype on the members carrying `group`. Emissions
/// stay fixed unless cfg.refitEmissions is set; memberships are not
/// recomputed.
inline SubgroupRefit refitSubgroup(const ModelSet& ms, std::span<const Sequence> data,
                                   const std::vector<Assignment>& assignments, const std::string& group,
                                   const RefitConfig& cfg = {}) {
  if (assignments.size() != data.size()) throw UsageError("refitSubgroup: size mismatch");
  SubgroupRefit out;
  out.group = group;
  out.models.resize(ms.numArchetypes());
  out.members.assign(ms.numArchetypes(), 0);
  const FitConfig fit = cfg.fit(ms.cfg.varFloor);
  for (std::size_t c = 0; c < ms.numArchetypes(); ++c) {
    std::vector<Sequence> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (assignments[i].archetype == c && data[i].group == group) members.push_back(data[i]);
    }
    out.members[c] = members.size();
    if (members.empty()) continue;
    out.models[c] = baumWelchFit(members, ms.models[c], fit).model;
  }
  return out;
}

/// exp(mean over sequences of log P(X|a) - log P(X|b)).
inline double likelihoodRatio(std::span<const Sequence> seqs, const ArchetypeModel& a, const ArchetypeModel& b) {
  if (seqs.empty()) throw UsageError("likelihoodRatio: no sequences");
  double total = 0.0;
  for (const auto& s : seqs) total += forwardLogLik(s, a) - forwardLogLik(s, b);
  return std::exp(total / static_cast<double>(seqs.size()));
}

inline std::string significanceStars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

struct GroupRatio {
  std::size_t members = 0;
  /// Odds that the group's members are better explained by their own refit.
  double ratio = 1.0;
  TTestResult test;
};

struct ArchetypeComparison {
  std::size_t archetype = 0;
  /// False when either group has no member in this archetype.
  bool comparable = false;
  GroupRatio a, b;
};

struct GroupComparison {
  std::string groupA, groupB;
  SubgroupRefit refitA, refitB;
  std::vector<ArchetypeComparison> archetypes;
};

/// Refits every archetype per group and compares each group's own refit with
/// the other group's on that group's members.
inline GroupComparison compareGroups(const ModelSet& ms, std::span<const Sequence> data,
                                     const std::vector<Assignment>& assignments, const std::string& groupA,
                                     const std::string& groupB, const RefitConfig& cfg = {}) {
  GroupComparison out;
  out.groupA = groupA;
  out.groupB = groupB;
  out.refitA = refitSubgroup(ms, data, assignments, groupA, cfg);
  out.refitB = refitSubgroup(ms, data, assignments, groupB, cfg);
  auto side = [&](std::size_t c, const std::string& group, const ArchetypeModel& own,
                  const ArchetypeModel& other) {
    std::vector<Sequence> members;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (assignments[i].archetype == c && data[i].group == group) members.push_back(data[i]);
    }
    GroupRatio r;
    r.members = members.size();
    r.ratio = likelihoodRatio(members, own, other);
    if (members.size() >= 2) {
      std::vector<double> x, y;
      for (const auto& s : members) {
        x.push_back(forwardLogLik(s, own));
        y.push_back(forwardLogLik(s, other));
      }
      r.test = pairedTTest(x, y);
    } else {
      r.test.degenerate = true;
    }
    return r;
  };
  for (std::size_t c = 0; c < ms.numArchetypes(); ++c) {
    ArchetypeComparison cmp;
    cmp.archetype = c;
    cmp.comparable = out.refitA.models[c].has_value() && out.refitB.models[c].has_value();
    if (cmp.comparable) {
      cmp.a = side(c, groupA, *out.refitA.models[c], *out.refitB.models[c]);
      cmp.b = side(c, groupB, *out.refitB.models[c], *out.refitA.models[c]);
    }
    out.archetypes.push_back(cmp);
  }
  return out;
}

struct StateDuration {
  /// Mean length of contiguous runs in this state; empty if never visited.
  std::optional<double> meanDwell;
  /// Fraction of the archetype's sequences that visit the state.
  double visitFraction = 0.0;
  /// Fraction of the archetype's sequences that start in the state.
  double startFraction = 0.0;
};

struct ArchetypeDurations {
  std::size_t members = 0;
  std::vector<StateDuration> states;
};

inline std::vector<ArchetypeDurations> stateDurationStats(const ModelSet& ms, std::span<const Sequence> data,
                                                          const std::vector<Assignment>& assignments) {
  if (assignments.size() != data.size()) throw UsageError("stateDurationStats: size mismatch");
  const std::size_t k = ms.numStates();
  std::vector<ArchetypeDurations> out(ms.numArchetypes());
  std::vector<std::vector<double>> dwellSum(out.size(), std::vector<double>(k, 0.0));
  std::vector<std::vector<std::size_t>> runs(out.size(), std::vector<std::size_t>(k, 0));
  std::vector<std::vector<std::size_t>> visits(out.size(), std::vector<std::size_t>(k, 0));
  std::vector<std::vector<std::size_t>> starts(out.size(), std::vector<std::size_t>(k, 0));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& a = assignments[i];
    if (a.path.size() != data[i].length()) {
      throw UsageError("stateDurationStats: assignment " + std::to_string(i) + " carries no Viterbi path");
    }
    const std::size_t c = a.archetype;
    ++out.at(c).members;
    ++starts[c][a.path.front()];
    std::vector<char> seen(k, 0);
    for (std::size_t j = 0; j < a.path.size();) {
      std::size_t end = j;
      while (end < a.path.size() && a.path[end] == a.path[j]) ++end;
      dwellSum[c][a.path[j]] += static_cast<double>(end - j);
      ++runs[c][a.path[j]];
      seen[a.path[j]] = 1;
      j = end;
    }
    for (std::size_t s = 0; s < k; ++s) visits[c][s] += seen[s];
  }
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c].states.resize(k);
    const double members = static_cast<double>(std::max<std::size_t>(out[c].members, 1));
    for (std::size_t s = 0; s < k; ++s) {
      auto& st = out[c].states[s];
      if (runs[c][s] > 0) st.meanDwell = dwellSum[c][s] / static_cast<double>(runs[c][s]);
      st.visitFraction = static_cast<double>(visits[c][s]) / members;
      st.startFraction = static_cast<double>(starts[c][s]) / members;
    }
  }
  return out;
}

}  // namespace archetype
