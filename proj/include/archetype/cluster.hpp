#pragma once

// Joint hard-EM clustering of sequences into archetypes, each archetype
// carrying its own Gaussian HMM.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "archetype/common.hpp"
#include "archetype/hmm.hpp"
#include "archetype/sequence.hpp"

namespace archetype {

/// How initial archetype means are chosen.
///  - SharedMeans: every archetype starts from one global k-means over all
///    sessions, jittered by 1e-3 per archetype.
///  - SequencePartition: sequences are first grouped by the histogram of their
///    sessions over a global k-means codebook, then each group gets its own
///    session k-means.
enum class InitStrategy { SharedMeans, SequencePartition };

struct TrainConfig {
  std::size_t clusters = 4;
  std::size_t states = 5;
  std::size_t maxIter = 100;
  double llTol = 1e-4;
  double reassignFrac = 0.01;
  bool leftRight = true;
  bool learnVariance = false;
  std::uint64_t seed = 0;
  std::size_t innerBWIter = 10;
  double innerTol = 1e-8;
  double initVar = 0.01;
  double varFloor = kDefaultVarFloor;
  InitStrategy init = InitStrategy::SequencePartition;
  std::size_t threads = 1;

  void validate() const {
    if (clusters < 1) throw UsageError("TrainConfig: clusters must be >= 1");
    if (states < 1) throw UsageError("TrainConfig: states must be >= 1");
    if (!(reassignFrac > 0.0 && reassignFrac < 1.0)) {
      throw UsageError("TrainConfig: reassignFrac must lie in (0, 1)");
    }
    if (!(initVar >= varFloor)) throw UsageError("TrainConfig: initVar below varFloor");
  }

  FitConfig innerFit() const {
    FitConfig fit;
    fit.maxIter = innerBWIter;
    fit.tol = innerTol;
    fit.learnVariance = learnVariance;
    fit.varFloor = varFloor;
    fit.threads = threads;
    return fit;
  }
};

struct ModelSet {
  std::vector<ArchetypeModel> models;
  TrainConfig cfg;

  std::size_t numArchetypes() const { return models.size(); }
  std::size_t numStates() const { return models.empty() ? 0 : models.front().numStates(); }
  std::size_t dim() const { return models.empty() ? 0 : models.front().dim(); }
  bool leftRight() const { return models.empty() || models.front().leftRight; }

  bool operator==(const ModelSet& o) const { return models == o.models; }

  void validate() const {
    if (models.empty()) throw UsageError("ModelSet: no archetypes");
    for (const auto& m : models) {
      m.validate(std::min(cfg.varFloor, kDefaultVarFloor));
      if (m.numStates() != numStates() || m.dim() != dim() || m.leftRight != leftRight()) {
        throw UsageError("ModelSet: archetypes disagree on K, M or transition structure");
      }
    }
  }
};

struct Assignment {
  std::size_t archetype = 0;
  double logLik = kNegInf;
  StatePath path;

  bool operator==(const Assignment&) const = default;
};

enum class StopReason { LogLikTolerance, MaxIterations, FewReassignments };

inline const char* toString(StopReason r) {
  switch (r) {
    case StopReason::LogLikTolerance: return "loglik-tolerance";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::FewReassignments: return "few-reassignments";
  }
  return "unknown";
}

struct OuterIteration {
  /// Sum of per-sequence log-likelihoods under the refit models with the
  /// previous assignment (the value the reassignment step starts from).
  double preAssignLogLik = kNegInf;
  /// Sum right after reassignment, before any empty-cluster repair.
  double assignedLogLik = kNegInf;
  /// Sum after repair; equals assignedLogLik when no repair happened.
  double totalLogLik = kNegInf;
  std::size_t reassigned = 0;
  std::size_t repairedClusters = 0;
  std::vector<std::size_t> clusterSizes;
  /// Inner Baum-Welch histories, one per archetype (empty on iteration 0).
  std::vector<std::vector<double>> innerHistories;

  bool operator==(const OuterIteration&) const = default;
};

struct TrainReport {
  std::vector<OuterIteration> iterations;
  StopReason stopReason = StopReason::MaxIterations;
  std::size_t emptyClusterEvents = 0;
  std::size_t emptyStateEvents = 0;

  double finalLogLik() const { return iterations.empty() ? kNegInf : iterations.back().totalLogLik; }

  bool operator==(const TrainReport&) const = default;
};

struct TrainResult {
  ModelSet models;
  std::vector<Assignment> assignments;
  TrainReport report;
};

/// Lloyd's k-means over individual sessions with seeded farthest-point
/// seeding. Ties go to the lowest index.
inline std::vector<std::vector<double>> kmeansSessions(std::span<const SessionVector> sessions,
                                                       std::size_t k, std::uint64_t seed,
                                                       std::size_t maxIter = 300) {
  if (k == 0) throw UsageError("kmeansSessions: K must be >= 1");
  {
    std::vector<std::vector<double>> distinct;
    distinct.reserve(sessions.size());
    for (const auto& s : sessions) distinct.emplace_back(s.values().begin(), s.values().end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < k) {
      throw UsageError("kmeansSessions: " + std::to_string(distinct.size()) +
                       " distinct sessions, need at least " + std::to_string(k));
    }
  }
  const std::size_t n = sessions.size();
  Rng rng(seed);
  std::vector<std::vector<double>> centers;
  const std::size_t first = rng.index(n);
  centers.emplace_back(sessions[first].values().begin(), sessions[first].values().end());
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = squaredDistance(sessions[i].values(), centers[0]);
  while (centers.size() < k) {
    std::size_t pick = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (nearest[i] > nearest[pick]) pick = i;
    }
    centers.emplace_back(sessions[pick].values().begin(), sessions[pick].values().end());
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], squaredDistance(sessions[i].values(), centers.back()));
    }
  }

  const std::size_t m = centers.front().size();
  std::vector<std::size_t> label(n, k);
  for (std::size_t iter = 0; iter < maxIter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double bestDist = squaredDistance(sessions[i].values(), centers[0]);
      for (std::size_t c = 1; c < k; ++c) {
        const double d = squaredDistance(sessions[i].values(), centers[c]);
        if (d < bestDist) {
          bestDist = d;
          best = c;
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sums(k, std::vector<double>(m, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[label[i]];
      for (std::size_t d = 0; d < m; ++d) sums[label[i]][d] += sessions[i][d];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < m; ++d) centers[c][d] = sums[c][d] / static_cast<double>(counts[c]);
    }
  }
  return centers;
}

namespace detail {

inline std::vector<SessionVector> allSessions(std::span<const Sequence> data) {
  std::vector<SessionVector> out;
  for (const auto& seq : data) out.insert(out.end(), seq.sessions.begin(), seq.sessions.end());
  return out;
}

inline std::vector<double> randomDistribution(Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& v : w) {
    v = rng.uniform(0.05, 1.0);
    total += v;
  }
  for (auto& v : w) v /= total;
  return w;
}

inline ArchetypeModel chainWithMeans(Rng& rng, const std::vector<std::vector<double>>& means,
                                     const TrainConfig& cfg) {
  const std::size_t k = means.size();
  ArchetypeModel model;
  model.leftRight = cfg.leftRight;
  model.prior = randomDistribution(rng, k);
  model.trans = Matrix(k, k);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t first = cfg.leftRight ? r : 0;
    const auto row = randomDistribution(rng, k - first);
    for (std::size_t c = first; c < k; ++c) model.trans(r, c) = row[c - first];
  }
  model.means = means;
  model.vars.assign(k, std::vector<double>(means.front().size(), cfg.initVar));
  return model;
}

/// Per-sequence, per-archetype log-likelihoods.
inline Matrix logLikTable(std::span<const Sequence> data, const ModelSet& ms, std::size_t threads) {
  Matrix table(data.size(), ms.numArchetypes());
  parallelFor(data.size(), threads, [&](std::size_t i) {
    for (std::size_t c = 0; c < ms.numArchetypes(); ++c) {
      table(i, c) = forwardLogLik(data[i], ms.models[c]);
    }
  });
  return table;
}

inline std::vector<Assignment> argmaxAssignments(const Matrix& table) {
  std::vector<Assignment> out(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < table.cols(); ++c) {
      if (table(i, c) > table(i, best)) best = c;
    }
    out[i].archetype = best;
    out[i].logLik = table(i, best);
  }
  return out;
}

inline std::vector<std::size_t> clusterSizes(const std::vector<Assignment>& a, std::size_t c) {
  std::vector<std::size_t> sizes(c, 0);
  for (const auto& x : a) ++sizes[x.archetype];
  return sizes;
}

/// Moves the worst-fitting sequence (from a cluster that can spare one) into
/// each empty cluster. Returns the number of clusters repaired.
inline std::size_t repairEmptyClusters(std::vector<Assignment>& assign, const Matrix& table) {
  const std::size_t c = table.cols();
  std::size_t repaired = 0;
  for (std::size_t target = 0; target < c; ++target) {
    auto sizes = clusterSizes(assign, c);
    if (sizes[target] != 0) continue;
    std::size_t worst = assign.size();
    for (std::size_t i = 0; i < assign.size(); ++i) {
      if (sizes[assign[i].archetype] < 2) continue;
      if (worst == assign.size() || assign[i].logLik < assign[worst].logLik) worst = i;
    }
    if (worst == assign.size()) break;
    assign[worst].archetype = target;
    assign[worst].logLik = table(worst, target);
    ++repaired;
  }
  return repaired;
}

inline double totalLogLik(const std::vector<Assignment>& a) {
  double total = 0.0;
  for (const auto& x : a) total += x.logLik;
  return total;
}

}  // namespace detail

namespace detail {

inline std::size_t nearestCenter(std::span<const double> x, const std::vector<std::vector<double>>& centers) {
  std::size_t best = 0;
  double bestDist = squaredDistance(x, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    const double d = squaredDistance(x, centers[c]);
    if (d < bestDist) {
      bestDist = d;
      best = c;
    }
  }
  return best;
}

/// Orders state means so that a forward-only chain can visit them in the
/// order the data does. prec(a, b) counts sequences in which some session
/// nearest to a occurs before some session nearest to b. Centers are ranked
/// by pairwise wins minus losses, then by net precedence count; remaining
/// ties keep k-means order.
inline void orderByPrecedence(std::vector<std::vector<double>>& centers,
                              std::span<const Sequence> data) {
  const std::size_t k = centers.size();
  Matrix prec(k, k);
  std::vector<char> seen(k), counted(k * k);
  for (const auto& seq : data) {
    std::fill(seen.begin(), seen.end(), 0);
    std::fill(counted.begin(), counted.end(), 0);
    for (const auto& x : seq.sessions) {
      const std::size_t b = nearestCenter(x.values(), centers);
      for (std::size_t a = 0; a < k; ++a) {
        if (a != b && seen[a] && !counted[a * k + b]) {
          counted[a * k + b] = 1;
          prec(a, b) += 1.0;
        }
      }
      seen[b] = 1;
    }
  }
  std::vector<int> wins(k, 0);
  std::vector<double> net(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      if (prec(a, b) > prec(b, a)) ++wins[a];
      if (prec(a, b) < prec(b, a)) --wins[a];
      net[a] += prec(a, b) - prec(b, a);
    }
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return wins[a] != wins[b] ? wins[a] > wins[b] : net[a] > net[b];
  });
  std::vector<std::vector<double>> sorted;
  sorted.reserve(k);
  for (std::size_t c : order) sorted.push_back(std::move(centers[c]));
  centers = std::move(sorted);
}

inline std::size_t distinctCount(std::span<const SessionVector> sessions) {
  std::vector<std::vector<double>> distinct;
  for (const auto& s : sessions) distinct.emplace_back(s.values().begin(), s.values().end());
  std::sort(distinct.begin(), distinct.end());
  return static_cast<std::size_t>(std::unique(distinct.begin(), distinct.end()) - distinct.begin());
}

/// Groups sequences through a session codebook: codebook entries are merged
/// by average-linkage on their sequence co-occurrence (Jaccard similarity)
/// until `clusters` groups remain, and each sequence joins the group holding
/// most of its sessions. Returns an empty vector when the data cannot
/// support `clusters` groups.
inline std::vector<std::size_t> partitionSequences(std::span<const Sequence> data,
                                                   std::span<const SessionVector> sessions,
                                                   const TrainConfig& cfg) {
  const std::size_t codes = std::min(cfg.clusters * cfg.states, distinctCount(sessions));
  if (codes < cfg.clusters) return {};
  const auto codebook = kmeansSessions(sessions, codes, cfg.seed + 1);

  std::vector<std::vector<std::size_t>> counts(data.size(), std::vector<std::size_t>(codes, 0));
  std::vector<double> occurrence(codes, 0.0);
  Matrix cooccurrence(codes, codes);
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (const auto& x : data[i].sessions) ++counts[i][nearestCenter(x.values(), codebook)];
    for (std::size_t a = 0; a < codes; ++a) {
      if (!counts[i][a]) continue;
      occurrence[a] += 1.0;
      for (std::size_t b = 0; b < codes; ++b) {
        if (counts[i][b]) cooccurrence(a, b) += 1.0;
      }
    }
  }
  Matrix similarity(codes, codes);
  for (std::size_t a = 0; a < codes; ++a) {
    for (std::size_t b = 0; b < codes; ++b) {
      const double uni = occurrence[a] + occurrence[b] - cooccurrence(a, b);
      similarity(a, b) = uni > 0.0 ? cooccurrence(a, b) / uni : 0.0;
    }
  }

  std::vector<std::vector<std::size_t>> groups(codes);
  for (std::size_t a = 0; a < codes; ++a) groups[a] = {a};
  while (groups.size() > cfg.clusters) {
    std::size_t bestA = 0, bestB = 1;
    double best = -1.0;
    for (std::size_t ga = 0; ga < groups.size(); ++ga) {
      for (std::size_t gb = ga + 1; gb < groups.size(); ++gb) {
        double total = 0.0;
        for (std::size_t a : groups[ga]) {
          for (std::size_t b : groups[gb]) total += similarity(a, b);
        }
        total /= static_cast<double>(groups[ga].size() * groups[gb].size());
        if (total > best) {
          best = total;
          bestA = ga;
          bestB = gb;
        }
      }
    }
    groups[bestA].insert(groups[bestA].end(), groups[bestB].begin(), groups[bestB].end());
    groups.erase(groups.begin() + static_cast<std::ptrdiff_t>(bestB));
  }

  std::vector<std::size_t> codeGroup(codes);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (std::size_t a : groups[g]) codeGroup[a] = g;
  }
  std::vector<std::size_t> group(data.size(), 0);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::vector<std::size_t> votes(groups.size(), 0);
    for (std::size_t a = 0; a < codes; ++a) votes[codeGroup[a]] += counts[i][a];
    group[i] = static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
  }
  return group;
}

/// Restarts an archetype from a single sequence: state means from k-means on
/// its sessions, uniform prior and uniform allowed transitions. Variances are
/// kept. Sequences with fewer than K distinct sessions leave the model as is.
inline void reseedFromSequence(ArchetypeModel& model, const Sequence& seq, const TrainConfig& cfg) {
  const std::size_t k = model.numStates();
  if (distinctCount(seq.sessions) < k) return;
  auto means = kmeansSessions(seq.sessions, k, cfg.seed);
  orderByPrecedence(means, std::span<const Sequence>(&seq, 1));
  model.means = std::move(means);
  model.prior.assign(k, 1.0 / static_cast<double>(k));
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t first = model.leftRight ? r : 0;
    for (std::size_t col = 0; col < k; ++col) {
      model.trans(r, col) = col < first ? 0.0 : 1.0 / static_cast<double>(k - first);
    }
  }
}

/// Repairs empty clusters and re-seeds each repaired archetype from the
/// sequence it received.
inline std::size_t repairAndReseed(std::span<const Sequence> data, std::vector<Assignment>& assign,
                                   const Matrix& table, ModelSet& ms, const TrainConfig& cfg) {
  const auto before = clusterSizes(assign, table.cols());
  const std::size_t repaired = repairEmptyClusters(assign, table);
  if (repaired == 0) return 0;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    const std::size_t c = assign[i].archetype;
    if (before[c] != 0) continue;
    reseedFromSequence(ms.models[c], data[i], cfg);
    assign[i].logLik = forwardLogLik(data[i], ms.models[c]);
  }
  return repaired;
}

}  // namespace detail

/// Initial archetypes (see InitStrategy). State means are ordered by how the
/// data moves between them; priors and transitions are random.
inline ModelSet initModelSet(std::span<const Sequence> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw UsageError("initModelSet: no data");
  const auto sessions = detail::allSessions(data);
  auto centers = kmeansSessions(sessions, cfg.states, cfg.seed);
  detail::orderByPrecedence(centers, data);

  std::vector<std::vector<std::vector<double>>> perArchetype(cfg.clusters, centers);
  if (cfg.init == InitStrategy::SequencePartition && cfg.clusters > 1) {
    const auto group = detail::partitionSequences(data, sessions, cfg);
    for (std::size_t c = 0; c < cfg.clusters && !group.empty(); ++c) {
      std::vector<Sequence> members;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (group[i] == c) members.push_back(data[i]);
      }
      const auto memberSessions = detail::allSessions(members);
      if (detail::distinctCount(memberSessions) < cfg.states) continue;
      perArchetype[c] = kmeansSessions(memberSessions, cfg.states, cfg.seed + 3 + c);
      detail::orderByPrecedence(perArchetype[c], members);
    }
  }

  Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  ModelSet ms;
  ms.cfg = cfg;
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    auto& means = perArchetype[c];
    if (c > 0) {
      for (auto& mean : means) {
        for (auto& v : mean) v += rng.uniform(-1e-3, 1e-3);
      }
    }
    ms.models.push_back(detail::chainWithMeans(rng, means, cfg));
  }
  return ms;
}

/// Assigns every sequence to its maximum-likelihood archetype.
inline std::vector<Assignment> assignAll(std::span<const Sequence> data, const ModelSet& ms,
                                         std::size_t threads = 1) {
  return detail::argmaxAssignments(detail::logLikTable(data, ms, threads));
}

/// Fills in the Viterbi path of every assignment.
inline void decodePaths(std::span<const Sequence> data, const ModelSet& ms,
                        std::vector<Assignment>& assignments, std::size_t threads = 1) {
  if (assignments.size() != data.size()) throw UsageError("decodePaths: size mismatch");
  parallelFor(data.size(), threads, [&](std::size_t i) {
    assignments[i].path = viterbi(data[i], ms.models.at(assignments[i].archetype)).first;
  });
}

inline std::vector<Sequence> membersOf(std::span<const Sequence> data,
                                       const std::vector<Assignment>& assign, std::size_t c) {
  std::vector<Sequence> out;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (assign[i].archetype == c) out.push_back(data[i]);
  }
  return out;
}

/// Alternates archetype reassignment and per-archetype Baum-Welch refits
/// until the log-likelihood stalls, the iteration budget runs out, or fewer
/// than reassignFrac of the sequences change archetype.
inline TrainResult train(std::span<const Sequence> data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() < cfg.clusters) {
    throw UsageError("train: " + std::to_string(cfg.clusters) + " clusters requested for " +
                     std::to_string(data.size()) + " sequences");
  }
  TrainResult result;
  result.models = initModelSet(data, cfg);
  const std::size_t n = data.size();
  const std::size_t c = cfg.clusters;

  Matrix table = detail::logLikTable(data, result.models, cfg.threads);
  result.assignments = detail::argmaxAssignments(table);
  {
    OuterIteration first;
    first.assignedLogLik = detail::totalLogLik(result.assignments);
    first.reassigned = n;
    first.repairedClusters = detail::repairAndReseed(data, result.assignments, table, result.models, cfg);
    first.totalLogLik = detail::totalLogLik(result.assignments);
    first.clusterSizes = detail::clusterSizes(result.assignments, c);
    result.report.emptyClusterEvents += first.repairedClusters;
    result.report.iterations.push_back(std::move(first));
  }

  const FitConfig fitCfg = cfg.innerFit();
  for (std::size_t iter = 1;; ++iter) {
    OuterIteration rec;
    rec.innerHistories.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
      const auto members = membersOf(data, result.assignments, k);
      auto fit = baumWelchFit(members, result.models.models[k], fitCfg);
      result.models.models[k] = std::move(fit.model);
      rec.innerHistories[k] = std::move(fit.history);
      result.report.emptyStateEvents += fit.emptyStateEvents;
    }

    table = detail::logLikTable(data, result.models, cfg.threads);
    rec.preAssignLogLik = 0.0;
    for (std::size_t i = 0; i < n; ++i) rec.preAssignLogLik += table(i, result.assignments[i].archetype);

    auto next = detail::argmaxAssignments(table);
    rec.assignedLogLik = detail::totalLogLik(next);
    for (std::size_t i = 0; i < n; ++i) {
      if (next[i].archetype != result.assignments[i].archetype) ++rec.reassigned;
    }
    rec.repairedClusters = detail::repairAndReseed(data, next, table, result.models, cfg);
    result.report.emptyClusterEvents += rec.repairedClusters;
    result.assignments = std::move(next);
    rec.totalLogLik = detail::totalLogLik(result.assignments);
    rec.clusterSizes = detail::clusterSizes(result.assignments, c);

    const double prev = result.report.iterations.back().totalLogLik;
    const double improvement = (rec.totalLogLik - prev) / std::max(std::abs(prev), 1e-300);
    result.report.iterations.push_back(std::move(rec));
    const auto& last = result.report.iterations.back();

    if (iter >= cfg.maxIter) {
      result.report.stopReason = StopReason::MaxIterations;
      break;
    }
    // A re-seeded archetype gets at least one refit before training stops.
    if (last.repairedClusters > 0) continue;
    if (static_cast<double>(last.reassigned) < cfg.reassignFrac * static_cast<double>(n)) {
      result.report.stopReason = StopReason::FewReassignments;
      break;
    }
    if (improvement < cfg.llTol) {
      result.report.stopReason = StopReason::LogLikTolerance;
      break;
    }
  }
  return result;
}

struct SelectionPoint {
  std::size_t clusters = 0;
  double logLik = kNegInf;
};

/// Final total log-likelihood for each candidate archetype count, best of
/// `restarts` seeds (seed, seed+1, ...). Picking the elbow is left to the
/// caller.
inline std::vector<SelectionPoint> modelSelectionCurve(std::span<const Sequence> data,
                                                       const TrainConfig& cfgTemplate,
                                                       std::span<const std::size_t> clusterCounts,
                                                       std::size_t restarts = 1) {
  if (restarts == 0) throw UsageError("modelSelectionCurve: restarts must be >= 1");
  std::vector<SelectionPoint> curve;
  for (std::size_t count : clusterCounts) {
    SelectionPoint point{count, kNegInf};
    for (std::size_t r = 0; r < restarts; ++r) {
      TrainConfig cfg = cfgTemplate;
      cfg.clusters = count;
      cfg.seed = cfgTemplate.seed + r;
      point.logLik = std::max(point.logLik, train(data, cfg).report.finalLogLik());
    }
    curve.push_back(point);
  }
  return curve;
}

/// Symmetric KL divergence between two diagonal Gaussians.
inline double symmetricGaussianKl(std::span<const double> meanA, std::span<const double> varA,
                                  std::span<const double> meanB, std::span<const double> varB) {
  double total = 0.0;
  for (std::size_t d = 0; d < meanA.size(); ++d) {
    const double diff = meanA[d] - meanB[d];
    total += 0.5 * (varA[d] / varB[d] + varB[d] / varA[d] - 2.0) +
             0.5 * diff * diff * (1.0 / varA[d] + 1.0 / varB[d]);
  }
  return total;
}

/// Per archetype, the smallest symmetric KL divergence between any two of its
/// state emissions. Small values flag redundant states.
inline std::vector<double> stateRedundancy(const ModelSet& ms) {
  if (ms.numStates() < 2) throw UsageError("stateRedundancy: needs at least 2 states");
  std::vector<double> out;
  for (const auto& model : ms.models) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < model.numStates(); ++a) {
      for (std::size_t b = a + 1; b < model.numStates(); ++b) {
        best = std::min(best, symmetricGaussianKl(model.means[a], model.vars[a], model.means[b],
                                                  model.vars[b]));
      }
    }
    out.push_back(best);
  }
  return out;
}

}  // namespace archetype
