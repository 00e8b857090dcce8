#pragma once

// Synthetic corpora drawn from known left-right archetype models, used as
// ground truth for recovery and benchmark checks.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "archetype/cluster.hpp"
#include "archetype/common.hpp"
#include "archetype/hmm.hpp"
#include "archetype/sequence.hpp"

namespace archetype {

struct SynthSpec {
  std::size_t clusters = 3;
  std::size_t states = 4;
  std::size_t dims = 5;
  std::size_t sequences = 300;
  std::size_t minLen = 30;
  std::size_t maxLen = 50;
  /// Minimum pairwise L-infinity distance between any two state means.
  double separation = 0.5;
  /// Per-component emission variance of the generator.
  double noiseVar = 4e-4;
  double selfLoopMin = 0.5;
  std::uint64_t seed = 0;
};

struct SyntheticCorpus {
  Corpus corpus;
  ModelSet truth;
  std::vector<std::size_t> labels;
};

namespace detail {

/// Points of the simplex lattice with denominator `d`.
inline void latticePoints(std::size_t dims, std::size_t d, std::vector<std::vector<double>>& out) {
  std::vector<std::size_t> parts(dims, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == dims) {
      parts[pos] = left;
      std::vector<double> p(dims);
      for (std::size_t i = 0; i < dims; ++i) p[i] = static_cast<double>(parts[i]) / static_cast<double>(d);
      out.push_back(std::move(p));
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      parts[pos] = v;
      rec(pos + 1, left - v);
    }
  };
  rec(0, d);
}

/// Greedily picks `count` simplex points with pairwise L-infinity distance at
/// least `separation`, preferring coarse lattice points (vertices, then
/// midpoints, ...). Throws if the lattice cannot supply enough points.
inline std::vector<std::vector<double>> separatedMeans(std::size_t count, std::size_t dims,
                                                       double separation, Rng& rng) {
  std::vector<std::vector<double>> chosen;
  std::set<std::vector<double>> seen;
  for (std::size_t d = 1; d <= 6 && chosen.size() < count; ++d) {
    std::vector<std::vector<double>> tier;
    latticePoints(dims, d, tier);
    rng.shuffle(tier);
    for (auto& p : tier) {
      if (chosen.size() == count) break;
      if (!seen.insert(p).second) continue;
      bool ok = true;
      for (const auto& q : chosen) {
        if (linfDistance(p, q) < separation) {
          ok = false;
          break;
        }
      }
      if (ok) chosen.push_back(std::move(p));
    }
  }
  if (chosen.size() < count) {
    throw UsageError("generateSyntheticCorpus: cannot place " + std::to_string(count) +
                     " state means with separation " + std::to_string(separation) + " on the " +
                     std::to_string(dims) + "-simplex");
  }
  rng.shuffle(chosen);
  return chosen;
}

}  // namespace detail

inline SyntheticCorpus generateSyntheticCorpus(const SynthSpec& spec) {
  if (!(spec.separation > 0.0)) throw UsageError("generateSyntheticCorpus: separation must be > 0");
  if (spec.clusters == 0 || spec.states == 0 || spec.dims < 2 || spec.sequences == 0) {
    throw UsageError("generateSyntheticCorpus: counts must be positive (dims >= 2)");
  }
  if (spec.minLen == 0 || spec.minLen > spec.maxLen) {
    throw UsageError("generateSyntheticCorpus: need 1 <= minLen <= maxLen");
  }
  if (!(spec.selfLoopMin >= 0.0 && spec.selfLoopMin < 1.0)) {
    throw UsageError("generateSyntheticCorpus: selfLoopMin must lie in [0, 1)");
  }
  Rng rng(spec.seed);
  const auto means = detail::separatedMeans(spec.clusters * spec.states, spec.dims, spec.separation, rng);

  SyntheticCorpus out;
  out.truth.cfg.clusters = spec.clusters;
  out.truth.cfg.states = spec.states;
  out.truth.cfg.seed = spec.seed;
  out.truth.cfg.initVar = spec.noiseVar;
  out.truth.cfg.varFloor = std::min(spec.noiseVar, kDefaultVarFloor);
  const std::size_t k = spec.states;
  for (std::size_t c = 0; c < spec.clusters; ++c) {
    ArchetypeModel model;
    model.leftRight = true;
    model.prior = detail::randomDistribution(rng, k);
    model.trans = Matrix(k, k);
    for (std::size_t r = 0; r < k; ++r) {
      if (r + 1 == k) {
        model.trans(r, r) = 1.0;
        continue;
      }
      const double self = rng.uniform(std::max(spec.selfLoopMin, 0.5), 0.95);
      const auto rest = detail::randomDistribution(rng, k - r - 1);
      model.trans(r, r) = self;
      for (std::size_t next = r + 1; next < k; ++next) model.trans(r, next) = (1.0 - self) * rest[next - r - 1];
    }
    for (std::size_t s = 0; s < k; ++s) model.means.push_back(means[c * k + s]);
    model.vars.assign(k, std::vector<double>(spec.dims, spec.noiseVar));
    out.truth.models.push_back(std::move(model));
  }

  out.labels.resize(spec.sequences);
  for (std::size_t i = 0; i < spec.sequences; ++i) out.labels[i] = i % spec.clusters;
  rng.shuffle(out.labels);
  for (std::size_t i = 0; i < spec.sequences; ++i) {
    const std::size_t length = spec.minLen + rng.index(spec.maxLen - spec.minLen + 1);
    auto draw = sampleWithStates(out.truth.models[out.labels[i]], length, rng.next(),
                                 "seq" + std::to_string(i));
    out.corpus.push_back(std::move(draw.sequence));
  }
  return out;
}

/// One-to-one relabeling of predicted clusters maximizing agreement with the
/// truth: perm[predicted] = truth.
inline std::vector<std::size_t> bestPermutation(const std::vector<std::size_t>& truth,
                                                const std::vector<std::size_t>& predicted,
                                                std::size_t clusters) {
  std::vector<std::vector<std::size_t>> confusion(clusters, std::vector<std::size_t>(clusters, 0));
  for (std::size_t i = 0; i < truth.size(); ++i) ++confusion.at(predicted[i]).at(truth[i]);
  std::vector<std::size_t> perm(clusters), best;
  for (std::size_t i = 0; i < clusters; ++i) perm[i] = i;
  std::size_t bestHits = 0;
  do {
    std::size_t hits = 0;
    for (std::size_t p = 0; p < clusters; ++p) hits += confusion[p][perm[p]];
    if (best.empty() || hits > bestHits) {
      bestHits = hits;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline double bestPermutationAccuracy(const std::vector<std::size_t>& truth,
                                      const std::vector<std::size_t>& predicted, std::size_t clusters) {
  if (truth.size() != predicted.size()) throw UsageError("accuracy: size mismatch");
  if (truth.empty()) return 1.0;
  const auto perm = bestPermutation(truth, predicted, clusters);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += perm[predicted[i]] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

}  // namespace archetype
