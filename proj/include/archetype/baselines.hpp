#pragma once

// Comparison methods: single-Gaussian clusters, per-sequence VAR(1), and
// per-sequence HMMs clustered by k-medoids on a symmetric KL distance.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "archetype/cluster.hpp"
#include "archetype/common.hpp"
#include "archetype/hmm.hpp"
#include "archetype/sequence.hpp"

namespace archetype {

/// Hard-EM clustering where every archetype is a single Gaussian.
inline TrainResult gclusterTrain(std::span<const Sequence> data, TrainConfig cfg) {
  cfg.states = 1;
  return train(data, cfg);
}

inline TrainResult gclusterTrain(std::span<const Sequence> data, std::size_t clusters, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.clusters = clusters;
  cfg.seed = seed;
  return gclusterTrain(data, cfg);
}

inline constexpr double kVarRidge = 1e-6;

/// x_j = A x_{j-1} + intercept + noise.
struct VarModel {
  Matrix A;
  std::vector<double> intercept;
  std::vector<double> residualVar;
  bool ridge = false;

  std::size_t dim() const { return intercept.size(); }
};

/// Least-squares VAR(1) fit with intercept. Falls back to ridge regression
/// (weight kVarRidge) when the design matrix is rank deficient.
inline VarModel varFit(std::span<const std::vector<double>> xs) {
  if (xs.size() < 2) throw UsageError("varFit: need at least 2 observations");
  const std::size_t m = xs.front().size();
  const std::size_t n = xs.size() - 1;
  for (const auto& x : xs) {
    if (x.size() != m) throw UsageError("varFit: dimension mismatch");
  }
  Eigen::MatrixXd design(n, m + 1);
  Eigen::MatrixXd target(n, m);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t d = 0; d < m; ++d) {
      design(j, d) = xs[j][d];
      target(j, d) = xs[j + 1][d];
    }
    design(j, m) = 1.0;
  }

  VarModel model;
  Eigen::MatrixXd coef;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  if (n >= m + 1 && qr.rank() == static_cast<Eigen::Index>(m + 1)) {
    coef = qr.solve(target);
  } else {
    model.ridge = true;
    Eigen::MatrixXd gram = design.transpose() * design;
    gram.diagonal().array() += kVarRidge;
    coef = gram.ldlt().solve(design.transpose() * target);
  }
  if (!coef.allFinite()) throw NumericalError("varFit: non-finite coefficients");

  model.A = Matrix(m, m);
  model.intercept.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < m; ++c) model.A(r, c) = coef(c, r);
    model.intercept[r] = coef(m, r);
  }
  const Eigen::MatrixXd resid = target - design * coef;
  model.residualVar.resize(m);
  for (std::size_t d = 0; d < m; ++d) {
    model.residualVar[d] = resid.col(d).squaredNorm() / static_cast<double>(n);
  }
  return model;
}

inline VarModel varFit(const Sequence& seq) {
  std::vector<std::vector<double>> xs;
  xs.reserve(seq.length());
  for (const auto& s : seq.sessions) xs.emplace_back(s.values().begin(), s.values().end());
  return varFit(xs);
}

/// One raw step of the linear map.
inline std::vector<double> varStep(const VarModel& model, std::span<const double> x) {
  std::vector<double> out(model.intercept);
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t c = 0; c < x.size(); ++c) out[r] += model.A(r, c) * x[c];
  }
  return out;
}

/// Iterated forecast. Every step is clamped to >= 1e-9, renormalized, and
/// fed back as the next input.
inline std::vector<SessionVector> varPredict(const VarModel& model, const SessionVector& last,
                                             std::size_t steps) {
  if (steps == 0) throw UsageError("varPredict: steps must be >= 1");
  if (last.size() != model.dim()) throw UsageError("varPredict: dimension mismatch");
  std::vector<SessionVector> out;
  std::vector<double> x(last.values().begin(), last.values().end());
  for (std::size_t s = 0; s < steps; ++s) {
    x = projectToSimplex(varStep(model, x), 1e-9);
    out.emplace_back(x);
  }
  return out;
}

/// Symmetrized, length-normalized log-likelihood gap between two
/// per-sequence models, floored at 0.
inline double hmmPairDistance(const ArchetypeModel& modelP, const Sequence& seqP,
                              const ArchetypeModel& modelQ, const Sequence& seqQ) {
  const double gapP = (forwardLogLik(seqP, modelP) - forwardLogLik(seqP, modelQ)) /
                      static_cast<double>(seqP.length());
  const double gapQ = (forwardLogLik(seqQ, modelQ) - forwardLogLik(seqQ, modelP)) /
                      static_cast<double>(seqQ.length());
  return std::max(0.0, 0.5 * (gapP + gapQ));
}

struct KMedoidsResult {
  std::vector<std::size_t> medoids;
  std::vector<std::size_t> labels;
  /// Total distance to the nearest medoid: initial value, then after each swap.
  std::vector<double> costHistory;
};

namespace detail {

inline double medoidCost(const Matrix& d, const std::vector<std::size_t>& medoids) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, d(i, m));
    total += best;
  }
  return total;
}

}  // namespace detail

/// PAM: seeded farthest-point initial medoids, then best-improvement swaps
/// until no swap lowers the cost. Medoids are returned in ascending index
/// order and labels refer to that order.
inline KMedoidsResult kmedoids(const Matrix& d, std::size_t k, std::uint64_t seed,
                               std::size_t maxSwaps = 10000) {
  const std::size_t n = d.rows();
  if (d.cols() != n) throw UsageError("kmedoids: distance matrix must be square");
  if (k == 0 || k > n) {
    throw UsageError("kmedoids: k = " + std::to_string(k) + " with " + std::to_string(n) + " points");
  }
  Rng rng(seed);
  std::vector<std::size_t> medoids{rng.index(n)};
  std::vector<char> isMedoid(n, 0);
  isMedoid[medoids[0]] = 1;
  while (medoids.size() < k) {
    std::size_t pick = n;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (isMedoid[i]) continue;
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t m : medoids) nearest = std::min(nearest, d(i, m));
      if (nearest > far) {
        far = nearest;
        pick = i;
      }
    }
    medoids.push_back(pick);
    isMedoid[pick] = 1;
  }

  KMedoidsResult out;
  double cost = detail::medoidCost(d, medoids);
  out.costHistory.push_back(cost);
  for (std::size_t swaps = 0; swaps < maxSwaps; ++swaps) {
    double bestCost = cost;
    std::size_t bestSlot = k, bestPoint = n;
    for (std::size_t slot = 0; slot < k; ++slot) {
      for (std::size_t o = 0; o < n; ++o) {
        if (isMedoid[o]) continue;
        auto trial = medoids;
        trial[slot] = o;
        const double c = detail::medoidCost(d, trial);
        if (c < bestCost) {
          bestCost = c;
          bestSlot = slot;
          bestPoint = o;
        }
      }
    }
    if (bestSlot == k) break;
    isMedoid[medoids[bestSlot]] = 0;
    isMedoid[bestPoint] = 1;
    medoids[bestSlot] = bestPoint;
    cost = bestCost;
    out.costHistory.push_back(cost);
  }

  std::sort(medoids.begin(), medoids.end());
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < k; ++c) {
      if (d(i, medoids[c]) < d(i, medoids[best])) best = c;
    }
    out.labels[i] = best;
  }
  // A medoid always labels itself, even when it ties with another medoid.
  for (std::size_t c = 0; c < k; ++c) out.labels[medoids[c]] = c;
  out.medoids = std::move(medoids);
  return out;
}

struct DistanceHmmResult {
  ModelSet models;
  std::vector<Assignment> assignments;
  std::vector<ArchetypeModel> perSequence;
  Matrix distances;
  KMedoidsResult medoids;
  /// Sequences shorter than K or whose fit left a state without mass.
  std::size_t degenerateFits = 0;
};

/// Fits one HMM per sequence, clusters the fits with k-medoids on
/// hmmPairDistance, then fits one HMM per cluster starting from its medoid's
/// model.
inline DistanceHmmResult distanceHmmTrain(std::span<const Sequence> data, const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = data.size();
  if (n < cfg.clusters) {
    throw UsageError("distanceHmmTrain: " + std::to_string(cfg.clusters) + " clusters requested for " +
                     std::to_string(n) + " sequences");
  }
  TrainConfig globalCfg = cfg;
  globalCfg.clusters = 1;
  const ArchetypeModel global = initModelSet(data, globalCfg).models[0];
  const FitConfig fitCfg = cfg.innerFit();
  FitConfig sequenceFit = fitCfg;
  sequenceFit.threads = 1;

  DistanceHmmResult out;
  out.perSequence.resize(n);
  std::vector<char> degenerate(n, 0);
  parallelFor(n, cfg.threads, [&](std::size_t i) {
    auto fit = baumWelchFit(data[i], global, sequenceFit);
    degenerate[i] = data[i].length() < cfg.states || fit.emptyStateEvents > 0;
    out.perSequence[i] = std::move(fit.model);
  });
  for (char flag : degenerate) out.degenerateFits += flag ? 1 : 0;

  Matrix ll(n, n);
  parallelFor(n, cfg.threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) ll(i, j) = forwardLogLik(data[i], out.perSequence[j]);
  });
  out.distances = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gapI = (ll(i, i) - ll(i, j)) / static_cast<double>(data[i].length());
      const double gapJ = (ll(j, j) - ll(j, i)) / static_cast<double>(data[j].length());
      out.distances(i, j) = out.distances(j, i) = std::max(0.0, 0.5 * (gapI + gapJ));
    }
  }
  out.medoids = kmedoids(out.distances, cfg.clusters, cfg.seed);

  out.models.cfg = cfg;
  out.models.models.resize(cfg.clusters);
  out.assignments.resize(n);
  for (std::size_t c = 0; c < cfg.clusters; ++c) {
    std::vector<Sequence> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (out.medoids.labels[i] == c) members.push_back(data[i]);
    }
    const auto& start = out.perSequence[out.medoids.medoids[c]];
    out.models.models[c] = baumWelchFit(members, start, fitCfg).model;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = out.medoids.labels[i];
    out.assignments[i].archetype = c;
    out.assignments[i].logLik = forwardLogLik(data[i], out.models.models[c]);
  }
  return out;
}

}  // namespace archetype
