#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "archetype/baselines.hpp"
#include "archetype/synth.hpp"
#include "test_support.hpp"

using namespace archetype;
using testsupport::session;

namespace {

SyntheticCorpus smallCorpus(std::uint64_t seed, std::size_t clusters, std::size_t states, std::size_t n) {
  SynthSpec spec;
  spec.clusters = clusters;
  spec.states = states;
  spec.dims = 4;
  spec.sequences = n;
  spec.minLen = 20;
  spec.maxLen = 35;
  spec.seed = seed;
  return generateSyntheticCorpus(spec);
}

std::vector<std::size_t> labelsOf(const std::vector<Assignment>& a) {
  std::vector<std::size_t> out;
  for (const auto& x : a) out.push_back(x.archetype);
  return out;
}

}  // namespace

TEST(GCluster, IsTrainWithOneState) {
  const auto syn = smallCorpus(1, 2, 2, 40);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TrainConfig cfg;
    cfg.clusters = 2;
    cfg.seed = seed;
    const auto g = gclusterTrain(syn.corpus, 2, seed);
    cfg.states = 1;
    const auto t = train(syn.corpus, cfg);
    EXPECT_EQ(g.models, t.models);
    EXPECT_EQ(g.assignments, t.assignments);
    EXPECT_EQ(g.report, t.report);
  }
}

TEST(GCluster, OneSequenceMeanIsSessionAverage) {
  Rng rng(2);
  const Corpus data{testsupport::randomSequence(rng, 12, 3)};
  const auto g = gclusterTrain(data, 1, 0);
  for (std::size_t d = 0; d < 3; ++d) {
    double mean = 0.0;
    for (const auto& s : data[0].sessions) mean += s[d];
    mean /= 12.0;
    EXPECT_NEAR(g.models.models[0].means[0][d], mean, 1e-12);
  }
}

TEST(GCluster, SeparatesTwoPopulations) {
  const auto syn = smallCorpus(3, 2, 1, 80);
  const auto g = gclusterTrain(syn.corpus, 2, 3);
  EXPECT_GE(bestPermutationAccuracy(syn.labels, labelsOf(g.assignments), 2), 0.95);
}

TEST(VarFit, RecoversNoiseFreeLinearSystem) {
  const std::vector<std::vector<double>> a{{0.5, 0.1, -0.2}, {0.0, 0.3, 0.1}, {0.2, -0.1, 0.4}};
  const std::vector<double> c{0.3, -0.1, 0.2};
  std::vector<std::vector<double>> traj{{1.0, -2.0, 0.5}};
  for (int j = 0; j < 12; ++j) {
    std::vector<double> next(c);
    for (std::size_t r = 0; r < 3; ++r) {
      for (std::size_t k = 0; k < 3; ++k) next[r] += a[r][k] * traj.back()[k];
    }
    traj.push_back(next);
  }
  const auto model = varFit(traj);
  EXPECT_FALSE(model.ridge);
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_NEAR(model.intercept[r], c[r], 1e-8);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(model.A(r, k), a[r][k], 1e-8);
    EXPECT_LT(model.residualVar[r], 1e-20);
  }
}

TEST(VarFit, ConstantSequenceUsesRidge) {
  Sequence seq;
  for (int j = 0; j < 15; ++j) seq.sessions.push_back(session({0.2, 0.5, 0.3}));
  const auto model = varFit(seq);
  EXPECT_TRUE(model.ridge);
  const auto pred = varPredict(model, seq.sessions.back(), 5);
  for (const auto& p : pred) EXPECT_LT(linfDistance(p.values(), seq.sessions[0].values()), 1e-6);
}

TEST(VarFit, SimplexDataIsAlwaysRankDeficient) {
  Rng rng(5);
  const auto seq = testsupport::randomSequence(rng, 40, 3);
  EXPECT_TRUE(varFit(seq).ridge);
}

TEST(VarFit, ShortSequenceFallsBackToRidge) {
  Rng rng(6);
  const auto seq = testsupport::randomSequence(rng, 3, 4);
  const auto model = varFit(seq);
  EXPECT_TRUE(model.ridge);
  Sequence one;
  one.sessions.push_back(session({1.0}));
  EXPECT_THROW(varFit(one), UsageError);
}

TEST(VarFit, ResidualVarianceNonNegative) {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto seq = testsupport::randomSequence(rng, 5 + trial % 20, 2 + trial % 4);
    for (double v : varFit(seq).residualVar) EXPECT_GE(v, 0.0);
  }
}

TEST(VarPredict, IdentityKeepsLastSession) {
  VarModel model;
  model.A = Matrix(3, 3);
  for (std::size_t i = 0; i < 3; ++i) model.A(i, i) = 1.0;
  model.intercept = {0.0, 0.0, 0.0};
  const auto last = session({0.25, 0.25, 0.5});
  for (const auto& p : varPredict(model, last, 4)) EXPECT_LT(linfDistance(p.values(), last.values()), 1e-15);
}

TEST(VarPredict, ZeroMapPredictsIntercept) {
  VarModel model;
  model.A = Matrix(3, 3);
  model.intercept = {0.1, 0.6, 0.3};
  for (const auto& p : varPredict(model, session({1, 0, 0}), 3)) {
    EXPECT_LT(linfDistance(p.values(), model.intercept), 1e-15);
  }
}

TEST(VarPredict, ExplosiveSystemStaysOnSimplex) {
  VarModel model;
  model.A = Matrix(3, 3);
  model.A(0, 0) = 3.0;
  model.A(1, 2) = -4.0;
  model.A(2, 1) = 2.5;
  model.intercept = {-0.5, 0.2, 0.1};
  const auto pred = varPredict(model, session({0.2, 0.3, 0.5}), 50);
  ASSERT_EQ(pred.size(), 50u);
  for (const auto& p : pred) {
    for (double v : p.values()) EXPECT_GE(v, 0.0);
  }
  EXPECT_THROW(varPredict(model, session({1, 0, 0}), 0), UsageError);
}

TEST(HmmPairDistance, ZeroAndSymmetric) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = testsupport::randomModel(rng, 3, 3, true);
    const auto q = testsupport::randomModel(rng, 3, 3, true);
    const auto sp = testsupport::randomSequence(rng, 10, 3);
    const auto sq = testsupport::randomSequence(rng, 7, 3);
    EXPECT_EQ(hmmPairDistance(p, sp, p, sp), 0.0);
    EXPECT_EQ(hmmPairDistance(p, sp, q, sq), hmmPairDistance(q, sq, p, sp));
    EXPECT_GE(hmmPairDistance(p, sp, q, sq), 0.0);
  }
}

TEST(HmmPairDistance, SeparatesDistinctModels) {
  int holds = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto syn = smallCorpus(100 + seed, 2, 2, 2);
    const auto& a = syn.truth.models[0];
    const auto& b = syn.truth.models[1];
    FitConfig fit;
    fit.maxIter = 10;
    const auto sa1 = sampleSequence(a, 30, seed * 3 + 1);
    const auto sa2 = sampleSequence(a, 30, seed * 3 + 2);
    const auto sb = sampleSequence(b, 30, seed * 3 + 3);
    const auto ma1 = baumWelchFit(sa1, a, fit).model;
    const auto ma2 = baumWelchFit(sa2, a, fit).model;
    const auto mb = baumWelchFit(sb, b, fit).model;
    holds += hmmPairDistance(ma1, sa1, mb, sb) > hmmPairDistance(ma1, sa1, ma2, sa2);
  }
  EXPECT_GE(holds, 18);
}

TEST(KMedoids, EveryPointItsOwnMedoid) {
  Rng rng(9);
  const std::size_t n = 7;
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = rng.uniform(0.1, 1.0);
  }
  const auto r = kmedoids(d, n, 0);
  EXPECT_EQ(r.costHistory.back(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    EXPECT_EQ(r.medoids[i], i);
    EXPECT_EQ(r.labels[i], i);
  }
}

TEST(KMedoids, SplitsBlocks) {
  const std::size_t n = 10;
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) d(i, j) = (i < 4) == (j < 4) ? 0.01 * static_cast<double>(1 + (i + j) % 3) : 100.0;
    }
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = kmedoids(d, 2, seed);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(r.labels[i] == r.labels[0], i < 4);
  }
}

TEST(KMedoids, CostNonIncreasingAndDeterministic) {
  Rng rng(10);
  const std::size_t n = 40;
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({rng.uniform(), rng.uniform()});
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d(i, j) = std::sqrt(squaredDistance(pts[i], pts[j]));
  }
  const auto r = kmedoids(d, 4, 3);
  for (std::size_t s = 1; s < r.costHistory.size(); ++s) EXPECT_LT(r.costHistory[s], r.costHistory[s - 1]);
  const auto again = kmedoids(d, 4, 3);
  EXPECT_EQ(r.medoids, again.medoids);
  EXPECT_EQ(r.labels, again.labels);
  EXPECT_THROW(kmedoids(d, n + 1, 0), UsageError);
}

TEST(DistanceHmm, RecoversTwoArchetypes) {
  const auto syn = smallCorpus(11, 2, 3, 60);
  TrainConfig cfg;
  cfg.clusters = 2;
  cfg.states = 3;
  const auto r = distanceHmmTrain(syn.corpus, cfg);
  EXPECT_GE(bestPermutationAccuracy(syn.labels, labelsOf(r.assignments), 2), 0.8);
  EXPECT_NO_THROW(r.models.validate());
  for (std::size_t i = 0; i < syn.corpus.size(); ++i) {
    EXPECT_EQ(r.distances(i, i), 0.0);
    for (std::size_t j = 0; j < syn.corpus.size(); ++j) EXPECT_EQ(r.distances(i, j), r.distances(j, i));
  }
}

TEST(DistanceHmm, SingleClusterIsOneFit) {
  const auto syn = smallCorpus(12, 2, 2, 12);
  TrainConfig cfg;
  cfg.clusters = 1;
  cfg.states = 2;
  const auto r = distanceHmmTrain(syn.corpus, cfg);
  const auto expected = baumWelchFit(syn.corpus, r.perSequence[r.medoids.medoids[0]], cfg.innerFit());
  EXPECT_EQ(r.models.models[0], expected.model);
  for (const auto& a : r.assignments) EXPECT_EQ(a.archetype, 0u);
}

TEST(DistanceHmm, TooFewSequences) {
  const auto syn = smallCorpus(13, 2, 2, 3);
  TrainConfig cfg;
  cfg.clusters = 4;
  cfg.states = 2;
  EXPECT_THROW(distanceHmmTrain(syn.corpus, cfg), UsageError);
}
