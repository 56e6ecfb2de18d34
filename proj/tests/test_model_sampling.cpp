#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "appray/model.hpp"
#include "test_util.hpp"

using namespace appray;
using namespace appray::model;

namespace {

std::vector<double> onehot(int c, int n = 3) {
  std::vector<double> v(static_cast<size_t>(n), 0.0);
  v[static_cast<size_t>(c)] = 1.0;
  return v;
}

std::vector<double> at_sim(double s) {
  return {s, std::sqrt(std::max(0.0, 1.0 - s * s))};
}

// Exhaustive-scan oracle for the hard strategy, written independently: full
// candidate scan, margin test, hardest-first ordering, index tie-break.
std::vector<int> oracle_hard(const std::vector<std::vector<double>>& labels,
                             const std::vector<std::vector<double>>& emb,
                             int anchor, int positive, double xi, size_t cap) {
  auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    return dot / std::max(std::sqrt(na) * std::sqrt(nb), 1e-24);
  };
  auto disjoint = [&](int i, int j) {
    for (size_t c = 0; c < labels[static_cast<size_t>(i)].size(); ++c)
      if (labels[static_cast<size_t>(i)][c] > 0.5 &&
          labels[static_cast<size_t>(j)][c] > 0.5)
        return false;
    return true;
  };
  const double sp =
      cosine(emb[static_cast<size_t>(anchor)], emb[static_cast<size_t>(positive)]);
  std::vector<std::pair<double, int>> violating, all;
  for (int j = 0; j < static_cast<int>(labels.size()); ++j) {
    if (j == anchor || !disjoint(anchor, j)) continue;
    const double sn =
        cosine(emb[static_cast<size_t>(anchor)], emb[static_cast<size_t>(j)]);
    all.emplace_back(sn, j);
    if (sp - sn < xi) violating.emplace_back(sn, j);
  }
  auto& chosen = violating.empty() ? all : violating;
  std::stable_sort(chosen.begin(), chosen.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (chosen.size() > cap) chosen.resize(cap);
  std::vector<int> out;
  for (const auto& [s, j] : chosen) {
    (void)s;
    out.push_back(j);
  }
  return out;
}

}  // namespace

TEST_CASE("random strategy: negatives always label-disjoint") {
  Rng rng(3);
  std::vector<std::vector<double>> labels;
  for (int i = 0; i < 12; ++i) labels.push_back(onehot(i % 3));
  NegSamplingInput in;
  in.labels = &labels;
  Hyperparams h;
  const auto negs = sample_negatives(in, NegativeStrategy::kRandom, h, rng);
  REQUIRE(negs.size() == labels.size());
  for (size_t i = 0; i < negs.size(); ++i) {
    CHECK_FALSE(negs[i].empty());
    for (int j : negs[i]) {
      bool intersects = false;
      for (size_t c = 0; c < 3; ++c)
        if (labels[i][c] > 0.5 && labels[static_cast<size_t>(j)][c] > 0.5)
          intersects = true;
      CHECK_FALSE(intersects);
    }
  }
}

TEST_CASE("balanced strategy: negative count equals positive count") {
  Rng rng(5);
  // anchor class 0 appears 4 times -> 3 positives per class-0 anchor
  std::vector<std::vector<double>> labels{onehot(0), onehot(0), onehot(0),
                                          onehot(0), onehot(1), onehot(1),
                                          onehot(1), onehot(1), onehot(1)};
  NegSamplingInput in;
  in.labels = &labels;
  Hyperparams h;
  h.negatives_per_anchor = 32;
  const auto negs = sample_negatives(in, NegativeStrategy::kBalanced, h, rng);
  CHECK(negs[0].size() == 3);  // 3 same-class partners -> 3 negatives
  CHECK(negs[4].size() == 4);  // class 1 has 5 members -> 4 positives
}

TEST_CASE("hard strategy: the forced margin case") {
  // positive at sim .95; negatives at sims .9 and .1; xi = .2 selects only .9
  std::vector<std::vector<double>> emb{at_sim(1.0), at_sim(0.95), at_sim(0.9),
                                       at_sim(0.1)};
  std::vector<std::vector<double>> labels{onehot(0), onehot(0), onehot(1),
                                          onehot(1)};
  NegSamplingInput in;
  in.labels = &labels;
  in.embeddings = &emb;
  in.positive = {1, -1, -1, -1};
  Hyperparams h;
  h.xi = 0.2;
  Rng rng(1);
  const auto negs = sample_negatives(in, NegativeStrategy::kHard, h, rng);
  REQUIRE(negs[0].size() == 1);
  CHECK(negs[0][0] == 2);  // the 0.9 negative
}

TEST_CASE("hard strategy falls back to the closest negatives") {
  // no violation: positive at .99, negatives far below the margin
  std::vector<std::vector<double>> emb{at_sim(1.0), at_sim(0.99), at_sim(0.3),
                                       at_sim(0.1), at_sim(-0.5)};
  std::vector<std::vector<double>> labels{onehot(0), onehot(0), onehot(1),
                                          onehot(1), onehot(1)};
  NegSamplingInput in;
  in.labels = &labels;
  in.embeddings = &emb;
  in.positive = {1, -1, -1, -1, -1};
  Hyperparams h;
  h.xi = 0.2;
  h.negatives_per_anchor = 2;
  Rng rng(1);
  const auto negs = sample_negatives(in, NegativeStrategy::kHard, h, rng);
  REQUIRE(negs[0].size() == 2);
  CHECK(negs[0][0] == 2);  // closest first
  CHECK(negs[0][1] == 3);
}

TEST_CASE("hard strategy equals the exhaustive-scan oracle") {
  Rng rng(77);
  for (int iter = 0; iter < 30; ++iter) {
    const int n = 6 + static_cast<int>(rng.uniform_int(10));
    std::vector<std::vector<double>> labels, emb;
    for (int i = 0; i < n; ++i) {
      labels.push_back(onehot(static_cast<int>(rng.uniform_int(3))));
      emb.push_back({rng.normal(), rng.normal(), rng.normal()});
    }
    NegSamplingInput in;
    in.labels = &labels;
    in.embeddings = &emb;
    in.positive.assign(static_cast<size_t>(n), -1);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j != i && labels[static_cast<size_t>(i)] ==
                          labels[static_cast<size_t>(j)]) {
          in.positive[static_cast<size_t>(i)] = j;
          break;
        }
    Hyperparams h;
    h.xi = 0.2;
    h.negatives_per_anchor = 4;
    Rng r1(9);
    const auto got = sample_negatives(in, NegativeStrategy::kHard, h, r1);
    for (int i = 0; i < n; ++i) {
      if (in.positive[static_cast<size_t>(i)] < 0) continue;
      const auto want =
          oracle_hard(labels, emb, i, in.positive[static_cast<size_t>(i)],
                      h.xi, 4);
      CHECK(got[static_cast<size_t>(i)] == want);
    }
  }
}

TEST_CASE("hard output is always within the random candidate pool") {
  Rng rng(123);
  std::vector<std::vector<double>> labels, emb;
  for (int i = 0; i < 14; ++i) {
    labels.push_back(onehot(i % 2));
    emb.push_back({rng.normal(), rng.normal()});
  }
  NegSamplingInput in;
  in.labels = &labels;
  in.embeddings = &emb;
  in.positive.assign(14, -1);
  for (int i = 0; i < 14; ++i) in.positive[static_cast<size_t>(i)] = (i + 2) % 14;
  Hyperparams h;
  Rng r1(1), r2(1);
  const auto hard = sample_negatives(in, NegativeStrategy::kHard, h, r1);
  h.negatives_per_anchor = 1000;  // the full pool
  const auto pool = sample_negatives(in, NegativeStrategy::kRandom, h, r2);
  for (size_t i = 0; i < hard.size(); ++i) {
    const std::set<int> p(pool[i].begin(), pool[i].end());
    for (int j : hard[i]) CHECK(p.count(j) == 1);
  }
}

TEST_CASE("single-class batch raises NoNegativesAvailable") {
  std::vector<std::vector<double>> labels{onehot(0), onehot(0), onehot(0)};
  NegSamplingInput in;
  in.labels = &labels;
  Hyperparams h;
  Rng rng(1);
  CHECK_THROWS_AS(sample_negatives(in, NegativeStrategy::kRandom, h, rng),
                  AppError);
}
