#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "appray/model.hpp"
#include "test_util.hpp"

using namespace appray;
using namespace appray::model;

namespace {

// Extended-precision oracle written directly from the formulas: long double
// accumulation, plain exp/log, no log-sum-exp rearrangement. Kept independent
// of the implementation on purpose.
long double oracle_cosine(const std::vector<double>& a,
                          const std::vector<double>& b) {
  long double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<long double>(a[i]) * b[i];
    na += static_cast<long double>(a[i]) * a[i];
    nb += static_cast<long double>(b[i]) * b[i];
  }
  return dot / (sqrtl(na) * sqrtl(nb));
}

long double oracle_contrastive(const std::vector<double>& anchor,
                       const std::vector<double>& positive,
                       const std::vector<std::vector<double>>& negatives,
                       long double tau, bool include_positive) {
  const long double sp = oracle_cosine(anchor, positive) / tau;
  long double denom = 0;
  for (const auto& n : negatives) denom += expl(oracle_cosine(anchor, n) / tau);
  if (include_positive) denom += expl(sp);
  return -logl(expl(sp) / denom);
}

long double oracle_bce(const std::vector<std::vector<double>>& logits,
                       const std::vector<std::vector<double>>& labels,
                       const std::vector<double>& w, bool positive_only) {
  long double acc = 0;
  for (size_t i = 0; i < logits.size(); ++i)
    for (size_t c = 0; c < logits[i].size(); ++c) {
      const long double sig = 1.0L / (1.0L + expl(-(long double)logits[i][c]));
      const long double y = labels[i][c];
      const long double wc = w.empty() ? 1.0L : w[c];
      long double term = -y * logl(sig);
      if (!positive_only) term -= (1.0L - y) * logl(1.0L - sig);
      acc += wc * term;
    }
  return acc / static_cast<long double>(logits.size());
}

std::vector<double> random_vec(Rng& rng, int d) {
  std::vector<double> v(static_cast<size_t>(d));
  for (double& x : v) x = rng.normal();
  return v;
}

double rel_err(double got, long double want) {
  const long double denom = std::max<long double>(fabsl(want), 1e-30L);
  return static_cast<double>(fabsl((long double)got - want) / denom);
}

}  // namespace

TEST_CASE("similarity: closed forms and errors") {
  CHECK(similarity({1, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(similarity({1, 0}, {0, 1}) == doctest::Approx(0.0));
  CHECK(similarity({1, 0}, {-1, 0}) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(similarity({0, 0}, {1, 0}), AppError);
  CHECK_THROWS_AS(similarity({1, 0}, {1, 0, 0}), AppError);
  // euclidean variant: negated distance
  CHECK(similarity({0, 0}, {3, 4}, Similarity::kEuclidean) ==
        doctest::Approx(-5.0));
}

TEST_CASE("contrastive distance closed forms") {
  const std::vector<double> v{0.5, -0.25, 1.0};
  // all similarities equal, N=2 -> log 2
  CHECK(rel_err(contrastive_distance_loss(v, v, {v, v}, 0.1),
                logl(2.0L)) < 1e-12);
  // all similarities equal, N=1 -> 0
  CHECK(std::abs(contrastive_distance_loss(v, v, {v}, 0.1)) < 1e-12);
  CHECK_THROWS_AS(contrastive_distance_loss(v, v, {}, 0.1), AppError);
}

TEST_CASE("contrastive distance matches the extended-precision oracle") {
  Rng rng(101);
  for (int iter = 0; iter < 200; ++iter) {
    const int d = 3 + static_cast<int>(rng.uniform_int(6));
    const auto anchor = random_vec(rng, d);
    const auto positive = random_vec(rng, d);
    std::vector<std::vector<double>> negs;
    const int n = 1 + static_cast<int>(rng.uniform_int(5));
    for (int i = 0; i < n; ++i) negs.push_back(random_vec(rng, d));
    const bool inc = rng.bernoulli(0.5);
    const double tau = 0.05 + rng.next_double() * 0.5;
    const double got = contrastive_distance_loss(
        anchor, positive, negs, tau, Similarity::kCosine, inc);
    const long double want = oracle_contrastive(anchor, positive, negs, tau, inc);
    CHECK(rel_err(got, want) < 1e-10);
  }
}

TEST_CASE("log-sum-exp shift identity") {
  // adding a constant to every similarity (positive included in the shift)
  // leaves the loss unchanged; cosine sims are realized through unit-vector
  // angles so the shift can be applied to the sims exactly
  auto at_sim = [](double s) {
    return std::vector<double>{s, std::sqrt(1.0 - s * s)};
  };
  const std::vector<double> anchor{1.0, 0.0};
  const std::vector<double> sims{0.1, 0.35, -0.2};
  const double shift = 0.15;
  for (bool include_positive : {false, true}) {
    auto loss_for = [&](double c) {
      std::vector<std::vector<double>> negs{at_sim(sims[1] + c),
                                            at_sim(sims[2] + c)};
      return contrastive_distance_loss(anchor, at_sim(sims[0] + c), negs, 0.1,
                                       Similarity::kCosine, include_positive);
    };
    CHECK(loss_for(0.0) == doctest::Approx(loss_for(shift)).epsilon(1e-9));
  }
}

TEST_CASE("pairwise contrastive loss selects the partner by y") {
  Rng rng(11);
  std::vector<ContrastTerm> batch;
  long double want = 0;
  for (int i = 0; i < 6; ++i) {
    ContrastTerm t;
    t.y = i % 2;
    t.anchor = random_vec(rng, 4);
    t.other = random_vec(rng, 4);
    t.negatives = {random_vec(rng, 4), random_vec(rng, 4)};
    want += oracle_contrastive(t.anchor, t.other, t.negatives, 0.1L, false);
    batch.push_back(std::move(t));
  }
  want /= 6;
  CHECK(rel_err(contrastive_loss(batch, 0.1), want) < 1e-10);

  // y = 1 everywhere -> mean of L+ terms only
  std::vector<ContrastTerm> pos_only(batch.begin(), batch.end());
  for (auto& t : pos_only) t.y = 1;
  long double lplus = 0;
  for (const auto& t : pos_only)
    lplus += oracle_contrastive(t.anchor, t.other, t.negatives, 0.1L, false);
  CHECK(rel_err(contrastive_loss(pos_only, 0.1), lplus / 6) < 1e-10);

  CHECK(contrastive_loss({}, 0.1) == 0.0);
}

TEST_CASE("contrastive loss is monotone in the positive similarity") {
  // with y=1, raising sim(anchor, positive) and all else fixed lowers the loss
  const std::vector<double> anchor{1.0, 0.0};
  std::vector<std::vector<double>> negs{{0.0, 1.0}, {-1.0, 0.2}};
  double prev = 1e300;
  for (double s = -0.9; s <= 0.91; s += 0.1) {
    const std::vector<double> positive{s, std::sqrt(1.0 - s * s)};
    ContrastTerm t{1, anchor, positive, negs};
    const double loss = contrastive_loss({t}, 0.1);
    CHECK(loss < prev);
    prev = loss;
  }
}

TEST_CASE("classification loss closed forms") {
  // perfect confident predictions saturate to zero
  const std::vector<std::vector<double>> logits{{40.0, -40.0, 40.0}};
  const std::vector<std::vector<double>> labels{{1.0, 0.0, 1.0}};
  CHECK(classification_loss(logits, labels, {}) < 1e-12);

  // uniform sigma = 0.5 with unit weights: C * log 2 per sample
  const int C = 7;
  const std::vector<std::vector<double>> zero{std::vector<double>(C, 0.0),
                                              std::vector<double>(C, 0.0)};
  const std::vector<std::vector<double>> y{std::vector<double>(C, 1.0),
                                           std::vector<double>(C, 0.0)};
  CHECK(rel_err(classification_loss(zero, y, {}), C * logl(2.0L)) < 1e-12);
}

TEST_CASE("classification loss matches the oracle, scales in w, permutes") {
  Rng rng(13);
  for (int iter = 0; iter < 100; ++iter) {
    const int B = 1 + static_cast<int>(rng.uniform_int(5));
    const int C = 2 + static_cast<int>(rng.uniform_int(6));
    std::vector<std::vector<double>> logits(B), labels(B);
    std::vector<double> w(static_cast<size_t>(C));
    for (double& x : w) x = 0.25 + rng.next_double() * 3.0;
    for (int i = 0; i < B; ++i) {
      logits[i] = random_vec(rng, C);
      labels[i].assign(static_cast<size_t>(C), 0.0);
      for (int c = 0; c < C; ++c)
        labels[static_cast<size_t>(i)][static_cast<size_t>(c)] =
            rng.bernoulli(0.3) ? 1.0 : 0.0;
    }
    const bool pos_only = rng.bernoulli(0.3);
    const double got = classification_loss(logits, labels, w, pos_only);
    CHECK(rel_err(got, oracle_bce(logits, labels, w, pos_only)) < 1e-10);

    // linear in w
    std::vector<double> w2 = w;
    for (double& x : w2) x *= 2.0;
    CHECK(classification_loss(logits, labels, w2, pos_only) ==
          doctest::Approx(2.0 * got).epsilon(1e-12));

    // permutation equivariance in class order
    std::vector<size_t> perm(static_cast<size_t>(C));
    for (size_t c = 0; c < perm.size(); ++c) perm[c] = c;
    for (size_t c = 0; c + 1 < perm.size(); ++c)
      std::swap(perm[c], perm[c + rng.uniform_int(perm.size() - c)]);
    std::vector<std::vector<double>> logits_p(B), labels_p(B);
    std::vector<double> w_p(static_cast<size_t>(C));
    for (int i = 0; i < B; ++i) {
      logits_p[i].resize(static_cast<size_t>(C));
      labels_p[i].resize(static_cast<size_t>(C));
      for (size_t c = 0; c < perm.size(); ++c) {
        logits_p[static_cast<size_t>(i)][c] =
            logits[static_cast<size_t>(i)][perm[c]];
        labels_p[static_cast<size_t>(i)][c] =
            labels[static_cast<size_t>(i)][perm[c]];
      }
    }
    for (size_t c = 0; c < perm.size(); ++c) w_p[c] = w[perm[c]];
    CHECK(classification_loss(logits_p, labels_p, w_p, pos_only) ==
          doctest::Approx(got).epsilon(1e-12));
  }
}

TEST_CASE("class weights: inverse frequency normalized to mean 1") {
  CHECK(class_weights({10, 10, 10}) == std::vector<double>{1.0, 1.0, 1.0});
  const auto w = class_weights({30, 10});
  CHECK(w[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.5).epsilon(1e-12));
  // zero-count class capped by max(count, 1)
  const auto wz = class_weights({0, 10});
  CHECK(wz[0] > wz[1]);
  CHECK(std::isfinite(wz[0]));
  CHECK((wz[0] + wz[1]) / 2.0 == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("total loss is the sum of its parts") {
  Rng rng(21);
  ModelConfig cfg;
  cfg.n_labels = 4;
  cfg.embed_dim = 6;
  cfg.token_dim = 4;
  cfg.text_hidden = 5;
  cfg.conv1_channels = 2;
  cfg.conv2_channels = 3;
  cfg.head_hidden = 8;
  cfg.image_size = 16;
  Vocab vocab = Vocab::build({"one two three four"});
  const Model m = Model::init(cfg, vocab, 3);

  std::vector<EncodedSample> storage;
  for (int i = 0; i < 5; ++i) {
    EncodedSample es;
    es.crop_img = random_vec(rng, 3 * 16 * 16);
    es.full_img = random_vec(rng, 3 * 16 * 16);
    es.token_ids = {static_cast<int>(rng.uniform_int(vocab.size()))};
    es.labels.assign(4, 0.0);
    es.labels[rng.uniform_int(4)] = 1.0;
    storage.push_back(std::move(es));
  }
  Batch batch;
  for (const auto& s : storage) batch.samples.push_back(&s);
  for (int i = 0; i < 4; ++i) {
    PairSpec p;
    p.anchor = i;
    p.other = (i + 1) % 5;
    p.negatives = {(i + 2) % 5};
    batch.pairs.push_back(p);
  }

  Hyperparams h;
  h.class_weights = {1.0, 2.0, 0.5, 1.5};
  const double full = total_loss(m, batch, h);

  Hyperparams no_contr = h;
  no_contr.contrastive_enabled = false;
  const double cls_only = total_loss(m, batch, no_contr);

  // zeroed classification term via all-zero class weights
  Hyperparams zero_w = h;
  zero_w.class_weights.assign(4, 0.0);
  const double contr_only = total_loss(m, batch, zero_w);

  CHECK(full == doctest::Approx(cls_only + contr_only).epsilon(1e-12));

  // contrastive term zeroed (no pairs) -> classification only
  Batch no_pairs = batch;
  no_pairs.pairs.clear();
  CHECK(total_loss(m, no_pairs, h) == doctest::Approx(cls_only).epsilon(1e-12));
}
