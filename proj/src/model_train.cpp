#include <algorithm>
#include <cmath>
#include <numeric>

#include "appray/kernels.hpp"
#include "appray/model.hpp"
#include "appray/model_internal.hpp"

namespace appray::model {

namespace k = appray::kernels;

namespace {

struct Adam {
  double lr, b1, b2, eps;
  int64_t t = 0;
  std::vector<Tensor*> params;
  std::vector<std::vector<double>> m, v;

  void init(std::vector<Tensor*> p, const Hyperparams& h) {
    params = std::move(p);
    lr = h.lr;
    b1 = h.adam_beta1;
    b2 = h.adam_beta2;
    eps = h.adam_eps;
    t = 0;
    m.clear();
    v.clear();
    for (Tensor* tp : params) {
      m.emplace_back(tp->w.size(), 0.0);
      v.emplace_back(tp->w.size(), 0.0);
    }
  }

  void step() {
    ++t;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
    for (size_t p = 0; p < params.size(); ++p) {
      Tensor& tensor = *params[p];
      for (size_t i = 0; i < tensor.w.size(); ++i) {
        const double g = tensor.g[i];
        m[p][i] = b1 * m[p][i] + (1.0 - b1) * g;
        v[p][i] = b2 * v[p][i] + (1.0 - b2) * g * g;
        tensor.w[i] -= lr * (m[p][i] / bc1) / (std::sqrt(v[p][i] / bc2) + eps);
      }
    }
  }
};

Tensor make_tensor(const std::string& name, std::vector<int> shape, double scale,
                   Rng& rng) {
  Tensor t;
  t.name = name;
  t.shape = std::move(shape);
  int64_t n = 1;
  for (int d : t.shape) n *= d;
  t.w.assign(static_cast<size_t>(n), 0.0);
  t.g.assign(static_cast<size_t>(n), 0.0);
  if (scale > 0)
    for (double& x : t.w) x = scale * rng.normal();
  return t;
}

void check_finite(double loss, int stage, int epoch, int batch) {
  if (std::isfinite(loss)) return;
  throw AppError(ErrorKind::DivergenceDetected,
                 "non-finite loss at stage " + std::to_string(stage) +
                     " epoch " + std::to_string(epoch) + " batch " +
                     std::to_string(batch));
}

// y=1 pairs: every anchor with a same-class partner in the batch, negatives
// by the configured strategy. Empty when contrastive cannot apply.
std::vector<PairSpec> build_pairs(const std::vector<std::vector<double>>& labels,
                                  const std::vector<std::vector<double>>& embs,
                                  const Hyperparams& h, Rng& rng) {
  const size_t n = labels.size();
  auto intersects = [&](size_t i, size_t j) {
    for (size_t c = 0; c < labels[i].size(); ++c)
      if (labels[i][c] > 0.5 && labels[j][c] > 0.5) return true;
    return false;
  };
  NegSamplingInput in;
  in.labels = &labels;
  in.embeddings = &embs;
  in.positive.assign(n, -1);
  std::vector<PairSpec> pairs;
  for (size_t i = 0; i < n; ++i) {
    bool has_label = false;
    for (double v : labels[i])
      if (v > 0.5) has_label = true;
    if (!has_label) continue;
    std::vector<int> same;
    for (size_t j = 0; j < n; ++j)
      if (j != i && intersects(i, j)) same.push_back(static_cast<int>(j));
    if (same.empty()) continue;
    in.positive[i] = same[rng.uniform_int(same.size())];
    PairSpec p;
    p.anchor = static_cast<int>(i);
    p.other = in.positive[i];
    p.y = 1;
    pairs.push_back(p);
  }
  if (pairs.empty()) return {};
  std::vector<std::vector<int>> negs;
  try {
    negs = sample_negatives(in, h.strategy, h, rng);
  } catch (const AppError& e) {
    if (e.kind() == ErrorKind::NoNegativesAvailable) return {};
    throw;
  }
  std::vector<PairSpec> out;
  for (PairSpec& p : pairs) {
    p.negatives = negs[static_cast<size_t>(p.anchor)];
    if (!p.negatives.empty()) out.push_back(std::move(p));
  }
  return out;
}

struct SplitData {
  std::vector<EncodedSample> train;
  std::vector<EncodedSample> val;
};

// macro (over classes with ground truth in the set) and micro F1
std::pair<double, double> quick_f1(const std::vector<std::vector<double>>& scores,
                                   const std::vector<std::vector<double>>& labels,
                                   double threshold) {
  if (scores.empty()) return {0.0, 0.0};
  const size_t C = scores[0].size();
  std::vector<int64_t> tp(C, 0), fp(C, 0), fn(C, 0);
  for (size_t i = 0; i < scores.size(); ++i)
    for (size_t c = 0; c < C; ++c) {
      const bool pred = scores[i][c] >= threshold;
      const bool gt = labels[i][c] > 0.5;
      if (pred && gt) ++tp[c];
      else if (pred) ++fp[c];
      else if (gt) ++fn[c];
    }
  double macro = 0.0;
  int present = 0;
  int64_t TP = 0, FP = 0, FN = 0;
  for (size_t c = 0; c < C; ++c) {
    TP += tp[c];
    FP += fp[c];
    FN += fn[c];
    if (tp[c] + fn[c] == 0 && fp[c] == 0) continue;
    ++present;
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    macro += denom == 0 ? 0.0 : 2.0 * tp[c] / denom;
  }
  macro = present ? macro / present : 0.0;
  const double mden = 2.0 * TP + FP + FN;
  const double micro = mden == 0 ? 0.0 : 2.0 * TP / mden;
  return {macro, micro};
}

}  // namespace

TrainedModel train(const Corpus& corpus, const Hyperparams& h, int val_fold) {
  Rng rng(h.seed);
  Rng aug_rng = rng.fork();
  Rng shuffle_rng = rng.fork();
  Rng pair_rng = rng.fork();

  // --- app-level split ---
  std::vector<const Sample*> train_raw, val_raw;
  for (const Sample& s : corpus.samples) {
    auto it = corpus.app_fold.find(s.app_id);
    const int fold = it == corpus.app_fold.end() ? 0 : it->second;
    (fold == val_fold ? val_raw : train_raw).push_back(&s);
  }
  if (train_raw.empty())
    throw AppError(ErrorKind::MalformedInput, "empty training split");

  const int C = train_raw.front()->labels.empty()
                    ? Taxonomy::standard().classifier_size()
                    : static_cast<int>(train_raw.front()->labels.size());

  // --- augmentation of under-represented classes (training split only) ---
  std::vector<Sample> train_samples;
  for (const Sample* s : train_raw) train_samples.push_back(*s);
  if (h.augmentation_enabled) {
    std::vector<int64_t> counts(static_cast<size_t>(C), 0);
    for (const Sample* s : train_raw)
      for (size_t c = 0; c < s->labels.size(); ++c)
        if (s->labels[c] > 0.5f) ++counts[c];
    std::vector<int64_t> nonzero;
    for (int64_t v : counts)
      if (v > 0) nonzero.push_back(v);
    std::sort(nonzero.begin(), nonzero.end());
    const int64_t target = nonzero.empty() ? 0 : nonzero[nonzero.size() / 2];
    const AugmentationSpec spec = AugmentationSpec::defaults();
    for (const Sample* s : train_raw) {
      int64_t rarest = 0;
      for (size_t c = 0; c < s->labels.size(); ++c)
        if (s->labels[c] > 0.5f)
          rarest = rarest == 0 ? counts[c] : std::min(rarest, counts[c]);
      if (rarest == 0) continue;
      // capped below full rebalance so minority classes stay minorities and
      // class weighting retains signal
      const int64_t extra =
          std::min<int64_t>(1, (target + rarest - 1) / rarest - 1);
      for (int64_t e = 0; e < extra; ++e)
        train_samples.push_back(augment(*s, spec, aug_rng));
    }
  }

  // --- vocabulary from the training split, then encoding ---
  std::vector<std::string> train_texts;
  for (const Sample& s : train_samples) train_texts.push_back(s.text);
  Vocab vocab = Vocab::build(train_texts);

  ModelConfig cfg;
  cfg.n_labels = C;
  cfg.embed_dim = h.embed_dim;
  Model m = Model::init(cfg, std::move(vocab), h.seed);

  SplitData data;
  for (const Sample& s : train_samples)
    data.train.push_back(encode_sample(s, m.vocab, m.cfg));
  for (const Sample* s : val_raw)
    data.val.push_back(encode_sample(*s, m.vocab, m.cfg));

  // --- class weights over the training set the loss will see ---
  Hyperparams hp = h;
  if (hp.class_weights_enabled && hp.class_weights.empty()) {
    std::vector<int64_t> counts(static_cast<size_t>(C), 0);
    for (const EncodedSample& s : data.train)
      for (size_t c = 0; c < s.labels.size(); ++c)
        if (s.labels[c] > 0.5) ++counts[c];
    hp.class_weights = class_weights(counts);
  }
  if (!hp.class_weights_enabled) hp.class_weights.clear();

  TrainedModel tm;
  tm.hyperparams = hp;

  const int d = m.cfg.embed_dim;
  const double head_scale = std::sqrt(2.0 / (2.0 * d));
  Rng init_rng(h.seed ^ 0x517cc1b727220a95ULL);
  Tensor temp_img_w = make_tensor("temp_img_w", {C, 2 * d}, head_scale, init_rng);
  Tensor temp_img_b = make_tensor("temp_img_b", {C}, 0.0, init_rng);
  Tensor temp_txt_w =
      make_tensor("temp_txt_w", {C, d}, std::sqrt(2.0 / d), init_rng);
  Tensor temp_txt_b = make_tensor("temp_txt_b", {C}, 0.0, init_rng);

  auto shuffled_indices = [&](size_t n) {
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    for (size_t i = 0; i + 1 < n; ++i) {
      const size_t j = i + shuffle_rng.uniform_int(n - i);
      std::swap(idx[i], idx[j]);
    }
    return idx;
  };

  // ---------- stage 1: image encoder + temporary head; the contrastive
  // term acts on each stage's trainable representation
  {
    const int epochs = hp.stage1_epochs > 0 ? hp.stage1_epochs : hp.epochs;
    Adam adam;
    auto params = m.image_encoder_params();
    params.push_back(&temp_img_w);
    params.push_back(&temp_img_b);
    adam.init(params, hp);

    double best_val = 1e300;
    int since_best = 0;
    std::vector<std::vector<double>> best_snapshot;
    auto snapshot = [&]() {
      best_snapshot.clear();
      for (Tensor* t : params) best_snapshot.push_back(t->w);
    };
    snapshot();

    auto image_emb = [&](const EncodedSample& s, ImageActs& ac, ImageActs& af) {
      image_forward(m, s.crop_img, ac);
      image_forward(m, s.full_img, af);
      std::vector<double> emb;
      emb.reserve(static_cast<size_t>(2) * d);
      emb.insert(emb.end(), ac.e.begin(), ac.e.end());
      emb.insert(emb.end(), af.e.begin(), af.e.end());
      return emb;
    };

    auto val_loss_fn = [&]() {
      const size_t n = data.val.size();
      if (n == 0) return 0.0;
      std::vector<std::vector<double>> logits(n), labels(n);
      k::parallel_for(static_cast<int64_t>(n), [&](int64_t ii) {
        const size_t i = static_cast<size_t>(ii);
        ImageActs ac, af;
        const std::vector<double> emb = image_emb(data.val[i], ac, af);
        logits[i].resize(static_cast<size_t>(C));
        k::affine_forward(emb.data(), temp_img_w.w.data(), temp_img_b.w.data(),
                          logits[i].data(), 2 * d, C);
        labels[i] = data.val[i].labels;
      });
      return bce_with_grad(logits, labels, hp, nullptr);
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
      const auto order = shuffled_indices(data.train.size());
      double epoch_loss = 0.0;
      int n_batches = 0;
      for (size_t start = 0; start < order.size();
           start += static_cast<size_t>(hp.batch_size)) {
        const size_t end =
            std::min(order.size(), start + static_cast<size_t>(hp.batch_size));
        const size_t B = end - start;
        std::vector<const EncodedSample*> batch(B);
        for (size_t i = 0; i < B; ++i) batch[i] = &data.train[order[start + i]];

        std::vector<ImageActs> ac(B), af(B);
        std::vector<std::vector<double>> embs(B), logits(B), labels(B);
        k::parallel_for(static_cast<int64_t>(B), [&](int64_t ii) {
          const size_t i = static_cast<size_t>(ii);
          embs[i] = image_emb(*batch[i], ac[i], af[i]);
          logits[i].resize(static_cast<size_t>(C));
          k::affine_forward(embs[i].data(), temp_img_w.w.data(),
                            temp_img_b.w.data(), logits[i].data(), 2 * d, C);
          labels[i] = batch[i]->labels;
        });

        std::vector<std::vector<double>> dlogits, demb;
        double loss = bce_with_grad(logits, labels, hp, &dlogits);
        if (hp.contrastive_enabled) {
          const auto pairs = build_pairs(labels, embs, hp, pair_rng);
          loss += contrastive_with_grad(embs, pairs, hp, &demb);
        }
        check_finite(loss, 1, epoch, n_batches);
        epoch_loss += loss;
        ++n_batches;

        struct S1Grads {
          ImageGrads img;
          std::vector<double> tw, tb;
        };
        std::vector<S1Grads> grads(B);
        k::parallel_for(static_cast<int64_t>(B), [&](int64_t ii) {
          const size_t i = static_cast<size_t>(ii);
          grads[i].img.init(m);
          grads[i].tw.assign(temp_img_w.w.size(), 0.0);
          grads[i].tb.assign(temp_img_b.w.size(), 0.0);
          std::vector<double> demb_i(static_cast<size_t>(2) * d, 0.0);
          k::affine_backward(embs[i].data(), temp_img_w.w.data(),
                             dlogits[i].data(), demb_i.data(),
                             grads[i].tw.data(), grads[i].tb.data(), 2 * d, C);
          if (!demb.empty() && !demb[i].empty())
            for (size_t j = 0; j < demb_i.size(); ++j) demb_i[j] += demb[i][j];
          const std::vector<double> de_crop(demb_i.begin(), demb_i.begin() + d);
          const std::vector<double> de_full(demb_i.begin() + d, demb_i.end());
          image_backward(m, batch[i]->crop_img, ac[i], de_crop, grads[i].img);
          image_backward(m, batch[i]->full_img, af[i], de_full, grads[i].img);
        });
        for (Tensor* t : params) t->zero_grad();
        for (size_t i = 0; i < B; ++i) {
          grads[i].img.accumulate_into(m);
          for (size_t j = 0; j < grads[i].tw.size(); ++j)
            temp_img_w.g[j] += grads[i].tw[j];
          for (size_t j = 0; j < grads[i].tb.size(); ++j)
            temp_img_b.g[j] += grads[i].tb[j];
        }
        adam.step();
      }
      const double val = val_loss_fn();
      tm.log.push_back({1, epoch, epoch_loss / std::max(1, n_batches), val, 0.0});
      if (val < best_val - 1e-12) {
        best_val = val;
        since_best = 0;
        snapshot();
      } else if (++since_best > hp.patience) {
        break;
      }
    }
    for (size_t i = 0; i < params.size(); ++i) params[i]->w = best_snapshot[i];
  }

  // ---------- stage 2: text encoder + temporary head ----------
  {
    const int epochs = hp.stage2_epochs > 0 ? hp.stage2_epochs : hp.epochs;
    Adam adam;
    auto params = m.text_encoder_params();
    params.push_back(&temp_txt_w);
    params.push_back(&temp_txt_b);
    adam.init(params, hp);

    double best_val = 1e300;
    int since_best = 0;
    std::vector<std::vector<double>> best_snapshot;
    auto snapshot = [&]() {
      best_snapshot.clear();
      for (Tensor* t : params) best_snapshot.push_back(t->w);
    };
    snapshot();

    auto val_loss_fn = [&]() {
      const size_t n = data.val.size();
      if (n == 0) return 0.0;
      std::vector<std::vector<double>> logits(n), labels(n);
      k::parallel_for(static_cast<int64_t>(n), [&](int64_t ii) {
        const size_t i = static_cast<size_t>(ii);
        TextActs at;
        text_forward(m, data.val[i].token_ids, at);
        logits[i].resize(static_cast<size_t>(C));
        k::affine_forward(at.e.data(), temp_txt_w.w.data(), temp_txt_b.w.data(),
                          logits[i].data(), d, C);
        labels[i] = data.val[i].labels;
      });
      return bce_with_grad(logits, labels, hp, nullptr);
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
      const auto order = shuffled_indices(data.train.size());
      double epoch_loss = 0.0;
      int n_batches = 0;
      for (size_t start = 0; start < order.size();
           start += static_cast<size_t>(hp.batch_size)) {
        const size_t end =
            std::min(order.size(), start + static_cast<size_t>(hp.batch_size));
        const size_t B = end - start;
        std::vector<const EncodedSample*> batch(B);
        for (size_t i = 0; i < B; ++i) batch[i] = &data.train[order[start + i]];

        std::vector<TextActs> at(B);
        std::vector<std::vector<double>> embs(B), logits(B), labels(B);
        k::parallel_for(static_cast<int64_t>(B), [&](int64_t ii) {
          const size_t i = static_cast<size_t>(ii);
          text_forward(m, batch[i]->token_ids, at[i]);
          embs[i] = at[i].e;
          logits[i].resize(static_cast<size_t>(C));
          k::affine_forward(embs[i].data(), temp_txt_w.w.data(),
                            temp_txt_b.w.data(), logits[i].data(), d, C);
          labels[i] = batch[i]->labels;
        });

        std::vector<std::vector<double>> dlogits, demb;
        double loss = bce_with_grad(logits, labels, hp, &dlogits);
        if (hp.contrastive_enabled) {
          const auto pairs = build_pairs(labels, embs, hp, pair_rng);
          loss += contrastive_with_grad(embs, pairs, hp, &demb);
        }
        check_finite(loss, 2, epoch, n_batches);
        epoch_loss += loss;
        ++n_batches;

        struct S2Grads {
          TextGrads txt;
          std::vector<double> tw, tb;
        };
        std::vector<S2Grads> grads(B);
        k::parallel_for(static_cast<int64_t>(B), [&](int64_t ii) {
          const size_t i = static_cast<size_t>(ii);
          grads[i].txt.init(m);
          grads[i].tw.assign(temp_txt_w.w.size(), 0.0);
          grads[i].tb.assign(temp_txt_b.w.size(), 0.0);
          std::vector<double> de(static_cast<size_t>(d), 0.0);
          k::affine_backward(embs[i].data(), temp_txt_w.w.data(),
                             dlogits[i].data(), de.data(), grads[i].tw.data(),
                             grads[i].tb.data(), d, C);
          if (!demb.empty() && !demb[i].empty())
            for (size_t j = 0; j < de.size(); ++j) de[j] += demb[i][j];
          text_backward(m, batch[i]->token_ids, at[i], de, grads[i].txt);
        });
        for (Tensor* t : params) t->zero_grad();
        for (size_t i = 0; i < B; ++i) {
          grads[i].txt.accumulate_into(m);
          for (size_t j = 0; j < grads[i].tw.size(); ++j)
            temp_txt_w.g[j] += grads[i].tw[j];
          for (size_t j = 0; j < grads[i].tb.size(); ++j)
            temp_txt_b.g[j] += grads[i].tb[j];
        }
        adam.step();
      }
      const double val = val_loss_fn();
      tm.log.push_back({2, epoch, epoch_loss / std::max(1, n_batches), val, 0.0});
      if (val < best_val - 1e-12) {
        best_val = val;
        since_best = 0;
        snapshot();
      } else if (++since_best > hp.patience) {
        break;
      }
    }
    for (size_t i = 0; i < params.size(); ++i) params[i]->w = best_snapshot[i];
  }

  // ---------- stage 3: frozen encoders, final head ----------
  auto encoder_hash = [&]() {
    uint64_t h64 = 0xcbf29ce484222325ULL;
    for (Tensor* t : m.image_encoder_params())
      h64 = fnv1a(t->w.data(), t->w.size() * sizeof(double), h64);
    for (Tensor* t : m.text_encoder_params())
      h64 = fnv1a(t->w.data(), t->w.size() * sizeof(double), h64);
    return h64;
  };
  tm.encoder_hash_pre_stage3 = encoder_hash();
  {
    const int epochs = hp.stage3_epochs > 0 ? hp.stage3_epochs : hp.epochs;
    // cache concatenated embeddings once; encoders are frozen from here on
    auto embed_all = [&](const std::vector<EncodedSample>& set) {
      std::vector<std::vector<double>> out(set.size());
      k::parallel_for(static_cast<int64_t>(set.size()), [&](int64_t ii) {
        const size_t i = static_cast<size_t>(ii);
        ImageActs ac, af;
        TextActs at;
        image_forward(m, set[i].crop_img, ac);
        image_forward(m, set[i].full_img, af);
        text_forward(m, set[i].token_ids, at);
        out[i].reserve(static_cast<size_t>(3) * d);
        out[i].insert(out[i].end(), at.e.begin(), at.e.end());
        out[i].insert(out[i].end(), ac.e.begin(), ac.e.end());
        out[i].insert(out[i].end(), af.e.begin(), af.e.end());
      });
      return out;
    };
    const auto train_emb = embed_all(data.train);
    const auto val_emb = embed_all(data.val);

    Adam adam;
    auto params = m.head_params();
    adam.init(params, hp);

    double best_f1 = -1.0;
    double best_loss = 1e300;
    int since_best = 0;
    std::vector<std::vector<double>> best_snapshot;
    auto snapshot = [&]() {
      best_snapshot.clear();
      for (Tensor* t : params) best_snapshot.push_back(t->w);
    };
    snapshot();

    auto val_eval = [&]() -> std::tuple<double, double, double> {
      const size_t n = data.val.size();
      std::vector<std::vector<double>> scores(n), logits(n), labels(n);
      k::parallel_for(static_cast<int64_t>(n), [&](int64_t ii) {
        const size_t i = static_cast<size_t>(ii);
        HeadActs ha;
        head_forward(m, val_emb[i], ha);
        logits[i] = ha.logits;
        scores[i].resize(static_cast<size_t>(C));
        for (int c = 0; c < C; ++c)
          scores[i][static_cast<size_t>(c)] =
              1.0 / (1.0 + std::exp(-ha.logits[static_cast<size_t>(c)]));
        labels[i] = data.val[i].labels;
      });
      const auto [macro, micro] = quick_f1(scores, labels, hp.threshold);
      const double loss = bce_with_grad(logits, labels, hp, nullptr);
      return {macro, micro, loss};
    };

    for (int epoch = 0; epoch < epochs; ++epoch) {
      const auto order = shuffled_indices(data.train.size());
      double epoch_loss = 0.0;
      int n_batches = 0;
      for (size_t start = 0; start < order.size();
           start += static_cast<size_t>(hp.batch_size)) {
        const size_t end =
            std::min(order.size(), start + static_cast<size_t>(hp.batch_size));
        const size_t B = end - start;
        std::vector<HeadActs> ha(B);
        std::vector<std::vector<double>> hids(B), logits(B), labels(B);
        k::parallel_for(static_cast<int64_t>(B), [&](int64_t ii) {
          const size_t i = static_cast<size_t>(ii);
          head_forward(m, train_emb[order[start + i]], ha[i]);
          hids[i] = ha[i].hid;
          logits[i] = ha[i].logits;
          labels[i] = data.train[order[start + i]].labels;
        });

        std::vector<std::vector<double>> dlogits, dhid;
        double loss = bce_with_grad(logits, labels, hp, &dlogits);
        if (hp.contrastive_enabled) {
          const auto pairs = build_pairs(labels, hids, hp, pair_rng);
          loss += contrastive_with_grad(hids, pairs, hp, &dhid);
        }
        check_finite(loss, 3, epoch, n_batches);
        epoch_loss += loss;
        ++n_batches;

        std::vector<HeadGrads> grads(B);
        k::parallel_for(static_cast<int64_t>(B), [&](int64_t ii) {
          const size_t i = static_cast<size_t>(ii);
          grads[i].init(m);
          head_backward(m, train_emb[order[start + i]], ha[i], dlogits[i],
                        dhid.empty() ? std::vector<double>{} : dhid[i], nullptr,
                        grads[i]);
        });
        for (Tensor* t : params) t->zero_grad();
        for (size_t i = 0; i < B; ++i) grads[i].accumulate_into(m);
        adam.step();
      }
      const auto [macro, micro, vloss] = val_eval();
      tm.log.push_back(
          {3, epoch, epoch_loss / std::max(1, n_batches), vloss, macro});
      // early stop on validation F1; while F1 is tied, a falling validation
      // loss still counts as progress so the warm-up is not cut short
      if (macro > best_f1 + 1e-12) {
        best_f1 = macro;
        best_loss = vloss;
        since_best = 0;
        snapshot();
      } else if (macro >= best_f1 - 1e-12 && vloss < best_loss - 1e-9) {
        best_loss = vloss;
        since_best = 0;
        if (macro >= best_f1) snapshot();
      } else if (++since_best > hp.patience) {
        break;
      }
      (void)micro;
    }
    for (size_t i = 0; i < params.size(); ++i) params[i]->w = best_snapshot[i];
    const auto [macro, micro, vloss] = val_eval();
    (void)vloss;
    tm.best_val_macro_f1 = macro;
    tm.best_val_micro_f1 = micro;
  }
  tm.encoder_hash_post_stage3 = encoder_hash();

  tm.model = std::move(m);
  return tm;
}

}  // namespace appray::model
