#include <algorithm>
#include <cmath>
#include <cstring>

#include "appray/kernels.hpp"
#include "appray/model.hpp"
#include "appray/model_internal.hpp"

namespace appray::model {

namespace k = appray::kernels;

std::vector<Tensor*> Model::all_params() {
  return {&tok_emb, &txt1_w, &txt1_b, &txt2_w, &txt2_b,
          &conv1_w, &conv1_b, &conv2_w, &conv2_b, &img_proj_w,
          &img_proj_b, &head1_w, &head1_b, &head2_w, &head2_b};
}

std::vector<const Tensor*> Model::all_params() const {
  return {&tok_emb, &txt1_w, &txt1_b, &txt2_w, &txt2_b,
          &conv1_w, &conv1_b, &conv2_w, &conv2_b, &img_proj_w,
          &img_proj_b, &head1_w, &head1_b, &head2_w, &head2_b};
}

std::vector<Tensor*> Model::image_encoder_params() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &img_proj_w, &img_proj_b};
}

std::vector<Tensor*> Model::text_encoder_params() {
  return {&tok_emb, &txt1_w, &txt1_b, &txt2_w, &txt2_b};
}

std::vector<Tensor*> Model::head_params() {
  return {&head1_w, &head1_b, &head2_w, &head2_b};
}

namespace {

Tensor make_tensor(const std::string& name, std::vector<int> shape) {
  Tensor t;
  t.name = name;
  t.shape = std::move(shape);
  int64_t n = 1;
  for (int d : t.shape) n *= d;
  t.w.assign(static_cast<size_t>(n), 0.0);
  t.g.assign(static_cast<size_t>(n), 0.0);
  return t;
}

void init_normal(Tensor& t, double scale, Rng& rng) {
  for (double& x : t.w) x = scale * rng.normal();
}

}  // namespace

Model Model::init(const ModelConfig& cfg, Vocab vocab, uint64_t seed) {
  Model m;
  m.cfg = cfg;
  m.vocab = std::move(vocab);
  const int V = m.vocab.size();
  const int d = cfg.embed_dim;

  m.tok_emb = make_tensor("tok_emb", {V, cfg.token_dim});
  m.txt1_w = make_tensor("txt1_w", {cfg.text_hidden, cfg.token_dim});
  m.txt1_b = make_tensor("txt1_b", {cfg.text_hidden});
  m.txt2_w = make_tensor("txt2_w", {d, cfg.text_hidden});
  m.txt2_b = make_tensor("txt2_b", {d});
  m.conv1_w = make_tensor("conv1_w", {cfg.conv1_channels, 3, 3, 3});
  m.conv1_b = make_tensor("conv1_b", {cfg.conv1_channels});
  m.conv2_w =
      make_tensor("conv2_w", {cfg.conv2_channels, cfg.conv1_channels, 3, 3});
  m.conv2_b = make_tensor("conv2_b", {cfg.conv2_channels});
  m.img_proj_w = make_tensor("img_proj_w", {d, cfg.conv2_channels});
  m.img_proj_b = make_tensor("img_proj_b", {d});
  m.head1_w = make_tensor("head1_w", {cfg.head_hidden, 3 * d});
  m.head1_b = make_tensor("head1_b", {cfg.head_hidden});
  m.head2_w = make_tensor("head2_w", {cfg.n_labels, cfg.head_hidden});
  m.head2_b = make_tensor("head2_b", {cfg.n_labels});

  Rng rng(seed ^ 0xa5a5a5a5ULL);
  init_normal(m.tok_emb, 0.1, rng);
  init_normal(m.txt1_w, std::sqrt(2.0 / cfg.token_dim), rng);
  init_normal(m.txt2_w, std::sqrt(2.0 / cfg.text_hidden), rng);
  init_normal(m.conv1_w, std::sqrt(2.0 / (3.0 * 9.0)), rng);
  init_normal(m.conv2_w, std::sqrt(2.0 / (cfg.conv1_channels * 9.0)), rng);
  init_normal(m.img_proj_w, std::sqrt(2.0 / cfg.conv2_channels), rng);
  init_normal(m.head1_w, std::sqrt(2.0 / (3.0 * d)), rng);
  init_normal(m.head2_w, std::sqrt(2.0 / cfg.head_hidden), rng);
  // small positive biases keep early ReLU embeddings off the zero vector and
  // keep pre-activations of dead regions strictly off the ReLU kink (pooled
  // all-zero windows would otherwise sit exactly at the bias value 0.0)
  for (auto* b : {&m.txt1_b, &m.txt2_b, &m.head1_b, &m.conv1_b, &m.conv2_b,
                  &m.img_proj_b})
    std::fill(b->w.begin(), b->w.end(), 0.01);
  return m;
}

// --- per-sample forward/backward ---

void image_forward(const Model& m, const std::vector<double>& x, ImageActs& a) {
  const ModelConfig& c = m.cfg;
  const int S = c.image_size, S2 = S / 2, S4 = S / 4;
  a.h1pre.resize(static_cast<size_t>(c.conv1_channels) * S * S);
  a.h1.resize(a.h1pre.size());
  a.p1.resize(static_cast<size_t>(c.conv1_channels) * S2 * S2);
  a.h2pre.resize(static_cast<size_t>(c.conv2_channels) * S2 * S2);
  a.h2.resize(a.h2pre.size());
  a.p2.resize(static_cast<size_t>(c.conv2_channels) * S4 * S4);
  a.g.resize(static_cast<size_t>(c.conv2_channels));
  a.e.resize(static_cast<size_t>(c.embed_dim));

  k::conv3x3_forward(x.data(), m.conv1_w.w.data(), m.conv1_b.w.data(),
                     a.h1pre.data(), 3, c.conv1_channels, S, S);
  if (c.relu)
    k::relu_forward(a.h1pre.data(), a.h1.data(), static_cast<int>(a.h1.size()));
  else
    a.h1 = a.h1pre;
  k::avgpool2_forward(a.h1.data(), a.p1.data(), c.conv1_channels, S, S);
  k::conv3x3_forward(a.p1.data(), m.conv2_w.w.data(), m.conv2_b.w.data(),
                     a.h2pre.data(), c.conv1_channels, c.conv2_channels, S2, S2);
  if (c.relu)
    k::relu_forward(a.h2pre.data(), a.h2.data(), static_cast<int>(a.h2.size()));
  else
    a.h2 = a.h2pre;
  k::avgpool2_forward(a.h2.data(), a.p2.data(), c.conv2_channels, S2, S2);
  k::gap_forward(a.p2.data(), a.g.data(), c.conv2_channels, S4, S4);
  k::affine_forward(a.g.data(), m.img_proj_w.w.data(), m.img_proj_b.w.data(),
                    a.e.data(), c.conv2_channels, c.embed_dim);
}

void image_backward(const Model& m, const std::vector<double>& x,
                    const ImageActs& a, const std::vector<double>& de,
                    ImageGrads& out) {
  const ModelConfig& c = m.cfg;
  const int S = c.image_size, S2 = S / 2, S4 = S / 4;
  std::vector<double> dg(static_cast<size_t>(c.conv2_channels), 0.0);
  k::affine_backward(a.g.data(), m.img_proj_w.w.data(), de.data(), dg.data(),
                     out.img_proj_w.data(), out.img_proj_b.data(),
                     c.conv2_channels, c.embed_dim);
  std::vector<double> dp2(a.p2.size(), 0.0);
  k::gap_backward(dg.data(), dp2.data(), c.conv2_channels, S4, S4);
  std::vector<double> dh2(a.h2.size(), 0.0);
  k::avgpool2_backward(dp2.data(), dh2.data(), c.conv2_channels, S2, S2);
  if (c.relu)
    k::relu_backward(a.h2pre.data(), dh2.data(), dh2.data(),
                     static_cast<int>(dh2.size()));
  std::vector<double> dp1(a.p1.size(), 0.0);
  k::conv3x3_backward(a.p1.data(), m.conv2_w.w.data(), dh2.data(), dp1.data(),
                      out.conv2_w.data(), out.conv2_b.data(), c.conv1_channels,
                      c.conv2_channels, S2, S2);
  std::vector<double> dh1(a.h1.size(), 0.0);
  k::avgpool2_backward(dp1.data(), dh1.data(), c.conv1_channels, S, S);
  if (c.relu)
    k::relu_backward(a.h1pre.data(), dh1.data(), dh1.data(),
                     static_cast<int>(dh1.size()));
  k::conv3x3_backward(x.data(), m.conv1_w.w.data(), dh1.data(), nullptr,
                      out.conv1_w.data(), out.conv1_b.data(), 3,
                      c.conv1_channels, S, S);
}

void text_forward(const Model& m, const std::vector<int>& ids, TextActs& a) {
  const ModelConfig& c = m.cfg;
  a.t.assign(static_cast<size_t>(c.token_dim), 0.0);
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (int id : ids) {
    const double* row =
        m.tok_emb.w.data() + static_cast<size_t>(id) * c.token_dim;
    for (int j = 0; j < c.token_dim; ++j) a.t[static_cast<size_t>(j)] += row[j];
  }
  for (double& v : a.t) v *= inv;
  a.a1pre.resize(static_cast<size_t>(c.text_hidden));
  a.a1.resize(a.a1pre.size());
  k::affine_forward(a.t.data(), m.txt1_w.w.data(), m.txt1_b.w.data(),
                    a.a1pre.data(), c.token_dim, c.text_hidden);
  if (c.relu)
    k::relu_forward(a.a1pre.data(), a.a1.data(), c.text_hidden);
  else
    a.a1 = a.a1pre;
  a.epre.resize(static_cast<size_t>(c.embed_dim));
  a.e.resize(a.epre.size());
  k::affine_forward(a.a1.data(), m.txt2_w.w.data(), m.txt2_b.w.data(),
                    a.epre.data(), c.text_hidden, c.embed_dim);
  if (c.relu)
    k::relu_forward(a.epre.data(), a.e.data(), c.embed_dim);
  else
    a.e = a.epre;
}

void text_backward(const Model& m, const std::vector<int>& ids,
                   const TextActs& a, const std::vector<double>& de,
                   TextGrads& out) {
  const ModelConfig& c = m.cfg;
  std::vector<double> depre = de;
  if (c.relu)
    k::relu_backward(a.epre.data(), depre.data(), depre.data(), c.embed_dim);
  std::vector<double> da1(static_cast<size_t>(c.text_hidden), 0.0);
  k::affine_backward(a.a1.data(), m.txt2_w.w.data(), depre.data(), da1.data(),
                     out.txt2_w.data(), out.txt2_b.data(), c.text_hidden,
                     c.embed_dim);
  if (c.relu)
    k::relu_backward(a.a1pre.data(), da1.data(), da1.data(), c.text_hidden);
  std::vector<double> dt(static_cast<size_t>(c.token_dim), 0.0);
  k::affine_backward(a.t.data(), m.txt1_w.w.data(), da1.data(), dt.data(),
                     out.txt1_w.data(), out.txt1_b.data(), c.token_dim,
                     c.text_hidden);
  const double inv = 1.0 / static_cast<double>(ids.size());
  for (int id : ids) {
    double* row = out.tok_emb.data() + static_cast<size_t>(id) * c.token_dim;
    for (int j = 0; j < c.token_dim; ++j) row[j] += inv * dt[static_cast<size_t>(j)];
  }
}

void head_forward(const Model& m, const std::vector<double>& in, HeadActs& a) {
  const ModelConfig& c = m.cfg;
  a.hpre.resize(static_cast<size_t>(c.head_hidden));
  a.hid.resize(a.hpre.size());
  k::affine_forward(in.data(), m.head1_w.w.data(), m.head1_b.w.data(),
                    a.hpre.data(), 3 * c.embed_dim, c.head_hidden);
  if (c.relu)
    k::relu_forward(a.hpre.data(), a.hid.data(), c.head_hidden);
  else
    a.hid = a.hpre;
  a.logits.resize(static_cast<size_t>(c.n_labels));
  k::affine_forward(a.hid.data(), m.head2_w.w.data(), m.head2_b.w.data(),
                    a.logits.data(), c.head_hidden, c.n_labels);
}

void head_backward(const Model& m, const std::vector<double>& in,
                   const HeadActs& a, const std::vector<double>& dlogits,
                   const std::vector<double>& dhid_extra,
                   std::vector<double>* din, HeadGrads& out) {
  const ModelConfig& c = m.cfg;
  std::vector<double> dhid(static_cast<size_t>(c.head_hidden), 0.0);
  k::affine_backward(a.hid.data(), m.head2_w.w.data(), dlogits.data(),
                     dhid.data(), out.head2_w.data(), out.head2_b.data(),
                     c.head_hidden, c.n_labels);
  if (!dhid_extra.empty())
    for (int i = 0; i < c.head_hidden; ++i)
      dhid[static_cast<size_t>(i)] += dhid_extra[static_cast<size_t>(i)];
  if (c.relu)
    k::relu_backward(a.hpre.data(), dhid.data(), dhid.data(), c.head_hidden);
  if (din) din->assign(static_cast<size_t>(3 * c.embed_dim), 0.0);
  k::affine_backward(in.data(), m.head1_w.w.data(), dhid.data(),
                     din ? din->data() : nullptr, out.head1_w.data(),
                     out.head1_b.data(), 3 * c.embed_dim, c.head_hidden);
}

// --- shared loss helpers ---

double bce_with_grad(const std::vector<std::vector<double>>& logits,
                     const std::vector<std::vector<double>>& labels,
                     const Hyperparams& h,
                     std::vector<std::vector<double>>* dlogits) {
  const std::vector<double>& w = h.class_weights;
  const bool weighted = h.class_weights_enabled && !w.empty();
  const size_t B = logits.size();
  double acc = 0.0;
  if (dlogits) dlogits->assign(B, {});
  for (size_t i = 0; i < B; ++i) {
    const size_t C = logits[i].size();
    if (dlogits) (*dlogits)[i].assign(C, 0.0);
    for (size_t c = 0; c < C; ++c) {
      const double z = logits[i][c];
      const double y = labels[i][c];
      const double wc = weighted ? w[c] : 1.0;
      const double sig = 1.0 / (1.0 + std::exp(-z));
      const double log_sig = z >= 0 ? -std::log1p(std::exp(-z))
                                    : z - std::log1p(std::exp(z));
      const double log_om =
          z >= 0 ? -z - std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
      double term = -y * log_sig;
      double dz = -y * (1.0 - sig);
      if (!h.bce_positive_term_only) {
        term -= (1.0 - y) * log_om;
        dz += (1.0 - y) * sig;
      }
      acc += wc * term;
      if (dlogits) (*dlogits)[i][c] = wc * dz / static_cast<double>(B);
    }
  }
  return B == 0 ? 0.0 : acc / static_cast<double>(B);
}

namespace {

double guarded_norm(const std::vector<double>& a) {
  double acc = 0.0;
  for (double v : a) acc += v * v;
  return std::max(std::sqrt(acc), 1e-12);
}

double pair_sim(const std::vector<double>& a, const std::vector<double>& b,
                Similarity metric) {
  if (metric == Similarity::kEuclidean) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return -std::sqrt(acc);
  }
  double dot = 0.0;
  for (size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  return dot / (guarded_norm(a) * guarded_norm(b));
}

// d sim / d a accumulated into da (and symmetric for b), scaled by `scale`.
void sim_backward(const std::vector<double>& a, const std::vector<double>& b,
                  Similarity metric, double scale, std::vector<double>& da,
                  std::vector<double>& db) {
  const size_t n = a.size();
  if (metric == Similarity::kEuclidean) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    const double dist = std::max(std::sqrt(acc), 1e-12);
    for (size_t i = 0; i < n; ++i) {
      const double g = -(a[i] - b[i]) / dist * scale;
      da[i] += g;
      db[i] -= g;
    }
    return;
  }
  const double na = guarded_norm(a), nb = guarded_norm(b);
  double dot = 0.0;
  for (size_t i = 0; i < n; ++i) dot += a[i] * b[i];
  const double s = dot / (na * nb);
  for (size_t i = 0; i < n; ++i) {
    da[i] += scale * (b[i] / (na * nb) - s * a[i] / (na * na));
    db[i] += scale * (a[i] / (na * nb) - s * b[i] / (nb * nb));
  }
}

}  // namespace

double contrastive_with_grad(const std::vector<std::vector<double>>& emb,
                             const std::vector<PairSpec>& pairs,
                             const Hyperparams& h,
                             std::vector<std::vector<double>>* demb) {
  if (pairs.empty()) return 0.0;
  if (demb) {
    demb->assign(emb.size(), {});
    for (size_t i = 0; i < emb.size(); ++i)
      (*demb)[i].assign(emb[i].size(), 0.0);
  }
  const double inv_pairs = 1.0 / static_cast<double>(pairs.size());
  double acc = 0.0;
  for (const PairSpec& p : pairs) {
    const auto& a = emb[static_cast<size_t>(p.anchor)];
    const auto& o = emb[static_cast<size_t>(p.other)];
    const double sp = pair_sim(a, o, h.similarity) / h.tau;
    std::vector<double> terms;
    terms.reserve(p.negatives.size() + 1);
    for (int nidx : p.negatives)
      terms.push_back(pair_sim(a, emb[static_cast<size_t>(nidx)], h.similarity) /
                      h.tau);
    if (h.include_positive_in_denominator) terms.push_back(sp);
    const double mx = *std::max_element(terms.begin(), terms.end());
    double z = 0.0;
    for (double t : terms) z += std::exp(t - mx);
    acc += -sp + mx + std::log(z);
    if (!demb) continue;

    auto& da = (*demb)[static_cast<size_t>(p.anchor)];
    auto& dother = (*demb)[static_cast<size_t>(p.other)];
    // d loss / d t_p
    double dtp = -1.0;
    if (h.include_positive_in_denominator) dtp += std::exp(sp - mx) / z;
    sim_backward(a, o, h.similarity, dtp / h.tau * inv_pairs, da, dother);
    for (size_t kk = 0; kk < p.negatives.size(); ++kk) {
      const double soft = std::exp(terms[kk] - mx) / z;
      sim_backward(a, emb[static_cast<size_t>(p.negatives[kk])], h.similarity,
                   soft / h.tau * inv_pairs, da,
                   (*demb)[static_cast<size_t>(p.negatives[kk])]);
    }
  }
  return acc * inv_pairs;
}

// --- full-pipeline loss (used by the public op, predict and gradcheck) ---

namespace {

struct FullActs {
  ImageActs crop, full;
  TextActs txt;
  std::vector<double> head_in;
  HeadActs head;
};

void full_forward(const Model& m, const EncodedSample& s, FullActs& a) {
  image_forward(m, s.crop_img, a.crop);
  image_forward(m, s.full_img, a.full);
  text_forward(m, s.token_ids, a.txt);
  a.head_in.clear();
  a.head_in.reserve(static_cast<size_t>(3) * m.cfg.embed_dim);
  a.head_in.insert(a.head_in.end(), a.txt.e.begin(), a.txt.e.end());
  a.head_in.insert(a.head_in.end(), a.crop.e.begin(), a.crop.e.end());
  a.head_in.insert(a.head_in.end(), a.full.e.begin(), a.full.e.end());
  head_forward(m, a.head_in, a.head);
}

}  // namespace

std::vector<double> predict_scores(const Model& m, const EncodedSample& es) {
  FullActs a;
  full_forward(m, es, a);
  std::vector<double> scores(a.head.logits.size());
  for (size_t i = 0; i < scores.size(); ++i)
    scores[i] = 1.0 / (1.0 + std::exp(-a.head.logits[i]));
  return scores;
}

std::vector<std::pair<int, double>> predict(const Model& m, const Sample& s,
                                            double threshold) {
  const EncodedSample es = encode_sample(s, m.vocab, m.cfg);
  const std::vector<double> scores = predict_scores(m, es);
  std::vector<std::pair<int, double>> out;
  for (size_t c = 0; c < scores.size(); ++c)
    if (scores[c] >= threshold) out.emplace_back(static_cast<int>(c), scores[c]);
  return out;
}

double total_loss(const Model& m, const Batch& batch, const Hyperparams& h) {
  const size_t B = batch.samples.size();
  std::vector<FullActs> acts(B);
  k::parallel_for(static_cast<int64_t>(B), [&](int64_t i) {
    full_forward(m, *batch.samples[static_cast<size_t>(i)],
                 acts[static_cast<size_t>(i)]);
  });
  std::vector<std::vector<double>> logits(B), labels(B), hids(B);
  for (size_t i = 0; i < B; ++i) {
    logits[i] = acts[i].head.logits;
    labels[i] = batch.samples[i]->labels;
    hids[i] = acts[i].head.hid;
  }
  double loss = bce_with_grad(logits, labels, h, nullptr);
  if (h.contrastive_enabled)
    loss += contrastive_with_grad(hids, batch.pairs, h, nullptr);
  return loss;
}

double total_loss_with_grad(Model& m, const Batch& batch,
                            const Hyperparams& h) {
  const size_t B = batch.samples.size();
  std::vector<FullActs> acts(B);
  k::parallel_for(static_cast<int64_t>(B), [&](int64_t i) {
    full_forward(m, *batch.samples[static_cast<size_t>(i)],
                 acts[static_cast<size_t>(i)]);
  });
  std::vector<std::vector<double>> logits(B), labels(B), hids(B);
  for (size_t i = 0; i < B; ++i) {
    logits[i] = acts[i].head.logits;
    labels[i] = batch.samples[i]->labels;
    hids[i] = acts[i].head.hid;
  }
  std::vector<std::vector<double>> dlogits, dhid;
  double loss = bce_with_grad(logits, labels, h, &dlogits);
  if (h.contrastive_enabled)
    loss += contrastive_with_grad(hids, batch.pairs, h, &dhid);

  // Per-sample gradient buffers, reduced in sample order: bit-identical for
  // any thread count.
  std::vector<FullGrads> grads(B);
  k::parallel_for(static_cast<int64_t>(B), [&](int64_t ii) {
    const size_t i = static_cast<size_t>(ii);
    FullGrads& fg = grads[i];
    fg.init(m);
    // dhid extra from the contrastive term flows in before the ReLU
    std::vector<double> dhid_extra;
    if (!dhid.empty() && !dhid[i].empty()) {
      dhid_extra = dhid[i];
      // relu applied inside head_backward; hid was post-activation so the
      // contrastive gradient enters at the same point as head2's
    }
    std::vector<double> din;
    head_backward(m, acts[i].head_in, acts[i].head, dlogits[i], dhid_extra,
                  &din, fg.head);
    const int d = m.cfg.embed_dim;
    std::vector<double> de_txt(din.begin(), din.begin() + d);
    std::vector<double> de_crop(din.begin() + d, din.begin() + 2 * d);
    std::vector<double> de_full(din.begin() + 2 * d, din.begin() + 3 * d);
    text_backward(m, batch.samples[i]->token_ids, acts[i].txt, de_txt, fg.text);
    image_backward(m, batch.samples[i]->crop_img, acts[i].crop, de_crop,
                   fg.image);
    image_backward(m, batch.samples[i]->full_img, acts[i].full, de_full,
                   fg.image);
  });
  for (size_t i = 0; i < B; ++i) grads[i].accumulate_into(m);
  return loss;
}

// --- gradient check ---

std::map<std::string, double> gradient_check_per_tensor(Model& m,
                                                        const Batch& batch,
                                                        const Hyperparams& h,
                                                        double eps) {
  for (Tensor* t : m.all_params()) t->zero_grad();
  total_loss_with_grad(m, batch, h);
  std::map<std::string, std::vector<double>> analytic;
  for (Tensor* t : m.all_params()) analytic[t->name] = t->g;

  std::map<std::string, double> errors;
  for (Tensor* t : m.all_params()) {
    const std::vector<double>& ga = analytic[t->name];
    double diff2 = 0.0, na2 = 0.0, nn2 = 0.0;
    for (size_t i = 0; i < t->w.size(); ++i) {
      const double orig = t->w[i];
      auto central = [&](double step) {
        t->w[i] = orig + step;
        const double lp = total_loss(m, batch, h);
        t->w[i] = orig - step;
        const double lm = total_loss(m, batch, h);
        t->w[i] = orig;
        return (lp - lm) / (2.0 * step);
      };
      double gn = central(eps);
      // a ReLU kink inside [-eps, eps] corrupts the central difference;
      // refine the step on disagreement, where the function is locally smooth
      if (std::abs(ga[i] - gn) >
          1e-7 + 1e-4 * std::max(std::abs(ga[i]), std::abs(gn)))
        gn = central(eps / 16.0);
      const double d = ga[i] - gn;
      diff2 += d * d;
      na2 += ga[i] * ga[i];
      nn2 += gn * gn;
    }
    const double denom = std::sqrt(na2) + std::sqrt(nn2);
    errors[t->name] = denom < 1e-30 ? 0.0 : std::sqrt(diff2) / denom;
  }
  return errors;
}

double gradient_check(Model& m, const Batch& batch, const Hyperparams& h,
                      double eps) {
  double worst = 0.0;
  for (const auto& [name, err] : gradient_check_per_tensor(m, batch, h, eps)) {
    (void)name;
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace appray::model
