#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "appray/model.hpp"

namespace appray::model {

const char* negative_strategy_name(NegativeStrategy s) {
  switch (s) {
    case NegativeStrategy::kRandom: return "random";
    case NegativeStrategy::kHard: return "hard";
    case NegativeStrategy::kBalanced: return "balanced";
  }
  return "random";
}

Sample featurize(const group::Component& component, const Raster& screenshot) {
  Sample s;
  s.crop = ui::crop(screenshot, component.bbox);
  s.full_ui = screenshot;
  std::string text;
  for (const ui::UiElement* m : component.members) {
    const std::string& label = ui::element_label(*m);
    if (label.empty()) continue;
    if (!text.empty()) text += ' ';
    text += label;
  }
  s.text = text.empty() ? kNoTextSentinel : text;
  s.state_id = component.state_id;
  return s;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
  Vocab v;
  for (const std::string& t : texts) {
    for (const std::string& w : tokenize(t)) {
      if (v.index.emplace(w, static_cast<int>(v.words.size()) + 1).second)
        v.words.push_back(w);
    }
  }
  return v;
}

std::vector<int> Vocab::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const std::string& w : tokenize(text)) {
    auto it = index.find(w);
    ids.push_back(it == index.end() ? 0 : it->second);
  }
  if (ids.empty()) ids.push_back(0);
  return ids;
}

std::vector<double> downscale_image(const Raster& img, int size) {
  std::vector<double> out(static_cast<size_t>(3) * size * size, 0.0);
  if (img.width <= 0 || img.height <= 0) return out;
  for (int y = 0; y < size; ++y) {
    const int sy0 = static_cast<int>(static_cast<int64_t>(y) * img.height / size);
    int sy1 = static_cast<int>(static_cast<int64_t>(y + 1) * img.height / size);
    if (sy1 <= sy0) sy1 = sy0 + 1;
    for (int x = 0; x < size; ++x) {
      const int sx0 = static_cast<int>(static_cast<int64_t>(x) * img.width / size);
      int sx1 = static_cast<int>(static_cast<int64_t>(x + 1) * img.width / size);
      if (sx1 <= sx0) sx1 = sx0 + 1;
      int64_t acc[3] = {0, 0, 0};
      for (int sy = sy0; sy < sy1; ++sy) {
        const uint8_t* p = img.at(sx0, sy);
        for (int sx = sx0; sx < sx1; ++sx) {
          acc[0] += *p++;
          acc[1] += *p++;
          acc[2] += *p++;
        }
      }
      const double inv =
          1.0 / (255.0 * static_cast<double>(sy1 - sy0) * (sx1 - sx0));
      for (int c = 0; c < 3; ++c)
        out[static_cast<size_t>(c) * size * size + y * size + x] =
            static_cast<double>(acc[c]) * inv;
    }
  }
  return out;
}

EncodedSample encode_sample(const Sample& s, const Vocab& vocab,
                            const ModelConfig& cfg) {
  EncodedSample es;
  es.crop_img = downscale_image(s.crop, cfg.image_size);
  es.full_img = downscale_image(s.full_ui, cfg.image_size);
  es.token_ids = vocab.encode(s.text);
  es.labels.assign(static_cast<size_t>(cfg.n_labels), 0.0);
  for (size_t i = 0; i < s.labels.size() && i < es.labels.size(); ++i)
    es.labels[i] = s.labels[i] > 0.5f ? 1.0 : 0.0;
  es.app_id = s.app_id;
  return es;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void check_dims(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw AppError(ErrorKind::DimensionMismatch,
                   "embedding dims " + std::to_string(a.size()) + " vs " +
                       std::to_string(b.size()));
}

// Internal variant with a norm floor; keeps training well-defined if a ReLU
// embedding goes all-zero. The public similarity() keeps the strict contract.
double sim_guarded(const std::vector<double>& a, const std::vector<double>& b,
                   Similarity metric) {
  if (metric == Similarity::kEuclidean) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      acc += d * d;
    }
    return -std::sqrt(acc);
  }
  const double na = std::max(norm(a), 1e-12);
  const double nb = std::max(norm(b), 1e-12);
  return dot(a, b) / (na * nb);
}

}  // namespace

double similarity(const std::vector<double>& a, const std::vector<double>& b,
                  Similarity metric) {
  check_dims(a, b);
  if (metric == Similarity::kCosine) {
    if (norm(a) == 0.0 || norm(b) == 0.0)
      throw AppError(ErrorKind::ZeroVector,
                     "cosine similarity of a zero vector");
  }
  return sim_guarded(a, b, metric);
}

double contrastive_distance_loss(
    const std::vector<double>& anchor, const std::vector<double>& positive,
    const std::vector<std::vector<double>>& negatives, double tau,
    Similarity metric, bool include_positive) {
  if (negatives.empty())
    throw AppError(ErrorKind::MalformedInput,
                   "contrastive_distance_loss needs at least one negative");
  const double sp = sim_guarded(anchor, positive, metric) / tau;
  std::vector<double> terms;
  terms.reserve(negatives.size() + 1);
  for (const auto& n : negatives) {
    check_dims(anchor, n);
    terms.push_back(sim_guarded(anchor, n, metric) / tau);
  }
  if (include_positive) terms.push_back(sp);
  const double m = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - m);
  const double lse = m + std::log(acc);
  return -sp + lse;
}

double contrastive_loss(const std::vector<ContrastTerm>& batch, double tau,
                        Similarity metric, bool include_positive) {
  if (batch.empty()) return 0.0;
  double acc = 0.0;
  for (const ContrastTerm& t : batch) {
    // (1-y)L- + yL+: `other` holds the partner selected by y, so the
    // zero-weighted term never needs evaluation.
    acc += contrastive_distance_loss(t.anchor, t.other, t.negatives, tau,
                                     metric, include_positive);
  }
  return acc / static_cast<double>(batch.size());
}

double classification_loss(const std::vector<std::vector<double>>& logits,
                           const std::vector<std::vector<double>>& labels,
                           const std::vector<double>& w,
                           bool positive_term_only) {
  if (logits.size() != labels.size())
    throw AppError(ErrorKind::DimensionMismatch, "logits/labels batch size");
  if (logits.empty()) return 0.0;
  const size_t C = logits[0].size();
  double acc = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if (logits[i].size() != C || labels[i].size() != C)
      throw AppError(ErrorKind::DimensionMismatch, "class count mismatch");
    for (size_t c = 0; c < C; ++c) {
      const double z = logits[i][c];
      const double y = labels[i][c];
      const double wc = w.empty() ? 1.0 : w[c];
      // stable: log(1+e^-|z|) + max(z,0) terms
      const double log_sig = z >= 0 ? -std::log1p(std::exp(-z))
                                    : z - std::log1p(std::exp(z));
      const double log_one_minus =
          z >= 0 ? -z - std::log1p(std::exp(-z)) : -std::log1p(std::exp(z));
      double term = -y * log_sig;
      if (!positive_term_only) term -= (1.0 - y) * log_one_minus;
      acc += wc * term;
    }
  }
  return acc / static_cast<double>(logits.size());
}

std::vector<double> class_weights(const std::vector<int64_t>& label_counts) {
  const size_t C = label_counts.size();
  std::vector<double> w(C, 1.0);
  if (C == 0) return w;
  const double total = static_cast<double>(
      std::accumulate(label_counts.begin(), label_counts.end(), int64_t{0}));
  if (total <= 0) return w;
  double sum = 0.0;
  for (size_t c = 0; c < C; ++c) {
    w[c] = total / (static_cast<double>(C) *
                    std::max<double>(1.0, static_cast<double>(label_counts[c])));
    sum += w[c];
  }
  const double mean = sum / static_cast<double>(C);
  for (double& x : w) x /= mean;
  return w;
}

namespace {

bool labels_intersect(const std::vector<double>& a,
                      const std::vector<double>& b) {
  for (size_t i = 0; i < a.size() && i < b.size(); ++i)
    if (a[i] > 0.5 && b[i] > 0.5) return true;
  return false;
}

std::vector<int> shuffled_take(std::vector<int> pool, size_t k, Rng& rng) {
  for (size_t i = 0; i + 1 < pool.size(); ++i) {
    const size_t j = i + rng.uniform_int(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  if (pool.size() > k) pool.resize(k);
  return pool;
}

}  // namespace

std::vector<std::vector<int>> sample_negatives(const NegSamplingInput& in,
                                               NegativeStrategy strategy,
                                               const Hyperparams& h, Rng& rng) {
  if (!in.labels)
    throw AppError(ErrorKind::MalformedInput, "sample_negatives needs labels");
  const auto& labels = *in.labels;
  const size_t n = labels.size();
  const size_t cap = static_cast<size_t>(std::max(1, h.negatives_per_anchor));

  std::vector<std::vector<int>> out(n);
  bool any = false;
  for (size_t i = 0; i < n; ++i) {
    std::vector<int> pool;
    size_t positives = 0;
    for (size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      if (labels_intersect(labels[i], labels[j])) ++positives;
      else pool.push_back(static_cast<int>(j));
    }
    if (pool.empty()) continue;
    any = true;
    switch (strategy) {
      case NegativeStrategy::kRandom:
        out[i] = shuffled_take(std::move(pool), cap, rng);
        break;
      case NegativeStrategy::kBalanced: {
        const size_t k = std::min(pool.size(), std::max<size_t>(1, positives));
        out[i] = shuffled_take(std::move(pool), k, rng);
        break;
      }
      case NegativeStrategy::kHard: {
        if (!in.embeddings)
          throw AppError(ErrorKind::MalformedInput,
                         "hard sampling needs embeddings");
        const auto& emb = *in.embeddings;
        const int pos_idx =
            i < in.positive.size() ? in.positive[i] : -1;
        std::vector<std::pair<double, int>> scored;  // (sim to anchor, idx)
        for (int j : pool)
          scored.emplace_back(
              sim_guarded(emb[i], emb[static_cast<size_t>(j)], h.similarity),
              j);
        // margin violations first (sim(a,p) - sim(a,n) < xi), hardest first.
        std::vector<std::pair<double, int>> chosen;
        if (pos_idx >= 0) {
          const double sp =
              sim_guarded(emb[i], emb[static_cast<size_t>(pos_idx)], h.similarity);
          for (const auto& sn : scored)
            if (sp - sn.first < h.xi) chosen.push_back(sn);
        }
        if (chosen.empty()) chosen = scored;  // fall back to the closest
        std::stable_sort(chosen.begin(), chosen.end(),
                         [](const auto& a, const auto& b) {
                           if (a.first != b.first) return a.first > b.first;
                           return a.second < b.second;
                         });
        if (chosen.size() > cap) chosen.resize(cap);
        for (const auto& sn : chosen) out[i].push_back(sn.second);
        break;
      }
    }
  }
  if (!any)
    throw AppError(ErrorKind::NoNegativesAvailable,
                   "no anchor has a different-class candidate");
  return out;
}

}  // namespace appray::model
