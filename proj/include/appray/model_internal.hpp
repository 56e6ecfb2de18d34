#pragma once

// Shared between the model translation units and the training code; not part
// of the module's public surface.

#include <vector>

#include "appray/model.hpp"

namespace appray::model {

struct ImageActs {
  std::vector<double> h1pre, h1, p1, h2pre, h2, p2, g, e;
};

struct TextActs {
  std::vector<double> t, a1pre, a1, epre, e;
};

struct HeadActs {
  std::vector<double> hpre, hid, logits;
};

struct ImageGrads {
  std::vector<double> conv1_w, conv1_b, conv2_w, conv2_b, img_proj_w,
      img_proj_b;
  void init(const Model& m) {
    conv1_w.assign(m.conv1_w.w.size(), 0.0);
    conv1_b.assign(m.conv1_b.w.size(), 0.0);
    conv2_w.assign(m.conv2_w.w.size(), 0.0);
    conv2_b.assign(m.conv2_b.w.size(), 0.0);
    img_proj_w.assign(m.img_proj_w.w.size(), 0.0);
    img_proj_b.assign(m.img_proj_b.w.size(), 0.0);
  }
  void accumulate_into(Model& m) const {
    auto add = [](Tensor& t, const std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) t.g[i] += g[i];
    };
    add(m.conv1_w, conv1_w);
    add(m.conv1_b, conv1_b);
    add(m.conv2_w, conv2_w);
    add(m.conv2_b, conv2_b);
    add(m.img_proj_w, img_proj_w);
    add(m.img_proj_b, img_proj_b);
  }
};

struct TextGrads {
  std::vector<double> tok_emb, txt1_w, txt1_b, txt2_w, txt2_b;
  void init(const Model& m) {
    tok_emb.assign(m.tok_emb.w.size(), 0.0);
    txt1_w.assign(m.txt1_w.w.size(), 0.0);
    txt1_b.assign(m.txt1_b.w.size(), 0.0);
    txt2_w.assign(m.txt2_w.w.size(), 0.0);
    txt2_b.assign(m.txt2_b.w.size(), 0.0);
  }
  void accumulate_into(Model& m) const {
    auto add = [](Tensor& t, const std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) t.g[i] += g[i];
    };
    add(m.tok_emb, tok_emb);
    add(m.txt1_w, txt1_w);
    add(m.txt1_b, txt1_b);
    add(m.txt2_w, txt2_w);
    add(m.txt2_b, txt2_b);
  }
};

struct HeadGrads {
  std::vector<double> head1_w, head1_b, head2_w, head2_b;
  void init(const Model& m) {
    head1_w.assign(m.head1_w.w.size(), 0.0);
    head1_b.assign(m.head1_b.w.size(), 0.0);
    head2_w.assign(m.head2_w.w.size(), 0.0);
    head2_b.assign(m.head2_b.w.size(), 0.0);
  }
  void accumulate_into(Model& m) const {
    auto add = [](Tensor& t, const std::vector<double>& g) {
      for (size_t i = 0; i < g.size(); ++i) t.g[i] += g[i];
    };
    add(m.head1_w, head1_w);
    add(m.head1_b, head1_b);
    add(m.head2_w, head2_w);
    add(m.head2_b, head2_b);
  }
};

struct FullGrads {
  ImageGrads image;
  TextGrads text;
  HeadGrads head;
  void init(const Model& m) {
    image.init(m);
    text.init(m);
    head.init(m);
  }
  void accumulate_into(Model& m) const {
    image.accumulate_into(m);
    text.accumulate_into(m);
    head.accumulate_into(m);
  }
};

void image_forward(const Model& m, const std::vector<double>& x, ImageActs& a);
void image_backward(const Model& m, const std::vector<double>& x,
                    const ImageActs& a, const std::vector<double>& de,
                    ImageGrads& out);
void text_forward(const Model& m, const std::vector<int>& ids, TextActs& a);
void text_backward(const Model& m, const std::vector<int>& ids,
                   const TextActs& a, const std::vector<double>& de,
                   TextGrads& out);
void head_forward(const Model& m, const std::vector<double>& in, HeadActs& a);
void head_backward(const Model& m, const std::vector<double>& in,
                   const HeadActs& a, const std::vector<double>& dlogits,
                   const std::vector<double>& dhid_extra,
                   std::vector<double>* din, HeadGrads& out);

// Weighted BCE over a logit batch; writes d loss / d logit when dlogits given.
double bce_with_grad(const std::vector<std::vector<double>>& logits,
                     const std::vector<std::vector<double>>& labels,
                     const Hyperparams& h,
                     std::vector<std::vector<double>>* dlogits);

// Contrastive loss over an embedding batch with explicit pairing; writes d loss /
// d embedding when demb given.
double contrastive_with_grad(const std::vector<std::vector<double>>& emb,
                             const std::vector<PairSpec>& pairs,
                             const Hyperparams& h,
                             std::vector<std::vector<double>>* demb);

}  // namespace appray::model
