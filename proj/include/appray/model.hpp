#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "appray/common.hpp"
#include "appray/grouping.hpp"
#include "appray/raster.hpp"
#include "appray/taxonomy.hpp"

namespace appray::model {

using ui::Raster;

inline constexpr const char* kNoTextSentinel =
    "This element does not contain texts.";

// Classifier input unit: element/cluster crop, the whole screen, and the
// concatenated member text.
struct Sample {
  Raster crop;
  Raster full_ui;
  std::string text = kNoTextSentinel;
  std::vector<float> labels;  // multi-hot over Taxonomy::classifier_labels
  std::string app_id;
  int state_id = -1;
};

Sample featurize(const group::Component& component, const Raster& screenshot);

// --- augmentation ---

struct AugmentationSpec {
  enum class Op {
    kGrayscale,
    kRotate90,
    kHorizontalFlip,
    kColorJitter,
    kSynonymReplacement,
    kRandomInsertion,
    kRandomSwap
  };
  struct Entry {
    Op op;
    double prob = 1.0;
  };
  std::vector<Entry> image_ops;  // composed left-to-right
  std::vector<Entry> text_ops;
  // synonym dictionary override; empty uses the bundled lexicon
  std::map<std::string, std::string> synonyms;

  static AugmentationSpec defaults();
};

// Bundled commerce/UI synonym pairs (one-way entries).
const std::map<std::string, std::string>& synonym_lexicon();

Sample augment(const Sample& s, const AugmentationSpec& spec, Rng& rng);

// --- hyperparameters ---

enum class Similarity { kCosine, kEuclidean };
enum class NegativeStrategy { kRandom, kHard, kBalanced };
const char* negative_strategy_name(NegativeStrategy s);

struct Hyperparams {
  double tau = 0.1;  // temperature
  double xi = 0.2;   // hard-negative margin
  std::vector<double> class_weights;  // empty = unit weights
  int embed_dim = 64;
  double threshold = 0.5;
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 32;
  int epochs = 50;
  int patience = 10;
  uint64_t seed = 1;
  Similarity similarity = Similarity::kCosine;
  bool include_positive_in_denominator = false;  // InfoNCE variant, off: Eq. as printed
  bool bce_positive_term_only = false;           // on: cross-entropy as printed
  bool contrastive_enabled = true;
  NegativeStrategy strategy = NegativeStrategy::kHard;
  int negatives_per_anchor = 8;
  bool augmentation_enabled = true;
  bool class_weights_enabled = true;
  // per-stage epoch overrides; 0 falls back to epochs
  int stage1_epochs = 0;
  int stage2_epochs = 0;
  int stage3_epochs = 0;
};

// --- model parameters ---

struct Tensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> w;
  std::vector<double> g;  // gradient accumulator
  int64_t size() const { return static_cast<int64_t>(w.size()); }
  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }
};

struct ModelConfig {
  int n_labels = 16;
  int embed_dim = 64;
  int token_dim = 32;
  int text_hidden = 64;
  int conv1_channels = 6;
  int conv2_channels = 12;
  int head_hidden = 128;
  int image_size = 64;  // downscale target for both image paths
  bool relu = true;     // identity activations when false (linear-only model)
};

struct Vocab {
  std::vector<std::string> words;  // id = index + 1; id 0 is the OOV bucket
  std::map<std::string, int> index;

  int size() const { return static_cast<int>(words.size()) + 1; }
  static Vocab build(const std::vector<std::string>& texts);
  std::vector<int> encode(const std::string& text) const;
};

std::vector<std::string> tokenize(const std::string& text);

struct Model {
  ModelConfig cfg;
  Vocab vocab;

  Tensor tok_emb;              // [V, token_dim]
  Tensor txt1_w, txt1_b;       // [text_hidden, token_dim]
  Tensor txt2_w, txt2_b;       // [embed_dim, text_hidden]
  Tensor conv1_w, conv1_b;     // [c1, 3, 3, 3]
  Tensor conv2_w, conv2_b;     // [c2, c1, 3, 3]
  Tensor img_proj_w, img_proj_b;  // [embed_dim, c2]
  Tensor head1_w, head1_b;     // [head_hidden, 3*embed_dim]
  Tensor head2_w, head2_b;     // [n_labels, head_hidden]

  std::vector<Tensor*> all_params();
  std::vector<const Tensor*> all_params() const;
  std::vector<Tensor*> image_encoder_params();
  std::vector<Tensor*> text_encoder_params();
  std::vector<Tensor*> head_params();

  static Model init(const ModelConfig& cfg, Vocab vocab, uint64_t seed);
};

// Sample reduced to numeric inputs (images downscaled and normalized, text
// tokenized against a fixed vocabulary).
struct EncodedSample {
  std::vector<double> crop_img;  // 3 * image_size^2
  std::vector<double> full_img;
  std::vector<int> token_ids;
  std::vector<double> labels;  // multi-hot, n_labels
  std::string app_id;
};

EncodedSample encode_sample(const Sample& s, const Vocab& vocab,
                            const ModelConfig& cfg);
// Box-average downscale to size x size, normalized to [0, 1].
std::vector<double> downscale_image(const Raster& img, int size);

// --- similarity and losses ---

// Cosine similarity in [-1, 1] (throws ZeroVector on a zero input) or negated
// Euclidean distance, per metric.
double similarity(const std::vector<double>& a, const std::vector<double>& b,
                  Similarity metric = Similarity::kCosine);

// -log( exp(sim(a,p)/tau) / sum_k exp(sim(a,n_k)/tau) ), denominator over the
// negatives only unless include_positive is set. Log-sum-exp stabilized.
double contrastive_distance_loss(const std::vector<double>& anchor,
                                 const std::vector<double>& positive,
                                 const std::vector<std::vector<double>>& negatives,
                                 double tau,
                                 Similarity metric = Similarity::kCosine,
                                 bool include_positive = false);

// One anchor term of the pairwise contrastive loss. `other` is the partner
// selected by y (a same-class sample for the L+ term, a different-class one
// for L-); the zero-weighted term of (1-y)L- + yL+ drops out.
struct ContrastTerm {
  int y = 1;  // 1: other is same-class, 0: different-class
  std::vector<double> anchor;
  std::vector<double> other;
  std::vector<std::vector<double>> negatives;
};

// mean over anchors of (1-y) * L- + y * L+.
double contrastive_loss(const std::vector<ContrastTerm>& batch, double tau,
                        Similarity metric = Similarity::kCosine,
                        bool include_positive = false);

// Class-weighted binary cross-entropy over logits, mean over the batch.
// positive_term_only keeps only the -y log(sigma) term (categorical form).
double classification_loss(const std::vector<std::vector<double>>& logits,
                           const std::vector<std::vector<double>>& labels,
                           const std::vector<double>& w,
                           bool positive_term_only = false);

// w_c = N_total / (|C| * max(N_c, 1)), normalized to mean 1.
std::vector<double> class_weights(const std::vector<int64_t>& label_counts);

// --- negative sampling ---

struct NegSamplingInput {
  const std::vector<std::vector<double>>* labels = nullptr;      // required
  const std::vector<std::vector<double>>* embeddings = nullptr;  // hard only
  std::vector<int> positive;  // per-anchor positive index, -1 = none
};

// Per-anchor negative index lists; label sets are disjoint from the anchor's
// for every strategy. Throws NoNegativesAvailable when no anchor has any
// candidate.
std::vector<std::vector<int>> sample_negatives(const NegSamplingInput& in,
                                               NegativeStrategy strategy,
                                               const Hyperparams& h, Rng& rng);

// --- batches, total loss, training ---

struct PairSpec {
  int anchor = -1;
  int other = -1;  // positive (y=1) or dissimilar partner (y=0)
  int y = 1;
  std::vector<int> negatives;
};

struct Batch {
  std::vector<const EncodedSample*> samples;
  std::vector<PairSpec> pairs;  // contrastive pairing over sample indices
};

// Full-pipeline objective: weighted BCE on the head logits plus the
// contrastive term over the head's hidden embedding.
double total_loss(const Model& m, const Batch& batch, const Hyperparams& h);

// Analytic gradients of total_loss into Tensor::g (accumulated; call
// zero_grad first). Returns the loss.
double total_loss_with_grad(Model& m, const Batch& batch, const Hyperparams& h);

struct EpochLog {
  int stage = 0;
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_macro_f1 = 0.0;
};

struct Corpus {
  std::vector<Sample> samples;
  std::map<std::string, int> app_fold;  // app-level fold assignment
  int n_folds = 5;
};

struct TrainedModel {
  Model model;
  Hyperparams hyperparams;
  std::vector<EpochLog> log;
  double best_val_macro_f1 = 0.0;
  double best_val_micro_f1 = 0.0;
  // byte hashes of all encoder tensors around stage 3; equal by the freezing
  // contract
  uint64_t encoder_hash_pre_stage3 = 0;
  uint64_t encoder_hash_post_stage3 = 0;
};

// Staged training: image encoder with a temporary head, then the text
// encoder, then the final head on frozen concatenated embeddings. Apps in
// val_fold form the validation split. Throws DivergenceDetected on non-finite
// loss.
TrainedModel train(const Corpus& corpus, const Hyperparams& h, int val_fold);

std::vector<std::pair<int, double>> predict(const Model& m, const Sample& s,
                                            double threshold);
std::vector<double> predict_scores(const Model& m, const EncodedSample& es);

// --- gradient check ---

// Max norm-based relative error between analytic and central-difference
// gradients of total_loss, over every parameter tensor.
double gradient_check(Model& m, const Batch& batch, const Hyperparams& h,
                      double eps);
// Per-tensor variant (same metric); used by the corrupted-gradient control.
std::map<std::string, double> gradient_check_per_tensor(Model& m,
                                                        const Batch& batch,
                                                        const Hyperparams& h,
                                                        double eps);

// --- checkpoints ---

// Directory checkpoint: model.json manifest + tensors/<name>.f32 raw
// little-endian float32 arrays.
void save_checkpoint(const TrainedModel& tm, const std::string& dir);
TrainedModel load_checkpoint(const std::string& dir);

}  // namespace appray::model
