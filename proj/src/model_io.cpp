#include <cstring>
#include <filesystem>
#include <fstream>

#include "appray/model.hpp"
#include "appray/serde.hpp"

namespace appray::model {

namespace fs = std::filesystem;

namespace {

void write_f32(const std::string& path, const std::vector<double>& values) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw AppError(ErrorKind::IoFailure, "cannot write " + path);
  for (double v : values) {
    const float x = static_cast<float>(v);
    uint32_t bits;
    std::memcpy(&bits, &x, 4);
    // little-endian on disk regardless of host
    const uint8_t raw[4] = {
        static_cast<uint8_t>(bits & 0xFF),
        static_cast<uint8_t>((bits >> 8) & 0xFF),
        static_cast<uint8_t>((bits >> 16) & 0xFF),
        static_cast<uint8_t>((bits >> 24) & 0xFF)};
    f.write(reinterpret_cast<const char*>(raw), 4);
  }
  if (!f) throw AppError(ErrorKind::IoFailure, "short write to " + path);
}

std::vector<double> read_f32(const std::string& path, size_t expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw AppError(ErrorKind::IoFailure, "cannot open " + path);
  std::vector<double> out;
  out.reserve(expected);
  uint8_t raw[4];
  while (f.read(reinterpret_cast<char*>(raw), 4)) {
    uint32_t bits = static_cast<uint32_t>(raw[0]) |
                    (static_cast<uint32_t>(raw[1]) << 8) |
                    (static_cast<uint32_t>(raw[2]) << 16) |
                    (static_cast<uint32_t>(raw[3]) << 24);
    float x;
    std::memcpy(&x, &bits, 4);
    out.push_back(static_cast<double>(x));
  }
  if (out.size() != expected)
    throw AppError(ErrorKind::CorruptStore,
                   path + ": expected " + std::to_string(expected) +
                       " floats, got " + std::to_string(out.size()));
  return out;
}

Json hyperparams_to_json(const Hyperparams& h) {
  Json j;
  j["tau"] = h.tau;
  j["xi"] = h.xi;
  j["class_weights"] = h.class_weights;
  j["embed_dim"] = h.embed_dim;
  j["threshold"] = h.threshold;
  j["lr"] = h.lr;
  j["adam_beta1"] = h.adam_beta1;
  j["adam_beta2"] = h.adam_beta2;
  j["adam_eps"] = h.adam_eps;
  j["batch_size"] = h.batch_size;
  j["epochs"] = h.epochs;
  j["patience"] = h.patience;
  j["seed"] = h.seed;
  j["similarity"] = h.similarity == Similarity::kCosine ? "cosine" : "euclidean";
  j["include_positive_in_denominator"] = h.include_positive_in_denominator;
  j["bce_positive_term_only"] = h.bce_positive_term_only;
  j["contrastive_enabled"] = h.contrastive_enabled;
  j["strategy"] = negative_strategy_name(h.strategy);
  j["negatives_per_anchor"] = h.negatives_per_anchor;
  j["augmentation_enabled"] = h.augmentation_enabled;
  j["class_weights_enabled"] = h.class_weights_enabled;
  j["stage1_epochs"] = h.stage1_epochs;
  j["stage2_epochs"] = h.stage2_epochs;
  j["stage3_epochs"] = h.stage3_epochs;
  return j;
}

Hyperparams hyperparams_from_json(const Json& j) {
  Hyperparams h;
  h.tau = j.value("tau", h.tau);
  h.xi = j.value("xi", h.xi);
  if (j.contains("class_weights"))
    h.class_weights = j["class_weights"].get<std::vector<double>>();
  h.embed_dim = j.value("embed_dim", h.embed_dim);
  h.threshold = j.value("threshold", h.threshold);
  h.lr = j.value("lr", h.lr);
  h.adam_beta1 = j.value("adam_beta1", h.adam_beta1);
  h.adam_beta2 = j.value("adam_beta2", h.adam_beta2);
  h.adam_eps = j.value("adam_eps", h.adam_eps);
  h.batch_size = j.value("batch_size", h.batch_size);
  h.epochs = j.value("epochs", h.epochs);
  h.patience = j.value("patience", h.patience);
  h.seed = j.value("seed", h.seed);
  h.similarity = j.value("similarity", std::string("cosine")) == "euclidean"
                     ? Similarity::kEuclidean
                     : Similarity::kCosine;
  h.include_positive_in_denominator =
      j.value("include_positive_in_denominator", false);
  h.bce_positive_term_only = j.value("bce_positive_term_only", false);
  h.contrastive_enabled = j.value("contrastive_enabled", true);
  const std::string strat = j.value("strategy", std::string("hard"));
  h.strategy = strat == "random"
                   ? NegativeStrategy::kRandom
                   : (strat == "balanced" ? NegativeStrategy::kBalanced
                                          : NegativeStrategy::kHard);
  h.negatives_per_anchor = j.value("negatives_per_anchor", 8);
  h.augmentation_enabled = j.value("augmentation_enabled", true);
  h.class_weights_enabled = j.value("class_weights_enabled", true);
  h.stage1_epochs = j.value("stage1_epochs", 0);
  h.stage2_epochs = j.value("stage2_epochs", 0);
  h.stage3_epochs = j.value("stage3_epochs", 0);
  return h;
}

}  // namespace

void save_checkpoint(const TrainedModel& tm, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "tensors", ec);
  if (ec) throw AppError(ErrorKind::IoFailure, "cannot create " + dir);

  const Model& m = tm.model;
  Json manifest;
  manifest["format_version"] = "1";
  manifest["tool_version"] = kVersion;
  Json cfg;
  cfg["n_labels"] = m.cfg.n_labels;
  cfg["embed_dim"] = m.cfg.embed_dim;
  cfg["token_dim"] = m.cfg.token_dim;
  cfg["text_hidden"] = m.cfg.text_hidden;
  cfg["conv1_channels"] = m.cfg.conv1_channels;
  cfg["conv2_channels"] = m.cfg.conv2_channels;
  cfg["head_hidden"] = m.cfg.head_hidden;
  cfg["image_size"] = m.cfg.image_size;
  cfg["relu"] = m.cfg.relu;
  manifest["config"] = cfg;
  manifest["vocab"] = m.vocab.words;
  manifest["hyperparams"] = hyperparams_to_json(tm.hyperparams);
  manifest["best_val_macro_f1"] = tm.best_val_macro_f1;
  manifest["best_val_micro_f1"] = tm.best_val_micro_f1;

  Json tensors = Json::array();
  for (const Tensor* t : tm.model.all_params()) {
    tensors.push_back({{"name", t->name},
                       {"shape", t->shape},
                       {"file", "tensors/" + t->name + ".f32"}});
    write_f32((fs::path(dir) / "tensors" / (t->name + ".f32")).string(), t->w);
  }
  manifest["tensors"] = tensors;
  write_text_file((fs::path(dir) / "model.json").string(),
                  manifest.dump(2) + "\n");
}

TrainedModel load_checkpoint(const std::string& dir) {
  const Json manifest = read_json_file((fs::path(dir) / "model.json").string());
  if (manifest.value("format_version", "") != "1")
    throw AppError(ErrorKind::CorruptStore, "unsupported checkpoint version");

  ModelConfig cfg;
  const Json& jc = manifest.at("config");
  cfg.n_labels = jc.at("n_labels").get<int>();
  cfg.embed_dim = jc.at("embed_dim").get<int>();
  cfg.token_dim = jc.at("token_dim").get<int>();
  cfg.text_hidden = jc.at("text_hidden").get<int>();
  cfg.conv1_channels = jc.at("conv1_channels").get<int>();
  cfg.conv2_channels = jc.at("conv2_channels").get<int>();
  cfg.head_hidden = jc.at("head_hidden").get<int>();
  cfg.image_size = jc.at("image_size").get<int>();
  cfg.relu = jc.value("relu", true);

  Vocab vocab;
  for (const Json& w : manifest.at("vocab")) {
    vocab.words.push_back(w.get<std::string>());
    vocab.index[vocab.words.back()] = static_cast<int>(vocab.words.size());
  }

  TrainedModel tm;
  tm.model = Model::init(cfg, std::move(vocab), 0);
  tm.hyperparams = hyperparams_from_json(manifest.at("hyperparams"));
  tm.best_val_macro_f1 = manifest.value("best_val_macro_f1", 0.0);
  tm.best_val_micro_f1 = manifest.value("best_val_micro_f1", 0.0);

  std::map<std::string, std::pair<std::vector<int>, std::string>> entries;
  for (const Json& jt : manifest.at("tensors"))
    entries[jt.at("name").get<std::string>()] = {
        jt.at("shape").get<std::vector<int>>(),
        jt.at("file").get<std::string>()};

  for (Tensor* t : tm.model.all_params()) {
    auto it = entries.find(t->name);
    if (it == entries.end())
      throw AppError(ErrorKind::CorruptStore, "missing tensor " + t->name);
    if (it->second.first != t->shape)
      throw AppError(ErrorKind::CorruptStore, "shape mismatch for " + t->name);
    t->w = read_f32((fs::path(dir) / it->second.second).string(), t->w.size());
  }
  return tm;
}

}  // namespace appray::model
