#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "appray/corpus.hpp"
#include "appray/explore.hpp"
#include "appray/kernels.hpp"
#include "appray/metrics.hpp"
#include "appray/model.hpp"
#include "appray/pipeline.hpp"
#include "appray/refiner.hpp"
#include "appray/serde.hpp"
#include "appray/trace.hpp"

namespace fs = std::filesystem;
using namespace appray;

namespace {

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::BadArgs:
      return 2;
    case ErrorKind::MalformedInput:
    case ErrorKind::MissingBounds:
    case ErrorKind::IoFailure:
    case ErrorKind::CorruptStore:
    case ErrorKind::QuotaUnsatisfiable:
    case ErrorKind::UnsupportedType:
    case ErrorKind::BadTarget:
    case ErrorKind::UnparseableAction:
      return 3;
    default:
      return 4;
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

struct ExploreArgs {
  std::string app;
  std::string policy = "random";
  std::string tasks_file;
  std::string mock_responses;
  std::string script_file;
  std::string out;
  int steps = 200;
  uint64_t seed = 1;
};

std::vector<explore::Task> load_tasks(const ExploreArgs& args) {
  if (args.tasks_file.empty()) return explore::default_tasks();
  return explore::tasks_from_json(read_text_file(args.tasks_file));
}

int run_explore(const ExploreArgs& args) {
  std::unique_ptr<explore::FixtureDevice> fixture;
  std::unique_ptr<explore::AdbDevice> adb;
  explore::Device* device = nullptr;
  if (args.app == "device") {
    adb = std::make_unique<explore::AdbDevice>();
    device = adb.get();
  } else {
    fixture = std::make_unique<explore::FixtureDevice>(args.app);
    device = fixture.get();
  }

  Json mock_json;
  if (!args.mock_responses.empty())
    mock_json = read_json_file(args.mock_responses);
  Json script_json;
  if (!args.script_file.empty()) script_json = read_json_file(args.script_file);

  const std::vector<explore::Task> tasks = load_tasks(args);
  std::vector<trace::Trace> traces;
  std::vector<explore::TranscriptEntry> transcripts;

  for (const std::string& policy_name : split_csv(args.policy)) {
    if (policy_name == "random") {
      if (fixture) fixture->reset();
      explore::Task walk{"random_walk", "free exploration", args.steps,
                         explore::Task::Kind::kGeneral};
      auto policy = explore::random_policy(args.seed);
      explore::RunOptions opts;
      opts.source = ui::Source::kRandom;
      auto outcome = explore::run_task(*device, *policy, walk, opts);
      std::printf("[random] steps=%d stop=%s states=%zu\n", outcome.steps_used,
                  explore::stop_reason_name(outcome.stop_reason),
                  outcome.trace.states.size());
      traces.push_back(std::move(outcome.trace));
      continue;
    }
    for (const explore::Task& task : tasks) {
      if (fixture) fixture->reset();
      std::unique_ptr<explore::Policy> policy;
      std::unique_ptr<explore::MockChatClient> mock;
      std::unique_ptr<explore::HttpChatClient> http;
      explore::RunOptions opts;
      if (policy_name == "llm") {
        opts.source = ui::Source::kLlm;
        if (!args.mock_responses.empty()) {
          std::vector<std::string> responses;
          if (mock_json.is_object() && mock_json.contains(task.id))
            for (const Json& r : mock_json[task.id])
              responses.push_back(r.get<std::string>());
          else if (mock_json.is_array())
            for (const Json& r : mock_json)
              responses.push_back(r.get<std::string>());
          mock = std::make_unique<explore::MockChatClient>(responses);
          policy = explore::llm_policy(*mock, &transcripts);
        } else {
          const char* url = std::getenv("APPRAY_CHAT_URL");
          const char* model_name = std::getenv("APPRAY_CHAT_MODEL");
          http = std::make_unique<explore::HttpChatClient>(
              url ? url : "https://api.openai.com",
              model_name ? model_name : "gpt-4");
          policy = explore::llm_policy(*http, &transcripts);
        }
      } else if (policy_name == "scripted") {
        opts.source = ui::Source::kScripted;
        std::string script = "[]";
        if (script_json.is_object() && script_json.contains(task.id))
          script = script_json[task.id].dump();
        policy = explore::scripted_policy(script);
      } else {
        throw AppError(ErrorKind::BadArgs,
                       "unknown policy '" + policy_name + "'");
      }
      if (fixture) opts.completion = fixture->completion_for(task.id);
      auto outcome = explore::run_task(*device, *policy, task, opts);
      std::printf("[%s %s] steps=%d stop=%s completed=%s\n",
                  policy_name.c_str(), task.id.c_str(), outcome.steps_used,
                  explore::stop_reason_name(outcome.stop_reason),
                  outcome.completed ? "yes" : "no");
      traces.push_back(std::move(outcome.trace));
    }
  }

  trace::UiGraph graph = trace::merge(traces);
  trace::save(graph, args.out);
  if (!transcripts.empty()) {
    std::ostringstream os;
    for (const auto& t : transcripts) {
      Json j;
      j["task_id"] = t.task_id;
      j["step"] = t.step;
      j["request"] = t.request;
      j["response"] = t.response;
      os << j.dump() << "\n";
    }
    write_text_file((fs::path(args.out) / "transcripts.jsonl").string(),
                    os.str());
  }
  std::printf("%s", trace::coverage_to_string(trace::coverage_stats(graph)).c_str());
  return 0;
}

struct DetectArgs {
  std::string store;
  std::string model_dir;
  std::string out = "report.json";
  std::string lexicons_file;
  std::vector<std::string> disabled_rules;
  double threshold = -1.0;
  bool no_refine = false;
};

int run_detect(const DetectArgs& args) {
  const trace::UiGraph graph = trace::load(args.store);
  pipeline::DetectOptions opts;
  opts.threshold = args.threshold;
  opts.run_refiner = !args.no_refine;
  if (!args.lexicons_file.empty()) {
    const Lexicons lex =
        Lexicons::from_json_text(read_text_file(args.lexicons_file));
    opts.grouping.lexicons = lex;
    opts.refiner.lexicons = lex;
  }
  for (const std::string& rule : args.disabled_rules) {
    bool known = false;
    for (const auto& [id, w] : refine::rule_registry(opts.refiner)) {
      (void)w;
      known |= id == rule;
    }
    if (!known)
      throw AppError(ErrorKind::BadArgs, "unknown rule '" + rule + "'");
    opts.refiner.disabled_rules.insert(rule);
  }
  if (graph.states.empty()) {
    Json empty;
    empty["format_version"] = "1";
    empty["tool_version"] = kVersion;
    empty["config_hash"] = hex64(0);
    empty["states"] = Json::array();
    empty["detections"] = Json::array();
    write_text_file(args.out, empty.dump(2) + "\n");
    std::printf("empty store, empty report\n");
    return 0;
  }
  const model::TrainedModel tm = model::load_checkpoint(args.model_dir);
  const pipeline::DetectResult result = pipeline::detect_graph(graph, tm, opts);

  Json cfg;
  cfg["threshold"] = opts.threshold;
  cfg["run_refiner"] = opts.run_refiner;
  cfg["model"] = args.model_dir;
  const Json report =
      pipeline::report_to_json(result, graph, fnv1a(cfg.dump()));
  write_text_file(args.out, report.dump(2) + "\n");
  int unsuppressed = 0;
  for (const auto& d : result.detections)
    if (!d.suppressed_by) ++unsuppressed;
  std::printf("%zu detections (%d active) over %zu states -> %s\n",
              result.detections.size(), unsuppressed, graph.states.size(),
              args.out.c_str());
  return 0;
}

struct TrainArgs {
  std::string corpus_dir;
  std::string out;
  int folds = 5;
  int fold = -1;  // single-fold override
  uint64_t seed = 1;
  int epochs = 0;
  bool no_aug = false, no_contrastive = false, no_class_weights = false;
  std::string strategy = "hard";
};

int run_train(const TrainArgs& args) {
  const model::Corpus corpus = corpus::load_training_corpus(args.corpus_dir);
  model::Hyperparams h;
  h.seed = args.seed;
  if (args.epochs > 0) h.epochs = args.epochs;
  h.augmentation_enabled = !args.no_aug;
  h.contrastive_enabled = !args.no_contrastive;
  h.class_weights_enabled = !args.no_class_weights;
  h.strategy = args.strategy == "random"
                   ? model::NegativeStrategy::kRandom
                   : (args.strategy == "balanced"
                          ? model::NegativeStrategy::kBalanced
                          : model::NegativeStrategy::kHard);

  std::vector<int> folds;
  if (args.fold >= 0) {
    folds.push_back(args.fold);
  } else {
    for (int f = 0; f < args.folds; ++f) folds.push_back(f);
  }
  double best = -1.0;
  int best_fold = -1;
  std::optional<model::TrainedModel> best_model;
  for (int f : folds) {
    model::TrainedModel tm = model::train(corpus, h, f);
    std::printf("fold %d: val macro F1 %.4f, micro F1 %.4f\n", f,
                tm.best_val_macro_f1, tm.best_val_micro_f1);
    if (tm.best_val_macro_f1 > best) {
      best = tm.best_val_macro_f1;
      best_fold = f;
      best_model = std::move(tm);
    }
  }
  if (best_model) {
    model::save_checkpoint(*best_model, args.out);
    std::printf("saved fold-%d model to %s\n", best_fold, args.out.c_str());
  }
  return 0;
}

struct EvalArgs {
  std::string report_file;
  std::string labels_file;
  std::string out;
  double iou = 0.5;
};

int run_eval(const EvalArgs& args) {
  const Json report = read_json_file(args.report_file);
  const auto preds = pipeline::detections_from_report(report);

  // state id <-> activity join
  std::map<std::string, std::vector<int>> activity_states;
  for (const Json& js : report.at("states"))
    activity_states[js.at("activity").get<std::string>()].push_back(
        js.at("id").get<int>());

  std::vector<report::GroundTruth> gts;
  const std::string raw = read_text_file(args.labels_file);
  std::istringstream lines(raw);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw AppError(ErrorKind::MalformedInput, "bad labels line");
    report::GroundTruth gt;
    gt.label = j.at("label").get<std::string>();
    if (j.value("dynamic", false)) {
      gt.dynamic = true;
      for (const Json& s : j.at("screens")) {
        auto it = activity_states.find(s.get<std::string>());
        if (it != activity_states.end())
          gt.state_set.insert(gt.state_set.end(), it->second.begin(),
                              it->second.end());
      }
      if (gt.state_set.empty()) continue;  // screens never visited
    } else {
      auto it = activity_states.find(j.at("screen").get<std::string>());
      if (it == activity_states.end()) continue;  // screen never visited
      gt.state_id = it->second.front();
      gt.bbox = rect_from_json(j.at("bbox"));
    }
    gts.push_back(std::move(gt));
  }

  const auto& tax = model::Taxonomy::standard();
  std::vector<std::string> universe;
  for (const auto& l : tax.labels()) universe.push_back(l.name);
  const auto counts =
      report::match_detections(preds, gts, args.iou, tax, universe);
  const report::MetricsReport metrics = report::compute_metrics(counts);
  std::printf("%s", report::metrics_to_table(metrics).c_str());
  if (!args.out.empty()) {
    Json jm;
    jm["format_version"] = "1";
    jm["tool_version"] = kVersion;
    jm["iou_min"] = args.iou;
    Json per = Json::object();
    for (const auto& [label, m] : metrics.per_label)
      per[label] = {{"precision", m.precision}, {"recall", m.recall},
                    {"f1", m.f1},               {"gt", m.gt_count},
                    {"tp", m.tp},               {"fp", m.fp},
                    {"fn", m.fn},               {"zero_denominator",
                                                 m.zero_denominator}};
    jm["per_label"] = per;
    jm["micro"] = {{"precision", metrics.micro_precision},
                   {"recall", metrics.micro_recall},
                   {"f1", metrics.micro_f1}};
    jm["macro"] = {{"precision", metrics.macro_precision},
                   {"recall", metrics.macro_recall},
                   {"f1", metrics.macro_f1}};
    write_text_file(args.out, jm.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"appray: explore mobile app UIs and detect dark patterns"};
  app.require_subcommand(1);
  bool serial = false;
  app.add_flag("--serial", serial, "run data-parallel kernels on one thread");

  ExploreArgs explore_args;
  CLI::App* cmd_explore =
      app.add_subcommand("explore", "run exploration policies, merge, store");
  cmd_explore->add_option("--app", explore_args.app,
                          "fixture app dir, or 'device' for adb")->required();
  cmd_explore->add_option("--policy", explore_args.policy,
                          "random|llm|scripted (comma list)");
  cmd_explore->add_option("--tasks", explore_args.tasks_file, "task JSON file");
  cmd_explore->add_option("--mock-responses", explore_args.mock_responses,
                          "offline LLM responses (JSON)");
  cmd_explore->add_option("--script", explore_args.script_file,
                          "scripted-policy actions (JSON)");
  cmd_explore->add_option("--steps", explore_args.steps, "random-walk budget");
  cmd_explore->add_option("--seed", explore_args.seed, "random seed");
  cmd_explore->add_option("--out", explore_args.out, "output store dir")
      ->required();

  DetectArgs detect_args;
  CLI::App* cmd_detect =
      app.add_subcommand("detect", "grouping -> classifier -> refiner");
  cmd_detect->add_option("--store", detect_args.store, "store dir")->required();
  cmd_detect->add_option("--model", detect_args.model_dir, "checkpoint dir")
      ->required();
  cmd_detect->add_option("--out", detect_args.out, "report path");
  cmd_detect->add_option("--threshold", detect_args.threshold,
                         "sigmoid threshold override");
  cmd_detect->add_option("--lexicons", detect_args.lexicons_file,
                         "lexicons JSON override");
  cmd_detect->add_flag("--no-refine", detect_args.no_refine,
                       "classifier only, skip the rule refiner");
  cmd_detect->add_option("--disable-rule", detect_args.disabled_rules,
                         "refiner rule id to disable (repeatable)");

  TrainArgs train_args;
  CLI::App* cmd_train = app.add_subcommand("train", "staged training with CV");
  cmd_train->add_option("--corpus", train_args.corpus_dir, "corpus dir")
      ->required();
  cmd_train->add_option("--folds", train_args.folds, "fold count");
  cmd_train->add_option("--fold", train_args.fold, "train one fold only");
  cmd_train->add_option("--out", train_args.out, "checkpoint dir")->required();
  cmd_train->add_option("--seed", train_args.seed, "training seed");
  cmd_train->add_option("--epochs", train_args.epochs, "epoch cap override");
  cmd_train->add_flag("--no-aug", train_args.no_aug, "disable augmentation");
  cmd_train->add_flag("--no-contrastive", train_args.no_contrastive,
                      "disable the contrastive term");
  cmd_train->add_flag("--no-class-weights", train_args.no_class_weights,
                      "disable class weighting");
  cmd_train->add_option("--strategy", train_args.strategy,
                        "negative sampling: random|hard|balanced");

  EvalArgs eval_args;
  CLI::App* cmd_eval = app.add_subcommand("eval", "score a report against labels");
  cmd_eval->add_option("--report", eval_args.report_file, "report.json")
      ->required();
  cmd_eval->add_option("--labels", eval_args.labels_file, "labels.jsonl")
      ->required();
  cmd_eval->add_option("--iou", eval_args.iou, "IoU threshold");
  cmd_eval->add_option("--out", eval_args.out, "metrics JSON output");

  std::string corpus_spec, corpus_out;
  uint64_t corpus_seed = 0;
  CLI::App* cmd_corpus =
      app.add_subcommand("corpus", "generate a labeled synthetic corpus");
  cmd_corpus->add_option("--spec", corpus_spec, "AppSpec JSON file");
  cmd_corpus->add_option("--out", corpus_out, "output dir")->required();
  cmd_corpus->add_option("--seed", corpus_seed, "seed override");

  uint64_t gc_seed = 1;
  double gc_eps = 1e-5;
  int gc_batch = 4;
  CLI::App* cmd_gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  cmd_gradcheck->add_option("--seed", gc_seed, "seed");
  cmd_gradcheck->add_option("--eps", gc_eps, "finite-difference step");
  cmd_gradcheck->add_option("--batch", gc_batch, "batch size");

  CLI11_PARSE(app, argc, argv);
  kernels::set_backend(serial ? kernels::Backend::kSerial
                              : kernels::Backend::kOpenMP);

  try {
    if (cmd_explore->parsed()) return run_explore(explore_args);
    if (cmd_detect->parsed()) return run_detect(detect_args);
    if (cmd_train->parsed()) return run_train(train_args);
    if (cmd_eval->parsed()) return run_eval(eval_args);
    if (cmd_corpus->parsed()) {
      corpus::AppSpec spec =
          corpus_spec.empty()
              ? corpus::AppSpec::defaults()
              : corpus::AppSpec::from_json_text(read_text_file(corpus_spec));
      if (corpus_seed != 0) spec.seed = corpus_seed;
      const corpus::GeneratedCorpus gc = corpus::generate_corpus(spec);
      corpus::write_corpus(gc, corpus_out);
      size_t screens = 0;
      for (const auto& a : gc.apps) screens += a.screens.size();
      std::printf("wrote %zu apps, %zu screens to %s\n", gc.apps.size(),
                  screens, corpus_out.c_str());
      return 0;
    }
    if (cmd_gradcheck->parsed()) {
      // tiny synthetic model + batch; prints the worst per-tensor error
      Rng rng(gc_seed);
      model::ModelConfig cfg;
      cfg.n_labels = 3;
      cfg.embed_dim = 4;
      cfg.token_dim = 3;
      cfg.text_hidden = 6;
      cfg.conv1_channels = 2;
      cfg.conv2_channels = 3;
      cfg.head_hidden = 6;
      model::Vocab vocab = model::Vocab::build(
          {"alpha beta gamma delta", "epsilon zeta eta theta"});
      model::Model m = model::Model::init(cfg, vocab, gc_seed);
      std::vector<model::EncodedSample> samples;
      for (int i = 0; i < gc_batch; ++i) {
        model::EncodedSample es;
        const size_t n = static_cast<size_t>(3) * cfg.image_size *
                         cfg.image_size;
        es.crop_img.resize(n);
        es.full_img.resize(n);
        for (double& v : es.crop_img) v = rng.next_double();
        for (double& v : es.full_img) v = rng.next_double();
        es.token_ids = {static_cast<int>(rng.uniform_int(vocab.size())),
                        static_cast<int>(rng.uniform_int(vocab.size()))};
        es.labels.assign(3, 0.0);
        es.labels[rng.uniform_int(3)] = 1.0;
        samples.push_back(std::move(es));
      }
      model::Batch batch;
      for (const auto& s : samples) batch.samples.push_back(&s);
      for (int i = 0; i + 1 < gc_batch; i += 2) {
        model::PairSpec p;
        p.anchor = i;
        p.other = i + 1;
        p.negatives = {(i + 2) % gc_batch};
        batch.pairs.push_back(p);
      }
      model::Hyperparams h;
      const double err = model::gradient_check(m, batch, h, gc_eps);
      std::printf("max relative gradient error: %.3e\n", err);
      return 0;
    }
  } catch (const AppError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 4;
  }
  return 2;
}
