#pragma once

#include <map>
#include <string>
#include <vector>

#include "appray/grouping.hpp"
#include "appray/model.hpp"
#include "appray/raster.hpp"
#include "appray/trace.hpp"
#include "appray/ui.hpp"

namespace appray::corpus {

using ui::Raster;
using ui::Rect;
using ui::UiTree;

struct Palette {
  group::Rgb background{238, 238, 238};
  group::Rgb surface{255, 255, 255};
  group::Rgb glyph{0, 0, 0};
  group::Rgb button{51, 102, 204};
  group::Rgb button_glyph{255, 255, 255};
  group::Rgb accent{221, 136, 34};
  group::Rgb border{136, 136, 136};

  static Palette standard() { return Palette{}; }
};

// Deterministic rasterization: visible leaves as filled rectangles, text-ish
// leaves overlaid with a hash-driven glyph-block pattern. resource-id style
// suffixes adjust colors ("low_contrast", "high_contrast").
Raster render(const UiTree& tree, const Palette& palette);

struct AppSpec {
  uint64_t seed = 7;
  int n_apps = 35;
  int n_folds = 5;
  double benign_fraction = 0.3;  // benign screens added per app, as a fraction
  std::map<std::string, int> quotas;  // per-type injection quotas
  int benign_samples_per_screen = 3;
  bool dynamic_fixtures = true;  // multi-state sequences for the refiner rules

  static AppSpec defaults();
  static AppSpec from_json_text(const std::string& text);
};

struct Injection {
  UiTree screen;
  std::string label;
  Rect bbox;
};

// Applies the template for one taxonomy type to a screen. Throws
// UnsupportedType for types without a template.
Injection inject(const std::string& type, const UiTree& screen, Rng& rng);
std::vector<std::string> injectable_types();

struct GtLabel {
  std::string label;
  Rect bbox;
};

struct ScreenSpec {
  std::string name;
  UiTree tree;
  std::vector<GtLabel> gt;
  bool sample_source = true;  // false: refiner fixture only, no training samples
};

struct DynamicGt {
  std::string label;
  std::vector<std::string> screens;
};

struct GeneratedApp {
  std::string id;
  int fold = 0;
  std::vector<ScreenSpec> screens;  // screens[0] is home
  std::vector<std::tuple<std::string, std::string, std::string, std::string>>
      transitions;  // (from, kind, target-or-direction, to)
  std::vector<DynamicGt> dynamic_gt;
};

struct GeneratedCorpus {
  AppSpec spec;
  std::vector<GeneratedApp> apps;
};

// Pure function of the app spec. Throws QuotaUnsatisfiable / UnsupportedType.
GeneratedCorpus generate_corpus(const AppSpec& spec);

// apps/<id>/ fixture dirs (explorer format) + labels.jsonl + corpus_meta.json.
void write_corpus(const GeneratedCorpus& gc, const std::string& dir);

// Renders screens, runs grouping + featurize, and labels candidates against
// the ground truth at the given IoU. In-memory variant used by tests; the
// directory variant reads what write_corpus emitted.
model::Corpus build_training_corpus(const GeneratedCorpus& gc,
                                    double iou_min = 0.9);
model::Corpus load_training_corpus(const std::string& dir,
                                   double iou_min = 0.9);

// Benign-only length-3 UI sequences for false-positive protocols; apps disjoint
// from any seed used for training corpora.
std::vector<trace::Trace> generate_benign_traces(uint64_t seed, int n_apps,
                                                 int sequences_per_app);

}  // namespace appray::corpus
