#include "appray/trace.hpp"

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "appray/common.hpp"
#include "appray/kernels.hpp"
#include "appray/serde.hpp"

namespace appray::trace {

namespace fs = std::filesystem;

StateSignature state_signature(const UiTree& tree) {
  StateSignature sig;
  for (const ui::UiElement* e : ui::visible_leaves(tree))
    sig.entries.push_back({e->class_name, e->resource_id, e->checked});
  return sig;
}

std::string signature_digest(const StateSignature& sig) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& e : sig.entries) {
    h = fnv1a(e.class_name.data(), e.class_name.size(), h);
    h = fnv1a("\x1f", 1, h);
    h = fnv1a(e.resource_id.data(), e.resource_id.size(), h);
    h = fnv1a(e.checked ? "\x01" : "\x00", 1, h);
  }
  return hex64(h);
}

bool is_duplicate(const UiState& a, const UiState& b) {
  const bool pixels_equal = a.screenshot.width == b.screenshot.width &&
                            a.screenshot.height == b.screenshot.height &&
                            a.screenshot.pixels == b.screenshot.pixels &&
                            a.screenshot.width > 0;
  return pixels_equal || a.signature == b.signature;
}

UiGraph merge(const std::vector<Trace>& traces) {
  UiGraph g;
  for (const Trace& t : traces) {
    Trace remapped;
    remapped.task_id = t.task_id;
    remapped.source = t.source;
    std::vector<int> local_to_canon(t.states.size(), -1);
    for (size_t li = 0; li < t.states.size(); ++li) {
      UiState candidate;
      candidate.tree = t.states[li].tree;
      candidate.screenshot = t.states[li].screenshot;
      candidate.activity = t.states[li].activity;
      candidate.signature = state_signature(candidate.tree);
      candidate.first_seen_source = t.source;

      // First-match scan over canonical states in id order. The parallel
      // variant reduces to the minimum matching index, so it agrees with a
      // serial left-to-right scan exactly.
      const int64_t hit = kernels::first_match(
          static_cast<int64_t>(g.states.size()), [&](int64_t i) {
            return is_duplicate(candidate, g.states[static_cast<size_t>(i)]);
          });
      int canon;
      if (hit >= 0) {
        canon = static_cast<int>(hit);
        const UiState& kept = g.states[static_cast<size_t>(canon)];
        const bool pix = kept.screenshot == candidate.screenshot &&
                         kept.screenshot.width > 0;
        const bool sig = kept.signature == candidate.signature;
        std::string how = pix && sig ? "both" : (sig ? "signature" : "pixels_only");
        if (how != "both")
          g.merge_notes.push_back({canon, how});
      } else {
        canon = static_cast<int>(g.states.size());
        candidate.id = canon;
        g.states.push_back(std::move(candidate));
      }
      local_to_canon[li] = canon;
      g.visits[canon].insert(t.source);
    }
    for (const Step& s : t.steps) {
      Edge e{local_to_canon[static_cast<size_t>(s.from)], s.action,
             local_to_canon[static_cast<size_t>(s.to)]};
      g.edges.push_back(e);
      remapped.steps.push_back({e.from, e.action, e.to});
    }
    g.remapped_traces.push_back(std::move(remapped));
  }
  return g;
}

CoverageReport coverage_stats(const UiGraph& g) {
  CoverageReport r;
  r.unique_states = static_cast<int>(g.states.size());
  std::set<std::string> activities;
  for (const UiState& s : g.states)
    if (!s.activity.empty()) activities.insert(s.activity);
  r.unique_activities = static_cast<int>(activities.size());
  int overlap = 0;
  for (const auto& [id, sources] : g.visits) {
    (void)id;
    if (sources.size() >= 2) {
      ++overlap;
    } else if (sources.size() == 1) {
      r.per_source_unique[ui::source_name(*sources.begin())] += 1;
    }
  }
  r.overlap_pct = g.states.empty()
                      ? 0.0
                      : 100.0 * overlap / static_cast<double>(g.states.size());
  return r;
}

std::string coverage_to_string(const CoverageReport& r) {
  std::ostringstream os;
  os << "unique states: " << r.unique_states
     << "\nunique activities: " << r.unique_activities << "\n";
  for (const auto& [src, n] : r.per_source_unique)
    os << "unique to " << src << ": " << n << "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", r.overlap_pct);
  os << "multi-source overlap: " << buf << "%\n";
  return os.str();
}

namespace {

uint32_t crc_of(const std::string& bytes) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

uint32_t crc_of(const std::vector<uint8_t>& bytes) {
  return static_cast<uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

Json signature_to_json(const StateSignature& sig) {
  Json arr = Json::array();
  for (const auto& e : sig.entries)
    arr.push_back(Json::array({e.class_name, e.resource_id, e.checked}));
  return arr;
}

StateSignature signature_from_json(const Json& j) {
  StateSignature sig;
  for (const auto& e : j)
    sig.entries.push_back(
        {e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<bool>()});
  return sig;
}

}  // namespace

void save(const UiGraph& g, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "states", ec);
  if (ec) throw AppError(ErrorKind::IoFailure, "cannot create " + dir);

  Json manifest;
  manifest["format_version"] = "1";
  Json states = Json::array();
  for (const UiState& s : g.states) {
    const std::string xml = ui::serialize_tree(s.tree);
    const std::vector<uint8_t> png = ui::encode_png_bytes(s.screenshot);
    const std::string xml_rel = "states/" + std::to_string(s.id) + ".xml";
    const std::string png_rel = "states/" + std::to_string(s.id) + ".png";
    write_text_file((fs::path(dir) / xml_rel).string(), xml);
    {
      std::ofstream f((fs::path(dir) / png_rel).string(), std::ios::binary);
      if (!f) throw AppError(ErrorKind::IoFailure, "cannot write " + png_rel);
      f.write(reinterpret_cast<const char*>(png.data()),
              static_cast<std::streamsize>(png.size()));
    }
    Json js;
    js["id"] = s.id;
    js["activity"] = s.activity;
    js["source"] = ui::source_name(s.first_seen_source);
    js["signature"] = signature_to_json(s.signature);
    js["xml"] = xml_rel;
    js["png"] = png_rel;
    js["xml_crc"] = crc_of(xml);
    js["png_crc"] = crc_of(png);
    states.push_back(js);
  }
  manifest["states"] = states;

  Json edges = Json::array();
  for (const Edge& e : g.edges)
    edges.push_back(Json::array({e.from, action_to_json(e.action), e.to}));
  manifest["edges"] = edges;

  Json visits = Json::object();
  for (const auto& [id, sources] : g.visits)
    for (Source s : sources) visits[ui::source_name(s)].push_back(id);
  manifest["visits"] = visits;

  Json notes = Json::array();
  for (const MergeNote& n : g.merge_notes)
    notes.push_back({{"canonical_id", n.canonical_id}, {"matched_by", n.matched_by}});
  manifest["merge_notes"] = notes;

  std::ostringstream traces;
  for (const Trace& t : g.remapped_traces) {
    Json jt;
    jt["source"] = ui::source_name(t.source);
    if (t.task_id) jt["task_id"] = *t.task_id;
    Json steps = Json::array();
    for (const Step& s : t.steps)
      steps.push_back(Json::array({s.from, action_to_json(s.action), s.to}));
    jt["steps"] = steps;
    traces << jt.dump() << "\n";
  }
  write_text_file((fs::path(dir) / "traces.jsonl").string(), traces.str());
  manifest["traces_crc"] = crc_of(traces.str());

  write_text_file((fs::path(dir) / "manifest.json").string(),
                  manifest.dump(2) + "\n");
}

UiGraph load(const std::string& dir) {
  Json manifest;
  try {
    manifest = read_json_file((fs::path(dir) / "manifest.json").string());
  } catch (const AppError& e) {
    if (e.kind() == ErrorKind::MalformedInput)
      throw AppError(ErrorKind::CorruptStore, "manifest.json is not valid JSON");
    throw;
  }
  if (manifest.value("format_version", "") != "1")
    throw AppError(ErrorKind::CorruptStore, "unsupported store format version");

  UiGraph g;
  for (const Json& js : manifest.at("states")) {
    UiState s;
    s.id = js.at("id").get<int>();
    s.activity = js.value("activity", "");
    s.first_seen_source = ui::source_from_name(js.value("source", "fixture"));
    s.signature = signature_from_json(js.at("signature"));
    const std::string xml =
        read_text_file((fs::path(dir) / js.at("xml").get<std::string>()).string());
    if (crc_of(xml) != js.at("xml_crc").get<uint32_t>())
      throw AppError(ErrorKind::CorruptStore,
                     "checksum mismatch on " + js.at("xml").get<std::string>());
    s.tree = ui::parse_hierarchy(xml);
    const std::string png_path =
        (fs::path(dir) / js.at("png").get<std::string>()).string();
    const std::string png_raw = read_text_file(png_path);
    if (crc_of(png_raw) != js.at("png_crc").get<uint32_t>())
      throw AppError(ErrorKind::CorruptStore,
                     "checksum mismatch on " + js.at("png").get<std::string>());
    s.screenshot = ui::decode_png(png_path);
    if (state_signature(s.tree) != s.signature)
      throw AppError(ErrorKind::CorruptStore,
                     "signature mismatch on state " + std::to_string(s.id));
    g.states.push_back(std::move(s));
  }
  for (const Json& je : manifest.at("edges"))
    g.edges.push_back(
        {je[0].get<int>(), action_from_json(je[1]), je[2].get<int>()});
  if (manifest.contains("visits"))
    for (const auto& [src, ids] : manifest["visits"].items())
      for (const Json& id : ids)
        g.visits[id.get<int>()].insert(ui::source_from_name(src));
  if (manifest.contains("merge_notes"))
    for (const Json& jn : manifest["merge_notes"])
      g.merge_notes.push_back({jn.at("canonical_id").get<int>(),
                               jn.at("matched_by").get<std::string>()});

  const std::string traces_raw =
      read_text_file((fs::path(dir) / "traces.jsonl").string());
  if (manifest.contains("traces_crc") &&
      crc_of(traces_raw) != manifest["traces_crc"].get<uint32_t>())
    throw AppError(ErrorKind::CorruptStore, "checksum mismatch on traces.jsonl");
  std::istringstream lines(traces_raw);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    Json jt = Json::parse(line, nullptr, false);
    if (jt.is_discarded())
      throw AppError(ErrorKind::CorruptStore, "bad trace line");
    Trace t;
    t.source = ui::source_from_name(jt.value("source", "fixture"));
    if (jt.contains("task_id")) t.task_id = jt["task_id"].get<std::string>();
    for (const Json& js : jt.at("steps"))
      t.steps.push_back(
          {js[0].get<int>(), action_from_json(js[1]), js[2].get<int>()});
    g.remapped_traces.push_back(std::move(t));
  }
  return g;
}

}  // namespace appray::trace
