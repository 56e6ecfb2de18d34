#include "appray/ui.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace appray::ui {

Rect rect_union(const Rect& a, const Rect& b) {
  return Rect{std::min(a.x1, b.x1), std::min(a.y1, b.y1), std::max(a.x2, b.x2),
              std::max(a.y2, b.y2)};
}

double rect_iou(const Rect& a, const Rect& b) {
  const int ix1 = std::max(a.x1, b.x1), iy1 = std::max(a.y1, b.y1);
  const int ix2 = std::min(a.x2, b.x2), iy2 = std::min(a.y2, b.y2);
  if (ix2 <= ix1 || iy2 <= iy1) return 0.0;
  const double inter =
      static_cast<double>(ix2 - ix1) * static_cast<double>(iy2 - iy1);
  const double uni =
      static_cast<double>(a.area()) + static_cast<double>(b.area()) - inter;
  return uni <= 0.0 ? 0.0 : inter / uni;
}

const char* source_name(Source s) {
  switch (s) {
    case Source::kRandom: return "random";
    case Source::kLlm: return "llm";
    case Source::kScripted: return "scripted";
    case Source::kFixture: return "fixture";
  }
  return "fixture";
}

Source source_from_name(const std::string& s) {
  if (s == "random") return Source::kRandom;
  if (s == "llm") return Source::kLlm;
  if (s == "scripted") return Source::kScripted;
  if (s == "fixture") return Source::kFixture;
  throw AppError(ErrorKind::MalformedInput, "unknown source '" + s + "'");
}

Rect parse_bounds(const std::string& s) {
  int v[4];
  size_t pos = 0;
  auto expect = [&](char c) {
    if (pos >= s.size() || s[pos] != c)
      throw AppError(ErrorKind::MalformedInput,
                     "bad bounds string '" + s + "'");
    ++pos;
  };
  auto number = [&]() {
    size_t start = pos;
    if (pos < s.size() && s[pos] == '-') ++pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos == start || (s[start] == '-' && pos == start + 1))
      throw AppError(ErrorKind::MalformedInput,
                     "bad bounds string '" + s + "'");
    return std::stoi(s.substr(start, pos - start));
  };
  expect('[');
  v[0] = number();
  expect(',');
  v[1] = number();
  expect(']');
  expect('[');
  v[2] = number();
  expect(',');
  v[3] = number();
  expect(']');
  if (pos != s.size())
    throw AppError(ErrorKind::MalformedInput, "bad bounds string '" + s + "'");
  if (v[0] > v[2] || v[1] > v[3])
    throw AppError(ErrorKind::MalformedInput,
                   "inverted bounds '" + s + "'");
  return Rect{v[0], v[1], v[2], v[3]};
}

std::string format_bounds(const Rect& r) {
  std::ostringstream os;
  os << '[' << r.x1 << ',' << r.y1 << "][" << r.x2 << ',' << r.y2 << ']';
  return os.str();
}

namespace {

// Minimal parser for the dump dialect: elements + attributes only, no text
// nodes, no namespaces. Enough for uiautomator output and our fixtures.
class XmlParser {
 public:
  explicit XmlParser(const std::string& s) : s_(s) {}

  struct Node {
    std::string tag;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<Node> children;
  };

  Node parse_document() {
    skip_misc();
    Node root = parse_element();
    skip_misc();
    if (pos_ != s_.size()) fail("trailing content after document element");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& why) {
    throw AppError(ErrorKind::MalformedInput, why);
  }

  bool starts_with(const char* p) const {
    return s_.compare(pos_, std::char_traits<char>::length(p), p) == 0;
  }

  void skip_ws() {
    while (pos_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }

  void skip_misc() {
    for (;;) {
      skip_ws();
      if (starts_with("<?")) {
        size_t e = s_.find("?>", pos_);
        if (e == std::string::npos) fail("unterminated processing instruction");
        pos_ = e + 2;
      } else if (starts_with("<!--")) {
        size_t e = s_.find("-->", pos_);
        if (e == std::string::npos) fail("unterminated comment");
        pos_ = e + 3;
      } else if (starts_with("<!")) {
        size_t e = s_.find('>', pos_);
        if (e == std::string::npos) fail("unterminated declaration");
        pos_ = e + 1;
      } else {
        return;
      }
    }
  }

  std::string parse_name() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
            s_[pos_] == '-' || s_[pos_] == '_' || s_[pos_] == ':' ||
            s_[pos_] == '.'))
      ++pos_;
    if (pos_ == start) fail("expected name at offset " + std::to_string(pos_));
    return s_.substr(start, pos_ - start);
  }

  std::string decode_entities(const std::string& raw) {
    if (raw.find('&') == std::string::npos) return raw;
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size();) {
      if (raw[i] != '&') {
        out += raw[i++];
        continue;
      }
      size_t semi = raw.find(';', i);
      if (semi == std::string::npos) fail("bad entity in attribute");
      std::string ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") out += '&';
      else if (ent == "lt") out += '<';
      else if (ent == "gt") out += '>';
      else if (ent == "quot") out += '"';
      else if (ent == "apos") out += '\'';
      else if (!ent.empty() && ent[0] == '#') {
        int code = 0;
        try {
          code = (ent.size() > 1 && (ent[1] == 'x' || ent[1] == 'X'))
                     ? std::stoi(ent.substr(2), nullptr, 16)
                     : std::stoi(ent.substr(1));
        } catch (...) {
          fail("bad numeric entity '&" + ent + ";'");
        }
        if (code < 0 || code > 0x10FFFF) fail("entity out of range");
        // UTF-8 encode.
        if (code < 0x80) {
          out += static_cast<char>(code);
        } else if (code < 0x800) {
          out += static_cast<char>(0xC0 | (code >> 6));
          out += static_cast<char>(0x80 | (code & 0x3F));
        } else if (code < 0x10000) {
          out += static_cast<char>(0xE0 | (code >> 12));
          out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
          out += static_cast<char>(0x80 | (code & 0x3F));
        } else {
          out += static_cast<char>(0xF0 | (code >> 18));
          out += static_cast<char>(0x80 | ((code >> 12) & 0x3F));
          out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
          out += static_cast<char>(0x80 | (code & 0x3F));
        }
      } else {
        fail("unknown entity '&" + ent + ";'");
      }
      i = semi + 1;
    }
    return out;
  }

  Node parse_element() {
    if (pos_ >= s_.size() || s_[pos_] != '<') fail("expected element");
    ++pos_;
    Node node;
    node.tag = parse_name();
    for (;;) {
      skip_ws();
      if (pos_ >= s_.size()) fail("unterminated tag <" + node.tag + ">");
      if (s_[pos_] == '/') {
        if (!starts_with("/>")) fail("bad empty-element tag");
        pos_ += 2;
        return node;
      }
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      std::string name = parse_name();
      skip_ws();
      if (pos_ >= s_.size() || s_[pos_] != '=') fail("attribute missing '='");
      ++pos_;
      skip_ws();
      if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\''))
        fail("attribute value must be quoted");
      char quote = s_[pos_++];
      size_t end = s_.find(quote, pos_);
      if (end == std::string::npos) fail("unterminated attribute value");
      node.attrs.emplace_back(name, decode_entities(s_.substr(pos_, end - pos_)));
      pos_ = end + 1;
    }
    // Content: child elements until the matching close tag. Any character
    // data between them is ignored (dumps have none).
    for (;;) {
      size_t lt = s_.find('<', pos_);
      if (lt == std::string::npos)
        fail("missing close tag </" + node.tag + ">");
      pos_ = lt;
      if (starts_with("<!--")) {
        size_t e = s_.find("-->", pos_);
        if (e == std::string::npos) fail("unterminated comment");
        pos_ = e + 3;
        continue;
      }
      if (starts_with("</")) {
        pos_ += 2;
        std::string close = parse_name();
        if (close != node.tag)
          fail("mismatched close tag </" + close + "> for <" + node.tag + ">");
        skip_ws();
        if (pos_ >= s_.size() || s_[pos_] != '>') fail("malformed close tag");
        ++pos_;
        return node;
      }
      node.children.push_back(parse_element());
    }
  }

  const std::string& s_;
  size_t pos_ = 0;
};

bool attr_bool(const std::string& v) { return v == "true"; }

UiElement node_to_element(const XmlParser::Node& n, const std::string& path) {
  UiElement e;
  std::string bounds_raw;
  bool has_bounds = false;
  for (const auto& [k, v] : n.attrs) {
    if (k == "class") e.class_name = v;
    else if (k == "resource-id") e.resource_id = v;
    else if (k == "text") e.text = v;
    else if (k == "content-desc") e.content_desc = v;
    else if (k == "clickable") e.clickable = attr_bool(v);
    else if (k == "scrollable") e.scrollable = attr_bool(v);
    else if (k == "checked") e.checked = attr_bool(v);
    else if (k == "checkable") e.checkable = attr_bool(v);
    else if (k == "enabled") e.enabled = attr_bool(v);
    else if (k == "visible-to-users") e.visible = attr_bool(v);
    else if (k == "bounds") {
      bounds_raw = v;
      has_bounds = true;
    }
    // unknown attributes (index, package, focused, ...) are ignored
  }
  if (!has_bounds)
    throw AppError(ErrorKind::MissingBounds, "node at " + path);
  try {
    e.bounds = parse_bounds(bounds_raw);
  } catch (const AppError&) {
    throw AppError(ErrorKind::MissingBounds,
                   "node at " + path + " has unparsable bounds '" +
                       bounds_raw + "'");
  }
  int idx = 0;
  for (const auto& c : n.children)
    e.children.push_back(
        node_to_element(c, path + "/node[" + std::to_string(idx++) + "]"));
  return e;
}

std::string escape_attr(const std::string& v) {
  std::string out;
  out.reserve(v.size());
  for (char c : v) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

void write_element(std::ostringstream& os, const UiElement& e, int depth) {
  auto b = [](bool v) { return v ? "true" : "false"; };
  os << std::string(static_cast<size_t>(depth) * 2, ' ') << "<node"
     << " class=\"" << escape_attr(e.class_name) << "\""
     << " resource-id=\"" << escape_attr(e.resource_id) << "\""
     << " text=\"" << escape_attr(e.text) << "\""
     << " content-desc=\"" << escape_attr(e.content_desc) << "\""
     << " checkable=\"" << b(e.checkable) << "\""
     << " checked=\"" << b(e.checked) << "\""
     << " clickable=\"" << b(e.clickable) << "\""
     << " enabled=\"" << b(e.enabled) << "\""
     << " scrollable=\"" << b(e.scrollable) << "\""
     << " visible-to-users=\"" << b(e.visible) << "\""
     << " bounds=\"" << format_bounds(e.bounds) << "\"";
  if (e.children.empty()) {
    os << " />\n";
    return;
  }
  os << ">\n";
  for (const auto& c : e.children) write_element(os, c, depth + 1);
  os << std::string(static_cast<size_t>(depth) * 2, ' ') << "</node>\n";
}

}  // namespace

UiTree parse_hierarchy(const std::string& xml_text) {
  XmlParser parser(xml_text);
  XmlParser::Node doc = parser.parse_document();
  UiTree tree;
  const XmlParser::Node* root_node = &doc;
  if (doc.tag == "hierarchy") {
    for (const auto& [k, v] : doc.attrs) {
      if (k == "activity") tree.activity = v;
      else if (k == "source") tree.source = source_from_name(v);
    }
    if (doc.children.size() != 1)
      throw AppError(ErrorKind::MalformedInput,
                     "hierarchy must contain exactly one root node, got " +
                         std::to_string(doc.children.size()));
    root_node = &doc.children[0];
  }
  tree.root = node_to_element(*root_node, "/node[0]");
  return tree;
}

std::string serialize_tree(const UiTree& tree) {
  std::ostringstream os;
  os << "<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>\n";
  os << "<hierarchy activity=\"" << escape_attr(tree.activity)
     << "\" source=\"" << source_name(tree.source) << "\">\n";
  write_element(os, tree.root, 1);
  os << "</hierarchy>\n";
  return os.str();
}

namespace {
void collect_leaves(const UiElement& e, std::vector<const UiElement*>& out) {
  if (e.is_leaf()) {
    out.push_back(&e);
    return;
  }
  for (const auto& c : e.children) collect_leaves(c, out);
}
}  // namespace

std::vector<const UiElement*> all_leaves(const UiTree& tree) {
  std::vector<const UiElement*> out;
  collect_leaves(tree.root, out);
  return out;
}

std::vector<const UiElement*> visible_leaves(const UiTree& tree, int min_size) {
  std::vector<const UiElement*> out;
  for (const UiElement* e : all_leaves(tree)) {
    if (!e->visible) continue;
    if (e->bounds.width() < min_size || e->bounds.height() < min_size)
      continue;
    out.push_back(e);
  }
  return out;
}

const std::string& element_label(const UiElement& e) {
  return e.text.empty() ? e.content_desc : e.text;
}

}  // namespace appray::ui
