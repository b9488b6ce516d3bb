#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cmcs/common.hpp"

namespace cmcs {

// ---------------------------------------------------------------------------
// Element tree
// ---------------------------------------------------------------------------

struct WxmlElement {
  std::string tag;  // "#document" for the root, "#text" for text nodes
  std::vector<std::pair<std::string, std::string>> attributes;  // ordered
  std::vector<WxmlElement> children;
  std::string text;  // only for "#text"
  SourceSpan span;

  bool is_text() const { return tag == "#text"; }

  const std::string* attribute(std::string_view name) const {
    for (const auto& [k, v] : attributes)
      if (k == name) return &v;
    return nullptr;
  }

  /// Element children only (text nodes skipped).
  std::vector<const WxmlElement*> elements() const {
    std::vector<const WxmlElement*> out;
    for (const auto& c : children)
      if (!c.is_text()) out.push_back(&c);
    return out;
  }
};

struct WxmlDocument {
  WxmlElement root;
  Diagnostics diagnostics;
};

namespace detail {

inline bool is_void_tag(std::string_view tag) {
  static constexpr std::string_view kVoid[] = {
      "area", "base", "br",   "col",    "embed", "hr",     "img",
      "input", "link", "meta", "param", "source", "track", "wbr",
      "import", "include"};
  for (auto v : kVoid)
    if (tag == v) return true;
  return false;
}

inline bool is_raw_text_tag(std::string_view tag) {
  return tag == "wxs" || tag == "script" || tag == "style";
}

inline bool is_tag_name_char(char c) {
  return text::is_ident_char(c) || c == '-' || c == ':' || c == '.';
}

class WxmlParser {
 public:
  explicit WxmlParser(std::string_view src) : src_(src) {}

  WxmlDocument run() {
    WxmlDocument doc;
    doc.root.tag = "#document";
    doc.root.span = {0, src_.size()};
    stack_.push_back(&doc.root);
    diags_ = &doc.diagnostics;

    while (pos_ < src_.size()) {
      if (src_.compare(pos_, 4, "<!--") == 0) {
        comment();
      } else if (src_.compare(pos_, 2, "</") == 0 && pos_ + 2 < src_.size() &&
                 text::is_ident_start(src_[pos_ + 2])) {
        close_tag();
      } else if (src_[pos_] == '<' && pos_ + 1 < src_.size() &&
                 text::is_ident_start(src_[pos_ + 1])) {
        open_tag();
      } else {
        text_run();
      }
    }
    for (std::size_t i = stack_.size(); i-- > 1;) {
      stack_[i]->span.end = src_.size();
      warn(diags_, "UnclosedTag", "<" + stack_[i]->tag + "> closed at end of input",
           std::to_string(stack_[i]->span.begin));
    }
    return doc;
  }

 private:
  WxmlElement& top() { return *stack_.back(); }

  void add_text(std::size_t begin, std::size_t end) {
    auto body = src_.substr(begin, end - begin);
    if (text::trim(body).empty()) return;
    auto& kids = top().children;
    if (!kids.empty() && kids.back().is_text() && kids.back().span.end == begin) {
      kids.back().text += body;
      kids.back().span.end = end;
      return;
    }
    WxmlElement t;
    t.tag = "#text";
    t.text = std::string(body);
    t.span = {begin, end};
    kids.push_back(std::move(t));
  }

  void comment() {
    const auto end = src_.find("-->", pos_ + 4);
    if (end == std::string_view::npos) {
      warn(diags_, "UnterminatedComment", "comment runs to end of input",
           std::to_string(pos_));
      add_text(pos_, src_.size());
      pos_ = src_.size();
      return;
    }
    pos_ = end + 3;
  }

  void text_run() {
    const auto begin = pos_;
    ++pos_;
    while (pos_ < src_.size() && src_[pos_] != '<') ++pos_;
    add_text(begin, pos_);
  }

  std::string read_name() {
    const auto begin = pos_;
    while (pos_ < src_.size() && is_tag_name_char(src_[pos_])) ++pos_;
    return std::string(src_.substr(begin, pos_ - begin));
  }

  void skip_space() {
    while (pos_ < src_.size() && text::is_space(src_[pos_])) ++pos_;
  }

  void close_tag() {
    const auto begin = pos_;
    pos_ += 2;
    const auto name = read_name();
    const auto gt = src_.find('>', pos_);
    pos_ = gt == std::string_view::npos ? src_.size() : gt + 1;

    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag != name) continue;
      for (std::size_t j = stack_.size() - 1; j > i; --j) {
        stack_[j]->span.end = begin;
        warn(diags_, "UnclosedTag",
             "<" + stack_[j]->tag + "> auto-closed by </" + name + ">",
             std::to_string(stack_[j]->span.begin));
      }
      stack_[i]->span.end = pos_;
      stack_.resize(i);
      return;
    }
    if (!is_void_tag(name))
      warn(diags_, "StrayCloseTag", "</" + name + "> has no open element",
           std::to_string(begin));
  }

  // Scans an attribute value; mustache blocks may contain the quote char of
  // the opposite kind and whitespace.
  std::optional<std::string> attribute_value() {
    if (pos_ >= src_.size()) return std::nullopt;
    const char q = src_[pos_];
    if (q == '"' || q == '\'') {
      const auto end = src_.find(q, pos_ + 1);
      if (end == std::string_view::npos) return std::nullopt;
      auto value = std::string(src_.substr(pos_ + 1, end - pos_ - 1));
      pos_ = end + 1;
      return value;
    }
    const auto begin = pos_;
    while (pos_ < src_.size() && !text::is_space(src_[pos_]) && src_[pos_] != '>') {
      if (src_.compare(pos_, 2, "{{") == 0) {
        const auto close = src_.find("}}", pos_ + 2);
        if (close == std::string_view::npos) break;
        pos_ = close + 2;
        continue;
      }
      ++pos_;
    }
    return std::string(src_.substr(begin, pos_ - begin));
  }

  void open_tag() {
    const auto begin = pos_;
    ++pos_;
    WxmlElement el;
    el.tag = read_name();
    bool self_closing = false;
    bool terminated = false;

    while (pos_ < src_.size()) {
      skip_space();
      if (pos_ >= src_.size()) break;
      if (src_[pos_] == '>') {
        ++pos_;
        terminated = true;
        break;
      }
      if (src_.compare(pos_, 2, "/>") == 0) {
        pos_ += 2;
        self_closing = terminated = true;
        break;
      }
      const auto name_begin = pos_;
      while (pos_ < src_.size() && !text::is_space(src_[pos_]) && src_[pos_] != '=' &&
             src_[pos_] != '>' && src_.compare(pos_, 2, "/>") != 0)
        ++pos_;
      if (pos_ == name_begin) {
        ++pos_;  // lone '/' or '=' inside a tag
        continue;
      }
      auto name = std::string(src_.substr(name_begin, pos_ - name_begin));
      std::string value;
      skip_space();
      if (pos_ < src_.size() && src_[pos_] == '=') {
        ++pos_;
        skip_space();
        auto v = attribute_value();
        if (!v) {
          pos_ = src_.size();
          break;
        }
        value = std::move(*v);
      }
      bool replaced = false;
      for (auto& [k, old] : el.attributes) {
        if (k == name) {
          warn(diags_, "DuplicateAttribute",
               "attribute '" + name + "' repeated on <" + el.tag + ">; last wins",
               std::to_string(name_begin));
          old = value;
          replaced = true;
        }
      }
      if (!replaced) el.attributes.emplace_back(std::move(name), std::move(value));
    }

    if (!terminated) {
      warn(diags_, "UnterminatedTag", "<" + el.tag + " runs to end of input; kept as text",
           std::to_string(begin));
      add_text(begin, src_.size());
      pos_ = src_.size();
      return;
    }

    el.span = {begin, pos_};
    if (self_closing || is_void_tag(el.tag)) {
      top().children.push_back(std::move(el));
      return;
    }
    if (is_raw_text_tag(el.tag)) {
      const auto close = src_.find("</" + el.tag, pos_);
      const auto body_end = close == std::string_view::npos ? src_.size() : close;
      if (body_end > pos_) {
        WxmlElement t;
        t.tag = "#text";
        t.text = std::string(src_.substr(pos_, body_end - pos_));
        t.span = {pos_, body_end};
        el.children.push_back(std::move(t));
      }
      if (close == std::string_view::npos) {
        warn(diags_, "UnclosedTag", "<" + el.tag + "> closed at end of input",
             std::to_string(begin));
        pos_ = src_.size();
      } else {
        const auto gt = src_.find('>', close);
        pos_ = gt == std::string_view::npos ? src_.size() : gt + 1;
      }
      el.span.end = pos_;
      top().children.push_back(std::move(el));
      return;
    }
    top().children.push_back(std::move(el));
    stack_.push_back(&top().children.back());
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  // Pointers stay valid: only the innermost open element's child vector is
  // ever appended to, and that element is always the stack top.
  std::vector<WxmlElement*> stack_;
  Diagnostics* diags_ = nullptr;
};

}  // namespace detail

/// Forgiving HTML-style parse. Never fails; problems land in diagnostics.
inline WxmlDocument parse_wxml(std::string_view text) {
  return detail::WxmlParser(text).run();
}

// ---------------------------------------------------------------------------
// Mustache bindings
// ---------------------------------------------------------------------------

enum class BindingKind { Literal, Bound, Mixed, Absent };

inline const char* to_string(BindingKind k) {
  switch (k) {
    case BindingKind::Literal: return "Literal";
    case BindingKind::Bound: return "Bound";
    case BindingKind::Mixed: return "Mixed";
    case BindingKind::Absent: return "Absent";
  }
  return "?";
}

/// One `{{ ... }}` slot. `opaque` marks expressions that are not a plain
/// dotted/indexed identifier path; `path` then holds the trimmed source.
struct BindingSlot {
  std::string path;
  bool opaque = false;

  auto operator<=>(const BindingSlot&) const = default;
};

inline constexpr std::string_view kSlotMarker = "{{}}";

struct BindingExpression {
  BindingKind kind = BindingKind::Absent;
  // Literal: the text. Mixed: the skeleton with each slot written as "{{}}".
  std::string literal_text;
  std::vector<BindingSlot> variable_paths;
  // Literal pieces around the slots; always variable_paths.size() + 1 long
  // (except Absent, where it is empty).
  std::vector<std::string> literal_parts;
};

namespace detail {

/// `a`, `a.b`, `a[0].b`; normalized to dotted form (`a.0.b`).
inline std::optional<std::string> normalize_mustache_path(std::string_view expr) {
  std::string out;
  std::size_t i = 0;
  auto ident = [&]() -> bool {
    if (i >= expr.size() || !text::is_ident_start(expr[i]) ||
        static_cast<unsigned char>(expr[i]) >= 0x80)
      return false;
    const auto b = i;
    while (i < expr.size() && text::is_ident_char(expr[i]) &&
           static_cast<unsigned char>(expr[i]) < 0x80)
      ++i;
    out += expr.substr(b, i - b);
    return true;
  };
  if (!ident()) return std::nullopt;
  while (i < expr.size()) {
    if (expr[i] == '.') {
      ++i;
      out += '.';
      if (!ident()) return std::nullopt;
    } else if (expr[i] == '[') {
      ++i;
      const auto b = i;
      while (i < expr.size() && expr[i] >= '0' && expr[i] <= '9') ++i;
      if (i == b || i >= expr.size() || expr[i] != ']') return std::nullopt;
      out += '.';
      out += expr.substr(b, i - b);
      ++i;
    } else {
      return std::nullopt;
    }
  }
  return out;
}

}  // namespace detail

inline BindingExpression parse_binding(std::string_view raw, Diagnostics* diags = nullptr) {
  BindingExpression b;
  const auto value = text::trim(raw);
  if (value.empty()) return b;

  auto literal = [&]() {
    b.kind = BindingKind::Literal;
    b.literal_text = std::string(value);
    b.variable_paths.clear();
    b.literal_parts = {b.literal_text};
    return b;
  };

  std::vector<std::string> parts;
  std::vector<BindingSlot> slots;
  std::size_t pos = 0;
  std::string current;
  while (pos < value.size()) {
    const auto open = value.find("{{", pos);
    const auto stray = value.find("}}", pos);
    if (stray != std::string_view::npos && (open == std::string_view::npos || stray < open)) {
      warn(diags, "UnbalancedMustache", "'}}' without matching '{{' in \"" + std::string(value) + "\"");
      return literal();
    }
    if (open == std::string_view::npos) {
      current += value.substr(pos);
      break;
    }
    const auto close = value.find("}}", open + 2);
    if (close == std::string_view::npos) {
      warn(diags, "UnbalancedMustache", "'{{' without matching '}}' in \"" + std::string(value) + "\"");
      return literal();
    }
    const auto nested = value.find("{{", open + 2);
    if (nested != std::string_view::npos && nested < close) {
      warn(diags, "UnbalancedMustache", "nested '{{' in \"" + std::string(value) + "\"");
      return literal();
    }
    current += value.substr(pos, open - pos);
    parts.push_back(std::move(current));
    current.clear();
    const auto expr = text::trim(value.substr(open + 2, close - open - 2));
    if (auto path = detail::normalize_mustache_path(expr))
      slots.push_back({*path, false});
    else
      slots.push_back({std::string(expr), true});
    pos = close + 2;
  }
  parts.push_back(std::move(current));

  if (slots.empty()) return literal();

  b.variable_paths = std::move(slots);
  b.literal_parts = std::move(parts);
  const bool has_text = std::any_of(b.literal_parts.begin(), b.literal_parts.end(),
                                    [](const std::string& p) { return !p.empty(); });
  if (!has_text) {
    // Adjacent slots with no literal between them still form a template.
    if (b.variable_paths.size() == 1) {
      b.kind = BindingKind::Bound;
      return b;
    }
  }
  b.kind = BindingKind::Mixed;
  b.literal_text = text::join(b.literal_parts, kSlotMarker);
  return b;
}

// ---------------------------------------------------------------------------
// Web-view extraction
// ---------------------------------------------------------------------------

struct WebViewElement {
  BindingExpression src;
  std::string src_raw;
  std::optional<std::string> bindmessage_handler;
  std::optional<std::string> bindload_handler;
  std::optional<std::string> binderror_handler;
  std::string id;  // the element's `id` attribute, used to match createWebViewContext
  std::string page_path;
  std::size_t element_index = 0;
  SourceSpan span;
};

namespace detail {

inline void collect_webviews(const WxmlElement& el, const std::string& page_path,
                             std::vector<WebViewElement>& out, Diagnostics* diags) {
  if (el.tag == "web-view") {
    WebViewElement wv;
    wv.page_path = page_path;
    wv.element_index = out.size();
    wv.span = el.span;
    if (const auto* src = el.attribute("src")) {
      wv.src_raw = *src;
      wv.src = parse_binding(*src, diags);
    }
    auto handler = [&](const char* name) -> std::optional<std::string> {
      const auto* v = el.attribute(name);
      if (!v) return std::nullopt;
      auto t = text::trim(*v);
      if (t.empty()) return std::nullopt;
      return std::string(t);
    };
    wv.bindmessage_handler = handler("bindmessage");
    wv.bindload_handler = handler("bindload");
    wv.binderror_handler = handler("binderror");
    if (const auto* id = el.attribute("id")) wv.id = std::string(text::trim(*id));
    out.push_back(std::move(wv));
  }
  for (const auto& c : el.children) collect_webviews(c, page_path, out, diags);
}

}  // namespace detail

/// Every `web-view` element in document order, indexed densely from 0.
inline std::vector<WebViewElement> extract_webviews(const WxmlElement& tree,
                                                    const std::string& page_path,
                                                    Diagnostics* diags = nullptr) {
  std::vector<WebViewElement> out;
  detail::collect_webviews(tree, page_path, out, diags);
  return out;
}

}  // namespace cmcs
