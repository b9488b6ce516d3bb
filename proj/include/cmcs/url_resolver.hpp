#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cmcs/public_suffix.hpp"
#include "cmcs/state_model.hpp"
#include "cmcs/wxml.hpp"

namespace cmcs {

enum class ParamKind { Const, Tainted, Unknown };

inline const char* to_string(ParamKind k) {
  switch (k) {
    case ParamKind::Const: return "Const";
    case ParamKind::Tainted: return "Tainted";
    case ParamKind::Unknown: return "Unknown";
  }
  return "?";
}

struct ParamValue {
  ParamKind kind = ParamKind::Unknown;
  std::string text;         // Const: raw (still percent-encoded) value
  CategorySet categories;   // Tainted

  auto operator<=>(const ParamValue&) const = default;
};

struct QueryParam {
  std::string key;  // "*" when the key itself is computed
  ParamValue value;

  auto operator<=>(const QueryParam&) const = default;
};

struct ResolvedUrl {
  enum class Status { Resolved, Unresolved };

  Status status = Status::Unresolved;
  std::string scheme;  // lower-case; empty for protocol-relative
  std::string host;    // lower-case, no userinfo / port
  std::string path;
  std::vector<QueryParam> query;  // including a `#/route?x=` fragment query
  CategorySet path_taint;         // tainted slots outside the query string
  std::string display;            // template form, slots as {{Category}} / {{?}}

  bool resolved() const { return status == Status::Resolved; }

  /// Categories sent through this URL: tainted query values plus tainted
  /// path/fragment slots.
  CategorySet sent_categories() const {
    CategorySet out = path_taint;
    for (const auto& q : query)
      if (q.value.kind == ParamKind::Tainted) out |= q.value.categories;
    return out;
  }

  auto operator<=>(const ResolvedUrl&) const = default;
};

struct Domain {
  std::string host;
  std::string registrable;

  auto operator<=>(const Domain&) const = default;
};

enum class ClusterKeyMode { Host, RegistrableDomain };

inline std::optional<ClusterKeyMode> parse_cluster_mode(std::string_view s) {
  if (s == "host") return ClusterKeyMode::Host;
  if (s == "etld1" || s == "etld+1" || s == "registrable") return ClusterKeyMode::RegistrableDomain;
  return std::nullopt;
}

inline const char* to_string(ClusterKeyMode m) {
  return m == ClusterKeyMode::Host ? "host" : "etld1";
}

inline const std::string& cluster_key(const Domain& d, ClusterKeyMode mode) {
  return mode == ClusterKeyMode::Host ? d.host : d.registrable;
}

namespace detail {

inline bool is_ipv4(std::string_view h) {
  const auto parts = text::split(h, '.');
  if (parts.size() != 4) return false;
  for (const auto& p : parts) {
    if (p.empty() || p.size() > 3) return false;
    for (char c : p)
      if (c < '0' || c > '9') return false;
    if (std::stoi(p) > 255) return false;
  }
  return true;
}

inline bool is_ip_literal(std::string_view h) {
  return is_ipv4(h) || (h.size() > 2 && h.front() == '[' && h.back() == ']');
}

inline bool valid_hostname(std::string_view h) {
  if (h.empty() || h.size() > 253) return false;
  if (is_ip_literal(h)) return true;
  if (h.front() == '.' || h.back() == '.') return false;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(h[i]);
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
                    c >= 0x80 || (c == '.' && h[i + 1] != '.');
    if (!ok) return false;
  }
  return true;
}

// Slot markers inside a rendered template: \x01 index \x02.
inline constexpr char kSlotOpen = '\x01';
inline constexpr char kSlotClose = '\x02';

struct Rendered {
  std::string text;
  std::vector<CategorySet> slots;

  // Slot categories inside [b, e); `any` reports whether a slot was seen.
  CategorySet slot_taint(std::size_t b, std::size_t e, bool* any = nullptr) const {
    CategorySet out;
    for (std::size_t i = b; i < e && i < text.size(); ++i) {
      if (text[i] != kSlotOpen) continue;
      const auto close = text.find(kSlotClose, i);
      const auto idx = static_cast<std::size_t>(std::stoul(text.substr(i + 1, close - i - 1)));
      out |= slots[idx];
      if (any) *any = true;
      i = close;
    }
    return out;
  }

  bool has_slot(std::size_t b, std::size_t e) const {
    for (std::size_t i = b; i < e && i < text.size(); ++i)
      if (text[i] == kSlotOpen) return true;
    return false;
  }
};

inline Rendered render(const AbstractValue& v) {
  Rendered r;
  for (const auto& p : v.as_parts()) {
    if (!p.slot) {
      r.text += p.text;
      continue;
    }
    r.text += kSlotOpen;
    r.text += std::to_string(r.slots.size());
    r.text += kSlotClose;
    r.slots.push_back(p.categories);
  }
  return r;
}

inline void parse_query(const Rendered& r, std::size_t begin, std::size_t end, ResolvedUrl& url) {
  std::size_t pos = begin;
  while (pos < end) {
    auto amp = r.text.find('&', pos);
    if (amp == std::string::npos || amp > end) amp = end;
    if (amp > pos) {
      auto eq = r.text.find('=', pos);
      if (eq == std::string::npos || eq > amp) eq = amp;
      QueryParam q;
      q.key = r.has_slot(pos, eq) ? "*" : r.text.substr(pos, eq - pos);
      const auto vb = std::min(eq + 1, amp);
      bool any = false;
      const auto cats = r.slot_taint(vb, amp, &any);
      if (!cats.empty()) {
        q.value.kind = ParamKind::Tainted;
        q.value.categories = cats;
      } else if (any) {
        q.value.kind = ParamKind::Unknown;
      } else {
        q.value.kind = ParamKind::Const;
        q.value.text = r.text.substr(vb, amp - vb);
      }
      // A computed key can itself carry taint (`?{{phone}}`).
      if (q.key == "*") {
        const auto key_cats = r.slot_taint(pos, eq);
        if (!key_cats.empty()) {
          q.value.categories |= key_cats;
          q.value.kind = ParamKind::Tainted;
          q.value.text.clear();
        }
      }
      url.query.push_back(std::move(q));
    }
    pos = amp + 1;
  }
}

inline std::string location_of(const WebViewElement& wv) {
  return wv.page_path + ".wxml#web-view[" + std::to_string(wv.element_index) + "]";
}

}  // namespace detail

/// Splits one abstract URL value into scheme/host/path/query. Values whose
/// host is not a constant, or that are not absolute http(s)-style URLs, come
/// back Unresolved with a diagnostic.
inline ResolvedUrl resolve_url_value(const AbstractValue& value, Diagnostics* diags = nullptr,
                                     const std::string& location = {}) {
  ResolvedUrl url;
  url.display = value.kind == ValueKind::StringConst ? value.text : value.describe();
  const auto r = detail::render(value);
  const auto& s = r.text;

  std::size_t pos = 0;
  const auto colon = s.find(':');
  const auto first_special = s.find_first_of("/?#\x01");
  if (colon != std::string::npos && colon > 0 && (first_special == std::string::npos || colon < first_special)) {
    url.scheme = text::to_lower(s.substr(0, colon));
    const bool scheme_ok = text::is_ident_start(url.scheme[0]) &&
                           std::all_of(url.scheme.begin(), url.scheme.end(), [](char c) {
                             return text::is_ident_char(c) || c == '+' || c == '-' || c == '.';
                           });
    if (!scheme_ok) {
      warn(diags, "MalformedUrl", "bad scheme in " + url.display, location);
      return url;
    }
    pos = colon + 1;
  } else if (r.has_slot(0, s.size()) && (s.empty() || s[0] == detail::kSlotOpen)) {
    warn(diags, "UnresolvedHost", "URL begins with an unresolved value: " + url.display, location);
    return url;
  }
  if (s.compare(pos, 2, "//") != 0) {
    warn(diags, url.scheme.empty() ? "RelativeUrl" : "UnresolvedHost",
         "no authority component in " + url.display, location);
    return url;
  }
  pos += 2;
  auto auth_end = s.find_first_of("/?#", pos);
  if (auth_end == std::string::npos) auth_end = s.size();
  if (r.has_slot(pos, auth_end)) {
    warn(diags, "UnresolvedHost", "host depends on an unresolved value: " + url.display, location);
    return url;
  }
  std::string authority = s.substr(pos, auth_end - pos);
  if (auto at = authority.rfind('@'); at != std::string::npos) authority = authority.substr(at + 1);
  if (!authority.empty() && authority.front() == '[') {
    const auto close = authority.find(']');
    if (close != std::string::npos) authority = authority.substr(0, close + 1);
  } else if (auto c = authority.rfind(':'); c != std::string::npos) {
    authority = authority.substr(0, c);
  }
  url.host = text::to_lower(authority);
  if (url.host.empty()) {
    warn(diags, "EmptyHost", "empty host in " + url.display, location);
    return url;
  }
  if (!detail::valid_hostname(url.host)) {
    warn(diags, "MalformedUrl", "invalid host '" + url.host + "'", location);
    url.host.clear();
    return url;
  }

  auto path_end = s.find_first_of("?#", auth_end);
  if (path_end == std::string::npos) path_end = s.size();
  url.path = s.substr(auth_end, path_end - auth_end);
  url.path_taint |= r.slot_taint(auth_end, path_end);

  std::size_t frag = s.find('#', auth_end);
  if (frag == std::string::npos) frag = s.size();
  if (path_end < s.size() && s[path_end] == '?') detail::parse_query(r, path_end + 1, frag, url);
  if (frag < s.size()) {
    // hash routes: `#/page?x=...`
    const auto fq = s.find('?', frag);
    const auto route_end = fq == std::string::npos ? s.size() : fq;
    url.path_taint |= r.slot_taint(frag, route_end);
    if (fq != std::string::npos) detail::parse_query(r, fq + 1, s.size(), url);
  }
  if (!url.path_taint.empty())
    warn(diags, "TaintInPath", "sensitive value outside the query string: " + url.display, location);
  else if (r.has_slot(auth_end, path_end) ||
           (frag < s.size() && r.has_slot(frag, std::min(s.find('?', frag), s.size()))))
    warn(diags, "UnresolvedPath", "path depends on an unresolved value: " + url.display, location);

  // strip slot markers from the stored path
  std::string clean;
  for (std::size_t i = 0; i < url.path.size(); ++i) {
    if (url.path[i] == detail::kSlotOpen) {
      i = url.path.find(detail::kSlotClose, i);
      clean += "{{}}";
    } else {
      clean += url.path[i];
    }
  }
  url.path = clean;
  url.status = ResolvedUrl::Status::Resolved;
  return url;
}

/// Abstract value of one mustache slot: the table entry, falling back to
/// keyword classification of the slot path when the table has nothing.
inline ValueSet resolve_binding_slot(const VariableTable& table, const BindingSlot& slot,
                                     const TaintCatalog& catalog = TaintCatalog::defaults()) {
  if (slot.opaque) return ValueSet::tainted(catalog.classify(slot.path));
  auto values = resolve_variable(table, slot.path);
  const auto name_cats = catalog.classify(slot.path);
  if (name_cats.empty()) return values;
  const bool placeholder = std::any_of(values.begin(), values.end(), [](const AbstractValue& v) {
    return v.kind == ValueKind::Unknown ||
           (v.kind == ValueKind::StringConst && (v.text.empty() || v.text == "null"));
  });
  if (placeholder) values.insert(AbstractValue::tainted(name_cats));
  return values;
}

/// Every URL a web-view's `src` can take, one ResolvedUrl per abstract value
/// (deduplicated, sorted). Absent `src` gives no URLs.
inline std::vector<ResolvedUrl> resolve_webview_url(const WebViewElement& wv, const VariableTable& table,
                                                    Diagnostics* diags = nullptr,
                                                    const TaintCatalog& catalog = TaintCatalog::defaults()) {
  const auto loc = detail::location_of(wv);
  ValueSet values;
  switch (wv.src.kind) {
    case BindingKind::Absent:
      warn(diags, "MissingSrc", "web-view without src", loc);
      return {};
    case BindingKind::Literal: values = ValueSet::constant(wv.src.literal_text); break;
    case BindingKind::Bound:
    case BindingKind::Mixed: {
      values = ValueSet::constant(wv.src.literal_parts.front());
      for (std::size_t i = 0; i < wv.src.variable_paths.size(); ++i) {
        values = concat(values, resolve_binding_slot(table, wv.src.variable_paths[i], catalog));
        values = concat(values, ValueSet::constant(wv.src.literal_parts[i + 1]));
      }
      break;
    }
  }
  std::vector<ResolvedUrl> out;
  for (const auto& v : values) {
    if (v.kind == ValueKind::StringConst && text::trim(v.text).empty()) continue;  // placeholder ""
    out.push_back(resolve_url_value(v, diags, loc));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Host and registrable domain (public suffix + one label) of a resolved
/// URL. IP literals are their own registrable domain. Throws EmptyHost.
inline Domain extract_domain(const ResolvedUrl& url, const PublicSuffixList& psl = PublicSuffixList::builtin()) {
  if (url.host.empty()) throw Error(ErrorCode::EmptyHost, "URL has no host: " + url.display);
  Domain d;
  d.host = url.host;
  d.registrable = detail::is_ip_literal(url.host) ? url.host : psl.registrable_domain(url.host);
  return d;
}

inline Domain extract_domain(std::string_view host, const PublicSuffixList& psl = PublicSuffixList::builtin()) {
  ResolvedUrl u;
  u.host = text::to_lower(host);
  u.display = std::string(host);
  return extract_domain(u, psl);
}

}  // namespace cmcs
