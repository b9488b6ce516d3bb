#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cmcs/categories.hpp"
#include "cmcs/js_frontend.hpp"
#include "cmcs/taint_catalog.hpp"

namespace cmcs {

// ---------------------------------------------------------------------------
// Abstract values
// ---------------------------------------------------------------------------

enum class ValueKind { StringConst, UrlTemplate, Tainted, Unknown };

inline const char* to_string(ValueKind k) {
  switch (k) {
    case ValueKind::StringConst: return "StringConst";
    case ValueKind::UrlTemplate: return "UrlTemplate";
    case ValueKind::Tainted: return "Tainted";
    case ValueKind::Unknown: return "Unknown";
  }
  return "?";
}

/// Piece of a UrlTemplate: literal text, or a slot whose content is
/// unresolved. A slot with empty `categories` is an Unknown slot.
struct TemplatePart {
  bool slot = false;
  std::string text;
  CategorySet categories;

  auto operator<=>(const TemplatePart&) const = default;
};

struct AbstractValue {
  ValueKind kind = ValueKind::Unknown;
  std::string text;                 // StringConst
  std::vector<TemplatePart> parts;  // UrlTemplate
  CategorySet categories;           // Tainted

  static AbstractValue constant(std::string s) {
    AbstractValue v;
    v.kind = ValueKind::StringConst;
    v.text = std::move(s);
    return v;
  }
  static AbstractValue tainted(CategorySet c) {
    if (c.empty()) return unknown();
    AbstractValue v;
    v.kind = ValueKind::Tainted;
    v.categories = c;
    return v;
  }
  static AbstractValue unknown() { return {}; }

  /// Merges adjacent literals; collapses to StringConst when slot-free.
  static AbstractValue from_parts(std::vector<TemplatePart> parts) {
    std::vector<TemplatePart> merged;
    for (auto& p : parts) {
      if (!p.slot && p.text.empty()) continue;
      if (!p.slot && !merged.empty() && !merged.back().slot)
        merged.back().text += p.text;
      else
        merged.push_back(std::move(p));
    }
    const bool has_slot = std::any_of(merged.begin(), merged.end(), [](const auto& p) { return p.slot; });
    if (!has_slot) return constant(merged.empty() ? std::string() : merged.front().text);
    if (merged.size() == 1) return tainted(merged.front().categories);
    AbstractValue v;
    v.kind = ValueKind::UrlTemplate;
    v.parts = std::move(merged);
    return v;
  }

  std::vector<TemplatePart> as_parts() const {
    switch (kind) {
      case ValueKind::StringConst: return {TemplatePart{false, text, {}}};
      case ValueKind::UrlTemplate: return parts;
      case ValueKind::Tainted: return {TemplatePart{true, {}, categories}};
      case ValueKind::Unknown: return {TemplatePart{true, {}, {}}};
    }
    return {};
  }

  CategorySet taint() const {
    if (kind == ValueKind::Tainted) return categories;
    CategorySet out;
    for (const auto& p : parts)
      if (p.slot) out |= p.categories;
    return out;
  }

  bool has_unknown_slot() const {
    if (kind == ValueKind::Unknown) return true;
    return std::any_of(parts.begin(), parts.end(),
                       [](const auto& p) { return p.slot && p.categories.empty(); });
  }

  /// Human-readable form: slots render as `{{Cats}}` or `{{?}}`.
  std::string describe() const {
    switch (kind) {
      case ValueKind::StringConst: return "\"" + text + "\"";
      case ValueKind::Tainted: return "<" + categories.to_string() + ">";
      case ValueKind::Unknown: return "<?>";
      case ValueKind::UrlTemplate: {
        std::string out;
        for (const auto& p : parts)
          out += p.slot ? "{{" + (p.categories.empty() ? std::string("?") : p.categories.to_string()) + "}}"
                        : p.text;
        return out;
      }
    }
    return {};
  }

  auto operator<=>(const AbstractValue&) const = default;
};

/// Set of abstract values for one variable path. Capped at kMaxValues;
/// overflow adds Unknown instead of growing further.
class ValueSet {
 public:
  static constexpr std::size_t kMaxValues = 32;
  static constexpr std::size_t kMaxTemplateParts = 16;

  ValueSet() = default;
  explicit ValueSet(AbstractValue v) { insert(std::move(v)); }

  static ValueSet unknown() { return ValueSet(AbstractValue::unknown()); }
  static ValueSet constant(std::string s) { return ValueSet(AbstractValue::constant(std::move(s))); }
  static ValueSet tainted(CategorySet c) { return ValueSet(AbstractValue::tainted(c)); }

  bool insert(AbstractValue v) {
    if (v.kind == ValueKind::UrlTemplate && v.parts.size() > kMaxTemplateParts) v = AbstractValue::unknown();
    if (values_.count(v)) return false;
    if (values_.size() >= kMaxValues) {
      if (v.kind == ValueKind::Unknown) return values_.insert(std::move(v)).second;
      return values_.insert(AbstractValue::unknown()).second;
    }
    values_.insert(std::move(v));
    return true;
  }

  bool merge(const ValueSet& other) {
    bool changed = false;
    for (const auto& v : other.values_) changed |= insert(v);
    return changed;
  }

  bool empty() const { return values_.empty(); }
  std::size_t size() const { return values_.size(); }
  const std::set<AbstractValue>& values() const { return values_; }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  bool contains(const AbstractValue& v) const { return values_.count(v) > 0; }
  bool has_unknown() const { return values_.count(AbstractValue::unknown()) > 0; }

  CategorySet taint() const {
    CategorySet out;
    for (const auto& v : values_) out |= v.taint();
    return out;
  }

  std::vector<std::string> constants() const {
    std::vector<std::string> out;
    for (const auto& v : values_)
      if (v.kind == ValueKind::StringConst) out.push_back(v.text);
    return out;
  }

  bool operator==(const ValueSet&) const = default;

 private:
  std::set<AbstractValue> values_;
};

/// Pairwise concatenation of two value sets.
inline ValueSet concat(const ValueSet& a, const ValueSet& b) {
  ValueSet out;
  if (a.size() * b.size() > ValueSet::kMaxValues * 2) {
    CategorySet cats = a.taint() | b.taint();
    out.insert(cats.empty() ? AbstractValue::unknown() : AbstractValue::tainted(cats));
    return out;
  }
  for (const auto& x : a) {
    for (const auto& y : b) {
      auto parts = x.as_parts();
      auto tail = y.as_parts();
      parts.insert(parts.end(), tail.begin(), tail.end());
      out.insert(AbstractValue::from_parts(std::move(parts)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variable table
// ---------------------------------------------------------------------------

using PathMap = std::map<std::string, ValueSet>;

/// Page `data` plus app `globalData`, keyed by normalized dotted path.
struct VariableTable {
  PathMap page_data;
  PathMap global_data;
  std::string app_id;
  std::string page_path;
};

namespace detail {

/// `list[0].url` / `a.b` / `'a.b'` setData keys to dotted form.
inline std::string normalize_data_key(std::string_view key) {
  std::string out;
  for (std::size_t i = 0; i < key.size(); ++i) {
    const char c = key[i];
    if (c == '[') {
      if (!out.empty() && out.back() != '.') out += '.';
    } else if (c == ']' || c == '"' || c == '\'') {
      continue;
    } else {
      out += c;
    }
  }
  // collapse empty segments
  std::string clean;
  for (const auto& seg : text::split(out, '.')) {
    if (seg.empty()) continue;
    if (!clean.empty()) clean += '.';
    clean += seg;
  }
  return clean;
}

inline std::string join_path(const std::vector<std::string>& segs, std::size_t from = 0) {
  std::string out;
  for (std::size_t i = from; i < segs.size(); ++i) {
    if (!out.empty()) out += '.';
    out += segs[i];
  }
  return out;
}

/// Values of a path within `map`: exact key, else fields of a tainted
/// ancestor inherit its taint. nullopt when nothing applies.
inline std::optional<ValueSet> lookup_path(const PathMap& map, const std::string& path) {
  if (auto it = map.find(path); it != map.end()) return it->second;
  auto cut = path.rfind('.');
  while (cut != std::string::npos) {
    const auto prefix = path.substr(0, cut);
    if (auto it = map.find(prefix); it != map.end()) {
      const auto cats = it->second.taint();
      if (!cats.empty()) return ValueSet::tainted(cats);
      return std::nullopt;
    }
    cut = cut == 0 ? std::string::npos : path.rfind('.', cut - 1);
  }
  return std::nullopt;
}

/// Entries at `path` or below it (`path.x.y`), as (suffix, values).
inline std::vector<std::pair<std::string, ValueSet>> subtree(const PathMap& map, const std::string& path) {
  std::vector<std::pair<std::string, ValueSet>> out;
  if (path.empty()) {
    for (const auto& [k, v] : map) out.emplace_back(k, v);
    return out;
  }
  for (auto it = map.lower_bound(path); it != map.end(); ++it) {
    if (it->first == path) {
      out.emplace_back("", it->second);
      continue;
    }
    if (!text::starts_with(it->first, path)) break;
    if (it->first.size() > path.size() && it->first[path.size()] == '.')
      out.emplace_back(it->first.substr(path.size() + 1), it->second);
  }
  return out;
}

}  // namespace detail

/// Exact page path, then tainted-ancestor fields, then global data; a miss is
/// {Unknown}. Never returns an empty set.
inline ValueSet resolve_variable(const VariableTable& table, std::string_view path) {
  const auto key = detail::normalize_data_key(path);
  if (auto v = detail::lookup_path(table.page_data, key); v && !v->empty()) return *v;
  if (auto v = detail::lookup_path(table.global_data, key); v && !v->empty()) return *v;
  return ValueSet::unknown();
}

// ---------------------------------------------------------------------------
// Evaluation of script expressions over the table
// ---------------------------------------------------------------------------

/// Local environment of one function body (or the module top level).
struct Scope {
  const Scope* parent = nullptr;
  const AstNode* function = nullptr;  // nullptr for module scope
  PathMap bindings;                   // flattened local paths
  std::set<std::string> declared;     // params + var/let/const names
  std::set<std::string> params;
  CategorySet source_param_categories;  // set when this is an API callback
  std::map<std::string, std::vector<std::string>> aliases;  // name -> canonical root

  const Scope* owner_of(const std::string& name) const {
    for (const Scope* s = this; s; s = s->parent)
      if (s->declared.count(name) || s->bindings.count(name) || s->aliases.count(name)) return s;
    return nullptr;
  }
};

/// Result of a deep taint query over an expression.
struct TaintQuery {
  CategorySet categories;
  bool saw_unknown = false;
};

/// Abstract interpreter over one script module. Holds non-owning pointers to
/// the page/global maps it reads; the maps may be updated between rounds.
class Evaluator {
 public:
  Evaluator(const ScriptModule& module, const TaintCatalog& catalog, const PathMap* page_data,
            const PathMap* global_data, bool is_app_script = false)
      : module_(module), catalog_(catalog), page_(page_data), global_(global_data), is_app_(is_app_script) {
    find_source_callbacks();
  }

  const TaintCatalog& catalog() const { return catalog_; }

  // -- scopes ---------------------------------------------------------------

  Scope module_scope() const { return build_scope(nullptr, module_.items, nullptr); }

  Scope function_scope(const AstNode& fn, const Scope& parent) const {
    return build_scope(&fn, fn.children, &parent);
  }

  /// Scope chain for a call site (module scope, then each enclosing function).
  /// Storage is returned so the chain stays alive.
  std::vector<Scope> scope_chain(const std::vector<const AstNode*>& functions) const {
    std::vector<Scope> chain;
    chain.reserve(functions.size() + 1);
    chain.push_back(module_scope());
    for (const auto* fn : functions) chain.push_back(function_scope(*fn, chain.back()));
    return chain;
  }

  CategorySet callback_categories(const AstNode* fn) const {
    auto it = source_callbacks_.find(fn);
    return it == source_callbacks_.end() ? CategorySet{} : it->second;
  }

  // -- canonical paths ------------------------------------------------------

  /// Segments of an Identifier/MemberPath with aliases expanded; the root may
  /// be the pseudo-segment "getApp()". nullopt for non-path expressions.
  std::optional<std::vector<std::string>> canonical(const AstNode& node, const Scope& scope) const {
    std::vector<std::string> segs;
    if (node.kind == NodeKind::Identifier) {
      segs.push_back(node.text);
    } else if (node.kind == NodeKind::MemberPath) {
      if (const auto* base = node.base()) {
        if (!is_get_app_call(*base)) return std::nullopt;
        segs.push_back("getApp()");
      }
      segs.insert(segs.end(), node.segments.begin(), node.segments.end());
    } else {
      return std::nullopt;
    }
    if (segs.empty()) return std::nullopt;
    if (const Scope* owner = scope.owner_of(segs[0])) {
      if (auto it = owner->aliases.find(segs[0]); it != owner->aliases.end()) {
        std::vector<std::string> expanded = it->second;
        expanded.insert(expanded.end(), segs.begin() + 1, segs.end());
        return expanded;
      }
    }
    return segs;
  }

  enum class Store { None, Page, Global, Local };

  /// Where a canonical path lives, and the key within that store.
  std::pair<Store, std::string> locate(const std::vector<std::string>& segs, const Scope& scope) const {
    if (segs.size() >= 2 && segs[0] == "this" && segs[1] == "data")
      return {Store::Page, detail::join_path(segs, 2)};
    if (segs.size() >= 2 && segs[0] == "getApp()" && segs[1] == "globalData")
      return {Store::Global, detail::join_path(segs, 2)};
    if (is_app_ && segs.size() >= 2 && segs[0] == "this" && segs[1] == "globalData")
      return {Store::Global, detail::join_path(segs, 2)};
    if (segs[0] != "this" && segs[0] != "getApp()" && scope.owner_of(segs[0]))
      return {Store::Local, detail::join_path(segs)};
    return {Store::None, detail::join_path(segs)};
  }

  // -- evaluation -----------------------------------------------------------

  ValueSet eval(const AstNode& node, const Scope& scope, int depth = 0) const {
    if (depth > 64) return ValueSet::unknown();
    switch (node.kind) {
      case NodeKind::StringLiteral: return ValueSet::constant(node.text);
      case NodeKind::NumberLiteral: return ValueSet::constant(node.text);
      case NodeKind::TemplateConcat: {
        ValueSet acc = ValueSet::constant("");
        for (const auto& c : node.children) acc = concat(acc, eval(c, scope, depth + 1));
        return acc;
      }
      case NodeKind::Identifier:
        if (node.text == "true" || node.text == "false" || node.text == "null")
          return ValueSet::constant(node.text);
        if (node.text == "undefined") return ValueSet::unknown();
        [[fallthrough]];
      case NodeKind::MemberPath: return eval_path(node, scope, depth);
      case NodeKind::Call: return eval_call(node, scope, depth);
      case NodeKind::ObjectLiteral:
      case NodeKind::ArrayLiteral: {
        const auto q = deep_taint(node, scope, depth + 1);
        return q.categories.empty() ? ValueSet::unknown() : ValueSet::tainted(q.categories);
      }
      case NodeKind::Assignment: return eval(node.value(), scope, depth + 1);
      default: return ValueSet::unknown();
    }
  }

  /// Categories reachable from an expression, descending into object and
  /// array literals and into stored sub-paths of objects.
  TaintQuery deep_taint(const AstNode& node, const Scope& scope, int depth = 0) const {
    TaintQuery q;
    if (depth > 64) {
      q.saw_unknown = true;
      return q;
    }
    switch (node.kind) {
      case NodeKind::ObjectLiteral:
      case NodeKind::ArrayLiteral:
        for (const auto& c : node.children) {
          if (c.kind == NodeKind::FunctionDef) continue;
          auto sub = deep_taint(c, scope, depth + 1);
          q.categories |= sub.categories;
          q.saw_unknown |= sub.saw_unknown;
        }
        return q;
      case NodeKind::Identifier:
      case NodeKind::MemberPath: {
        if (auto segs = canonical(node, scope)) {
          auto [store, key] = locate(*segs, scope);
          const PathMap* map = store_map(store, *segs, scope);
          if (map) {
            for (const auto& [suffix, values] : detail::subtree(*map, key)) {
              (void)suffix;
              q.categories |= values.taint();
              q.saw_unknown |= values.has_unknown() ||
                               std::any_of(values.begin(), values.end(),
                                           [](const AbstractValue& v) { return v.has_unknown_slot(); });
            }
          }
        }
        const auto v = eval(node, scope, depth + 1);
        q.categories |= v.taint();
        for (const auto& av : v) q.saw_unknown |= av.has_unknown_slot();
        return q;
      }
      default: {
        const auto v = eval(node, scope, depth + 1);
        q.categories |= v.taint();
        for (const auto& av : v) q.saw_unknown |= av.has_unknown_slot();
        return q;
      }
    }
  }

  // -- writes ---------------------------------------------------------------

  /// Flattens `value` into (suffix, values) pairs: object literals expand to
  /// their keys, references to stored objects copy the stored sub-paths.
  std::vector<std::pair<std::string, ValueSet>> flatten(const AstNode& value, const Scope& scope,
                                                         int depth = 0) const {
    std::vector<std::pair<std::string, ValueSet>> out;
    if (depth > 16) {
      out.emplace_back("", ValueSet::unknown());
      return out;
    }
    if (value.kind == NodeKind::ObjectLiteral || value.kind == NodeKind::ArrayLiteral) {
      bool dynamic = false;
      for (std::size_t i = 0; i < value.children.size(); ++i) {
        const auto key = value.kind == NodeKind::ObjectLiteral ? value.keys[i] : std::to_string(i);
        if (key == "*" || key == "...") {
          dynamic = true;
          continue;
        }
        if (value.children[i].kind == NodeKind::FunctionDef) continue;
        for (auto& [suffix, vs] : flatten(value.children[i], scope, depth + 1))
          out.emplace_back(suffix.empty() ? key : key + "." + suffix, std::move(vs));
      }
      if (dynamic) out.emplace_back("", ValueSet::unknown());
      return out;
    }
    if (value.kind == NodeKind::Identifier || value.kind == NodeKind::MemberPath) {
      if (auto segs = canonical(value, scope)) {
        auto [store, key] = locate(*segs, scope);
        if (const PathMap* map = store_map(store, *segs, scope)) {
          for (auto& [suffix, vs] : detail::subtree(*map, key))
            if (!suffix.empty()) out.emplace_back(suffix, vs);
        }
      }
    }
    out.emplace_back("", eval(value, scope, depth + 1));
    return out;
  }

  static bool is_get_app_call(const AstNode& n) {
    return n.kind == NodeKind::Call && n.arg_count() == 0 && !n.callee().has_base &&
           n.callee().segments.size() == 1 && n.callee().segments[0] == "getApp";
  }

 private:
  const PathMap* store_map(Store store, const std::vector<std::string>& segs, const Scope& scope) const {
    switch (store) {
      case Store::Page: return page_;
      case Store::Global: return global_;
      case Store::Local: {
        const Scope* owner = scope.owner_of(segs[0]);
        return owner ? &owner->bindings : nullptr;
      }
      case Store::None: return nullptr;
    }
    return nullptr;
  }

  ValueSet classify_unresolved(const std::vector<std::string>& segs, CategorySet extra = {}) const {
    CategorySet cats = extra | catalog_.api_categories(segs) | catalog_.classify(detail::join_path(segs));
    return cats.empty() ? ValueSet::unknown() : ValueSet::tainted(cats);
  }

  // `uid: ''` style placeholders are filled at runtime; a sensitively named
  // path holding one also carries the name's categories.
  ValueSet with_placeholder_taint(ValueSet values, const std::string& key) const {
    const bool placeholder = std::any_of(values.begin(), values.end(), [](const AbstractValue& v) {
      return v.kind == ValueKind::StringConst && (v.text.empty() || v.text == "null");
    });
    if (!placeholder) return values;
    const auto cats = catalog_.classify(key);
    if (!cats.empty()) values.insert(AbstractValue::tainted(cats));
    return values;
  }

  ValueSet eval_path(const AstNode& node, const Scope& scope, int depth) const {
    auto segs = canonical(node, scope);
    if (!segs) {
      // member access on a computed base, e.g. wx.getLocation().latitude
      const auto* base = node.base();
      CategorySet inherited = base ? eval(*base, scope, depth + 1).taint() : CategorySet{};
      return classify_unresolved(node.segments, inherited);
    }
    auto [store, key] = locate(*segs, scope);
    switch (store) {
      case Store::Page:
      case Store::Global: {
        const PathMap* map = store == Store::Page ? page_ : global_;
        if (map) {
          if (auto v = detail::lookup_path(*map, key); v && !v->empty()) return with_placeholder_taint(*v, key);
        }
        if (key.empty()) return ValueSet::unknown();
        return classify_unresolved(text::split(key, '.'));
      }
      case Store::Local: {
        const Scope* owner = scope.owner_of((*segs)[0]);
        if (auto v = detail::lookup_path(owner->bindings, key); v && !v->empty())
          return with_placeholder_taint(*v, key);
        CategorySet from_param;
        if (owner->params.count((*segs)[0])) from_param = owner->source_param_categories;
        if (segs->size() == 1 && !from_param.empty()) return ValueSet::tainted(from_param);
        if (segs->size() > 1 && !from_param.empty()) {
          // field of an API callback result: keyword classification of the
          // field if it matches, otherwise the API's own categories
          auto field = classify_unresolved(*segs);
          return field.taint().empty() ? ValueSet::tainted(from_param) : field;
        }
        return classify_unresolved(*segs);
      }
      case Store::None: break;
    }
    return classify_unresolved(*segs);
  }

  static std::string percent_encode(std::string_view s, bool component) {
    static constexpr std::string_view kKeepAlways = "-_.!~*'()";
    static constexpr std::string_view kKeepUri = ";,/?:@&=+$#";
    std::string out;
    for (unsigned char c : s) {
      const bool alnum = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
      if (alnum || kKeepAlways.find(static_cast<char>(c)) != std::string_view::npos ||
          (!component && kKeepUri.find(static_cast<char>(c)) != std::string_view::npos)) {
        out += static_cast<char>(c);
      } else {
        static constexpr char kHex[] = "0123456789ABCDEF";
        out += '%';
        out += kHex[c >> 4];
        out += kHex[c & 15];
      }
    }
    return out;
  }

  ValueSet eval_call(const AstNode& call, const Scope& scope, int depth) const {
    const auto& callee = call.callee();
    if (!callee.has_base) {
      const auto api = catalog_.api_categories(callee.segments);
      if (!api.empty()) return ValueSet::tainted(api);
      if (callee.segments.size() == 1 && call.arg_count() >= 1) {
        const auto& fn = callee.segments[0];
        if (fn == "encodeURIComponent" || fn == "encodeURI" || fn == "String" ||
            fn == "decodeURIComponent") {
          ValueSet out;
          for (const auto& v : eval(call.arg(0), scope, depth + 1)) {
            if (v.kind == ValueKind::StringConst && fn != "String" && fn != "decodeURIComponent")
              out.insert(AbstractValue::constant(percent_encode(v.text, fn == "encodeURIComponent")));
            else
              out.insert(v);
          }
          return out;
        }
      }
      if (callee.segments.size() == 2 && callee.segments[0] == "JSON" && callee.segments[1] == "stringify" &&
          call.arg_count() >= 1) {
        const auto q = deep_taint(call.arg(0), scope, depth + 1);
        return q.categories.empty() ? ValueSet::unknown() : ValueSet::tainted(q.categories);
      }
    } else if (const auto* base = callee.base(); base && base->kind == NodeKind::Call) {
      // promise-style API use: wx.getLocation().then(...)
      const auto inner = eval_call(*base, scope, depth + 1).taint();
      if (!inner.empty()) return ValueSet::tainted(inner);
    }
    return ValueSet::unknown();
  }

  // Marks function arguments of API-source calls (directly, as object
  // literal members such as `success`, or via `.then(fn)`) as callbacks
  // whose first parameter carries the API's categories.
  void find_source_callbacks() {
    walk(module_, [&](const AstNode& n, const std::vector<const AstNode*>&) {
      if (n.kind != NodeKind::Call) return;
      const auto& callee = n.callee();
      CategorySet cats;
      if (!callee.has_base) {
        cats = catalog_.api_categories(callee.segments);
      } else if (callee.segments.size() == 1 && callee.segments[0] == "then") {
        const auto* base = callee.base();
        if (base && base->kind == NodeKind::Call && !base->callee().has_base)
          cats = catalog_.api_categories(base->callee().segments);
      }
      if (cats.empty()) return;
      for (std::size_t i = 0; i < n.arg_count(); ++i) {
        const auto& a = n.arg(i);
        if (a.kind == NodeKind::FunctionDef) source_callbacks_[&a] |= cats;
        if (a.kind == NodeKind::ObjectLiteral)
          for (const auto& member : a.children)
            if (member.kind == NodeKind::FunctionDef) source_callbacks_[&member] |= cats;
      }
    });
  }

  // Collects declarations, aliases and local writes of one body (without
  // descending into nested functions), then evaluates them to a fixpoint.
  Scope build_scope(const AstNode* fn, const std::vector<AstNode>& body, const Scope* parent) const {
    Scope s;
    s.parent = parent;
    s.function = fn;
    if (fn) {
      for (const auto& p : fn->params) {
        s.params.insert(p);
        s.declared.insert(p);
      }
      s.source_param_categories = callback_categories(fn);
    }

    struct Write {
      std::string name;  // local root
      std::vector<std::string> rest;
      const AstNode* value;
      bool append;
    };
    std::vector<Write> writes;
    std::vector<const AstNode*> stack;
    for (auto it = body.rbegin(); it != body.rend(); ++it) stack.push_back(&*it);
    while (!stack.empty()) {
      const AstNode* n = stack.back();
      stack.pop_back();
      if (n->kind == NodeKind::FunctionDef) {
        if (!n->text.empty() && n != fn) s.declared.insert(n->text);
        continue;
      }
      if (n->kind == NodeKind::VarDecl) {
        s.declared.insert(n->text);
        if (n->init()) writes.push_back({n->text, {}, n->init(), false});
      } else if (n->kind == NodeKind::Assignment && !n->target().has_base) {
        const auto& segs = n->target().segments;
        if (!segs.empty() && segs[0] != "this")
          writes.push_back({segs[0], {segs.begin() + 1, segs.end()}, &n->value(), n->text == "+="});
      }
      for (auto it = n->children.rbegin(); it != n->children.rend(); ++it) stack.push_back(&*it);
    }

    // aliases: `var that = this`, `const app = getApp()`, `const d = this.data`
    for (const auto& w : writes) {
      if (!w.rest.empty()) continue;
      const auto& v = *w.value;
      if (v.kind == NodeKind::Identifier && v.text == "this") {
        s.aliases[w.name] = {"this"};
      } else if (is_get_app_call(v)) {
        s.aliases[w.name] = {"getApp()"};
      } else if (v.kind == NodeKind::MemberPath) {
        if (auto segs = canonical(v, s)) {
          const bool page_root = (*segs)[0] == "this" && segs->size() <= 2 &&
                                 (segs->size() == 1 || (*segs)[1] == "data" || (is_app_ && (*segs)[1] == "globalData"));
          const bool global_root = (*segs)[0] == "getApp()" && segs->size() <= 2;
          if (page_root || global_root) s.aliases[w.name] = *segs;
        }
      }
    }

    for (int round = 0; round < 12; ++round) {
      bool changed = false;
      for (const auto& w : writes) {
        if (s.aliases.count(w.name) && w.rest.empty()) continue;
        if (s.aliases.count(w.name)) continue;  // writes through aliases hit page/global
        if (!s.declared.count(w.name) && parent && parent->owner_of(w.name)) continue;
        std::string key = w.name;
        for (const auto& r : w.rest) key += "." + r;
        if (w.append) {
          auto current = detail::lookup_path(s.bindings, key).value_or(ValueSet::unknown());
          changed |= s.bindings[key].merge(concat(current, eval(*w.value, s)));
          continue;
        }
        for (auto& [suffix, vs] : flatten(*w.value, s)) {
          const auto full = suffix.empty() ? key : key + "." + suffix;
          changed |= s.bindings[full].merge(vs);
        }
      }
      if (!changed) break;
    }
    return s;
  }

  const ScriptModule& module_;
  const TaintCatalog& catalog_;
  const PathMap* page_;
  const PathMap* global_;
  bool is_app_;
  std::map<const AstNode*, CategorySet> source_callbacks_;
};

/// Pre-order walk that maintains the evaluator's scope chain.
template <class Fn>
void walk_scoped(const AstNode& node, const Evaluator& ev, const Scope& scope, Fn& fn) {
  fn(node, scope);
  if (node.kind == NodeKind::FunctionDef) {
    const Scope inner = ev.function_scope(node, scope);
    for (const auto& c : node.children) walk_scoped(c, ev, inner, fn);
    return;
  }
  for (const auto& c : node.children) walk_scoped(c, ev, scope, fn);
}

template <class Fn>
void walk_scoped(const ScriptModule& module, const Evaluator& ev, Fn&& fn) {
  const Scope top = ev.module_scope();
  for (const auto& item : module.items) walk_scoped(item, ev, top, fn);
}

// ---------------------------------------------------------------------------
// Table construction
// ---------------------------------------------------------------------------

namespace detail {

inline bool merge_flattened(PathMap& map, const std::string& key,
                            const std::vector<std::pair<std::string, ValueSet>>& flat) {
  bool changed = false;
  for (const auto& [suffix, vs] : flat) {
    std::string full = key;
    if (!suffix.empty()) full = full.empty() ? suffix : full + "." + suffix;
    if (full.empty()) continue;  // whole-store replacement is not tracked
    changed |= map[full].merge(vs);
  }
  return changed;
}

// Applies every write the module performs to page data / global data.
inline bool apply_module_writes(const ScriptModule& module, bool is_app, const TaintCatalog& catalog,
                                PathMap& page, PathMap& global) {
  bool changed = false;
  // Snapshot reads so a round sees a consistent table.
  const PathMap page_in = page;
  const PathMap global_in = global;
  Evaluator ev(module, catalog, &page_in, &global_in, is_app);
  auto visit = [&](const AstNode& n, const Scope& scope) {
    if (n.kind == NodeKind::Call) {
      const auto& callee = n.callee();
      const bool set_data = !callee.has_base && callee.segments.size() >= 2 &&
                            callee.segments.back() == "setData" && n.arg_count() >= 1;
      if (set_data && n.arg(0).kind == NodeKind::ObjectLiteral) {
        const auto& obj = n.arg(0);
        for (std::size_t i = 0; i < obj.children.size(); ++i) {
          const auto& k = obj.keys[i];
          if (k == "*" || k == "...") {
            changed |= page["$dynamic"].merge(ValueSet::unknown());
            continue;
          }
          changed |= merge_flattened(page, normalize_data_key(k), ev.flatten(obj.children[i], scope));
        }
      }
    } else if (n.kind == NodeKind::Assignment) {
      if (auto segs = ev.canonical(n.target(), scope)) {
        auto [store, key] = ev.locate(*segs, scope);
        if (store == Evaluator::Store::Page || store == Evaluator::Store::Global) {
          auto& map = store == Evaluator::Store::Page ? page : global;
          if (n.text == "+=") {
            auto current = lookup_path(store == Evaluator::Store::Page ? page_in : global_in, key)
                               .value_or(ValueSet::unknown());
            changed |= map[key].merge(concat(current, ev.eval(n.value(), scope)));
          } else {
            changed |= merge_flattened(map, key, ev.flatten(n.value(), scope));
          }
        }
      }
    }
  };
  walk_scoped(module, ev, visit);
  return changed;
}

inline void seed_from_registration(const ScriptModule& module, const std::string& registrar,
                                   const std::string& property, const TaintCatalog& catalog,
                                   PathMap& target) {
  const auto* obj = registration_object(module, registrar);
  if (!obj) return;
  const auto* data = obj->property(property);
  if (!data) return;
  const PathMap empty;
  Evaluator ev(module, catalog, &empty, &empty, registrar == "App");
  const Scope top = ev.module_scope();
  merge_flattened(target, "", ev.flatten(*data, top));
}

}  // namespace detail

/// Tables for every page of a package. globalData writes from the app script
/// and from all pages are merged into one app-level map shared by all tables.
inline std::vector<VariableTable> build_variable_tables(const std::vector<const ScriptModule*>& pages,
                                                        const ScriptModule* app,
                                                        const TaintCatalog& catalog = TaintCatalog::defaults()) {
  PathMap global;
  std::vector<PathMap> page_data(pages.size());
  if (app) detail::seed_from_registration(*app, "App", "globalData", catalog, global);
  for (std::size_t i = 0; i < pages.size(); ++i)
    if (pages[i]) detail::seed_from_registration(*pages[i], "Page", "data", catalog, page_data[i]);

  for (int round = 0; round < 12; ++round) {
    bool changed = false;
    PathMap app_page;  // the App instance has no page data
    if (app) changed |= detail::apply_module_writes(*app, true, catalog, app_page, global);
    for (std::size_t i = 0; i < pages.size(); ++i)
      if (pages[i]) changed |= detail::apply_module_writes(*pages[i], false, catalog, page_data[i], global);
    if (!changed) break;
  }

  std::vector<VariableTable> tables(pages.size());
  for (std::size_t i = 0; i < pages.size(); ++i) {
    tables[i].page_data = std::move(page_data[i]);
    tables[i].global_data = global;
  }
  return tables;
}

/// Single-page table: Page `data`, App `globalData`, then every setData and
/// every write to `this.data.*` / `getApp().globalData.*`, unioned.
inline VariableTable build_variable_table(const ScriptModule& page, const ScriptModule* app,
                                          const TaintCatalog& catalog = TaintCatalog::defaults()) {
  return build_variable_tables({&page}, app, catalog).front();
}

}  // namespace cmcs
