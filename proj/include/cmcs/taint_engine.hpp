#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cmcs/package.hpp"
#include "cmcs/state_model.hpp"
#include "cmcs/url_resolver.hpp"

namespace cmcs {

enum class Direction { Send, Receive };
enum class Channel { UrlParam, PostMessage, BindMessage };
enum class Confidence { High, Low };

inline const char* to_string(Direction d) { return d == Direction::Send ? "Send" : "Receive"; }
inline const char* to_string(Confidence c) { return c == Confidence::High ? "high" : "low"; }
inline const char* to_string(Channel c) {
  switch (c) {
    case Channel::UrlParam: return "UrlParam";
    case Channel::PostMessage: return "PostMessage";
    case Channel::BindMessage: return "BindMessage";
  }
  return "?";
}

struct Evidence {
  std::string file;  // page-relative source file
  SourceSpan span;
  std::string rule;  // what matched, e.g. "query:number" or "handler:handleMsg"

  auto operator<=>(const Evidence&) const = default;
};

struct FlowFinding {
  std::string app_id;
  std::string page_path;
  std::size_t webview_index = 0;
  Direction direction = Direction::Send;
  Channel channel = Channel::UrlParam;
  CategorySet categories;
  std::optional<Domain> domain;
  Evidence evidence;
  Confidence confidence = Confidence::High;

  auto operator<=>(const FlowFinding&) const = default;
};

/// A web-view URL that resolved to a concrete host.
struct WebViewDomain {
  std::string page_path;
  std::size_t webview_index = 0;
  Domain domain;

  auto operator<=>(const WebViewDomain&) const = default;
};

// ---------------------------------------------------------------------------
// Backward taint (sends)
// ---------------------------------------------------------------------------

/// Categories carried by the arguments of a postMessage call. Unknown-only
/// provenance yields {} and an UnknownFlow diagnostic.
inline CategorySet backward_taint(const CallSite& site, const ScriptModule& module, const VariableTable& table,
                                  const TaintCatalog& catalog = TaintCatalog::defaults(),
                                  Diagnostics* diags = nullptr) {
  const Evaluator ev(module, catalog, &table.page_data, &table.global_data);
  const auto chain = ev.scope_chain(site.functions);
  TaintQuery q;
  for (std::size_t i = 0; i < site.call->arg_count(); ++i) {
    const auto sub = ev.deep_taint(site.call->arg(i), chain.back());
    q.categories |= sub.categories;
    q.saw_unknown |= sub.saw_unknown;
  }
  if (q.categories.empty() && q.saw_unknown)
    warn(diags, "UnknownFlow", "postMessage argument has unresolved provenance",
         table.page_path + ".js:" + std::to_string(site.call->span.begin));
  return q.categories;
}

/// Categories a resolved URL sends through its query string (and path).
inline CategorySet backward_taint(const ResolvedUrl& url) { return url.sent_categories(); }

// ---------------------------------------------------------------------------
// Forward taint (receives)
// ---------------------------------------------------------------------------

namespace detail {

class DetailReadCollector {
 public:
  DetailReadCollector(const std::string& event_param, const TaintCatalog& catalog)
      : catalog_(catalog) {
    aliases_[event_param] = {};
  }

  // Alias discovery runs to a fixpoint so chains like `d = e.detail;
  // msg = d.data` resolve regardless of statement order.
  void collect_aliases(const AstNode& body_root) {
    for (int round = 0; round < 8; ++round) {
      const auto before = aliases_.size();
      alias_pass(body_root);
      if (aliases_.size() == before) break;
    }
  }

  void collect_reads(const AstNode& node) {
    if (node.kind == NodeKind::Call) {
      const auto& callee = node.callee();
      if (auto rel = relative(callee); rel && !rel->empty()) {
        auto receiver = *rel;
        receiver.pop_back();  // method name
        record(receiver);
      }
      if (callee.base()) collect_reads(*callee.base());
      for (std::size_t i = 0; i < node.arg_count(); ++i) collect_reads(node.arg(i));
      return;
    }
    if (node.kind == NodeKind::Identifier || node.kind == NodeKind::MemberPath) {
      if (auto rel = relative(node)) record(*rel);
      if (const auto* base = node.base()) collect_reads(*base);
      return;
    }
    for (const auto& c : node.children) collect_reads(c);
  }

  CategorySet categories() const { return categories_; }
  const std::vector<std::string>& accessed_fields() const { return fields_; }

 private:
  static bool is_iteration_method(const std::string& m) {
    return m == "forEach" || m == "map" || m == "filter" || m == "find" || m == "some" || m == "every" ||
           m == "reduce" || m == "findIndex" || m == "flatMap";
  }

  // Path relative to the event parameter, or nullopt when not rooted there.
  std::optional<std::vector<std::string>> relative(const AstNode& node) const {
    std::vector<std::string> segs;
    if (node.kind == NodeKind::Identifier)
      segs = {node.text};
    else if (node.kind == NodeKind::MemberPath && !node.has_base)
      segs = node.segments;
    else
      return std::nullopt;
    if (segs.empty()) return std::nullopt;
    auto it = aliases_.find(segs[0]);
    if (it == aliases_.end()) return std::nullopt;
    auto out = it->second;
    out.insert(out.end(), segs.begin() + 1, segs.end());
    return out;
  }

  void bind(const std::string& name, const AstNode& value) {
    if (auto rel = relative(value)) {
      if (!aliases_.count(name)) aliases_[name] = *rel;
    }
  }

  void alias_pass(const AstNode& node) {
    if (node.kind == NodeKind::VarDecl && node.init()) bind(node.text, *node.init());
    if (node.kind == NodeKind::Assignment && node.text == "=" && !node.target().has_base &&
        node.target().segments.size() == 1)
      bind(node.target().segments[0], node.value());
    if (node.kind == NodeKind::Call) {
      // e.detail.data.forEach(m => ...) : m aliases the elements
      const auto& callee = node.callee();
      if (auto rel = relative(callee); rel && !rel->empty() && is_iteration_method(rel->back())) {
        auto elems = *rel;
        elems.back() = "*";
        for (std::size_t i = 0; i < node.arg_count(); ++i) {
          const auto& fn = node.arg(i);
          if (fn.kind != NodeKind::FunctionDef || fn.params.empty()) continue;
          const auto& p = rel->back() == "reduce" ? (fn.params.size() > 1 ? fn.params[1] : fn.params[0])
                                                   : fn.params[0];
          if (!aliases_.count(p)) aliases_[p] = elems;
        }
      }
    }
    for (const auto& c : node.children) alias_pass(c);
  }

  void record(const std::vector<std::string>& rel) {
    if (rel.size() < 2 || rel[0] != "detail") return;
    std::string field;
    for (std::size_t i = 1; i < rel.size(); ++i) {
      if (rel[i] == "*") continue;
      if (!field.empty()) field += '.';
      field += rel[i];
    }
    if (field.empty()) return;
    fields_.push_back(field);
    categories_ |= catalog_.classify(field);
  }

  const TaintCatalog& catalog_;
  std::map<std::string, std::vector<std::string>> aliases_;
  CategorySet categories_;
  std::vector<std::string> fields_;
};

}  // namespace detail

/// Categories of `event.detail.*` fields the handler reads, following local
/// aliases of the event and of its detail object.
inline CategorySet forward_taint(const AstNode& handler, const TaintCatalog& catalog = TaintCatalog::defaults()) {
  if (handler.kind != NodeKind::FunctionDef || handler.params.empty()) return {};
  detail::DetailReadCollector collector(handler.params[0], catalog);
  for (const auto& stmt : handler.children) collector.collect_aliases(stmt);
  for (const auto& stmt : handler.children) collector.collect_reads(stmt);
  return collector.categories();
}

// ---------------------------------------------------------------------------
// Whole-package analysis
// ---------------------------------------------------------------------------

struct PageArtifacts {
  std::string page_path;
  std::vector<WebViewElement> webviews;
  std::optional<ScriptModule> script;
  VariableTable table;
  std::vector<std::vector<ResolvedUrl>> urls;  // per web-view
};

struct PackageAnalysis {
  std::string app_id;
  std::string category;
  std::size_t webview_count = 0;
  std::vector<PageArtifacts> pages;
  std::vector<WebViewDomain> domains;  // every resolved web-view domain
  std::vector<FlowFinding> findings;
  Diagnostics diagnostics;

  bool has_webview() const { return webview_count > 0; }
};

namespace detail {

// Id passed to the createWebViewContext call that produced the receiver of
// `site`, when it can be traced to a string literal.
inline std::optional<std::string> webview_context_id(const ScriptModule& module, const AstNode& post_call) {
  auto id_of = [](const AstNode& call) -> std::optional<std::string> {
    if (call.kind != NodeKind::Call || call.callee().segments.empty() ||
        call.callee().segments.back() != "createWebViewContext" || call.arg_count() < 1 ||
        call.arg(0).kind != NodeKind::StringLiteral)
      return std::nullopt;
    return call.arg(0).text;
  };
  const auto& callee = post_call.callee();
  if (const auto* base = callee.base(); base && callee.segments.size() == 1) return id_of(*base);
  if (callee.has_base || callee.segments.size() < 2) return std::nullopt;
  const std::vector<std::string> receiver(callee.segments.begin(), callee.segments.end() - 1);
  std::optional<std::string> found;
  walk(module, [&](const AstNode& n, const std::vector<const AstNode*>&) {
    if (found) return;
    if (n.kind == NodeKind::VarDecl && receiver.size() == 1 && n.text == receiver[0] && n.init())
      found = id_of(*n.init());
    else if (n.kind == NodeKind::Assignment && !n.target().has_base && n.target().segments == receiver)
      found = id_of(n.value());
  });
  return found;
}

inline bool has_webview_context(const ScriptModule& module) {
  return !find_calls(module, {"createWebViewContext"}).empty();
}

inline std::string join_keys(const std::vector<std::string>& keys) {
  std::string out;
  for (const auto& k : keys) {
    if (!out.empty()) out += ',';
    out += k;
  }
  return out;
}

// Findings for one (web-view, channel): one per resolved domain, or a single
// domain-less finding when the web-view never resolved.
inline void emit(PackageAnalysis& out, const PageArtifacts& page, std::size_t wv, Direction dir, Channel ch,
                 const std::map<std::optional<Domain>, CategorySet>& by_domain, const Evidence& ev,
                 Confidence conf) {
  for (const auto& [domain, cats] : by_domain) {
    if (cats.empty()) continue;
    FlowFinding f;
    f.app_id = out.app_id;
    f.page_path = page.page_path;
    f.webview_index = wv;
    f.direction = dir;
    f.channel = ch;
    f.categories = cats;
    f.domain = domain;
    f.evidence = ev;
    f.confidence = conf;
    out.findings.push_back(std::move(f));
  }
}

inline std::set<Domain> webview_domains(const PackageAnalysis& a, const PageArtifacts& page, std::size_t wv) {
  std::set<Domain> out;
  for (const auto& d : a.domains)
    if (d.page_path == page.page_path && d.webview_index == wv) out.insert(d.domain);
  return out;
}

}  // namespace detail

/// Parses every page, builds the variable tables, resolves web-view URLs and
/// produces the package's send/receive findings.
inline PackageAnalysis analyze_package(const MiniProgramPackage& pkg,
                                       const TaintCatalog& catalog = TaintCatalog::defaults()) {
  PackageAnalysis out;
  out.app_id = pkg.app_id;
  out.category = pkg.category;
  out.diagnostics = pkg.diagnostics;

  std::optional<ScriptModule> app_module;
  if (pkg.app_script) {
    app_module = parse_script(*pkg.app_script);
    for (auto d : app_module->diagnostics) {
      d.location = "app.js:" + d.location;
      out.diagnostics.push_back(std::move(d));
    }
  }

  for (const auto& unit : pkg.pages) {
    PageArtifacts page;
    page.page_path = unit.page_path;
    if (unit.template_source) {
      auto doc = parse_wxml(*unit.template_source);
      page.webviews = extract_webviews(doc.root, unit.page_path, &doc.diagnostics);
      for (auto d : doc.diagnostics) {
        d.location = unit.page_path + ".wxml:" + d.location;
        out.diagnostics.push_back(std::move(d));
      }
    }
    if (unit.script_source) {
      page.script = parse_script(*unit.script_source);
      for (auto d : page.script->diagnostics) {
        d.location = unit.page_path + ".js:" + d.location;
        out.diagnostics.push_back(std::move(d));
      }
    }
    out.webview_count += page.webviews.size();
    out.pages.push_back(std::move(page));
  }

  // Tables for all scripted pages together so globalData writes merge.
  std::vector<const ScriptModule*> modules;
  std::vector<std::size_t> module_page;
  for (std::size_t i = 0; i < out.pages.size(); ++i) {
    if (!out.pages[i].script) continue;
    modules.push_back(&*out.pages[i].script);
    module_page.push_back(i);
  }
  auto tables = build_variable_tables(modules, app_module ? &*app_module : nullptr, catalog);
  PathMap globals = tables.empty() ? PathMap{} : tables.front().global_data;
  if (tables.empty() && app_module) {
    const ScriptModule empty;
    globals = build_variable_table(empty, &*app_module, catalog).global_data;
  }
  for (auto& page : out.pages) page.table.global_data = globals;
  for (std::size_t k = 0; k < tables.size(); ++k) out.pages[module_page[k]].table = std::move(tables[k]);
  for (auto& page : out.pages) {
    page.table.app_id = pkg.app_id;
    page.table.page_path = page.page_path;
  }

  // URLs and domains
  for (auto& page : out.pages) {
    page.urls.resize(page.webviews.size());
    for (std::size_t i = 0; i < page.webviews.size(); ++i) {
      page.urls[i] = resolve_webview_url(page.webviews[i], page.table, &out.diagnostics, catalog);
      for (const auto& u : page.urls[i])
        if (u.resolved()) out.domains.push_back({page.page_path, i, extract_domain(u)});
    }
  }
  std::sort(out.domains.begin(), out.domains.end());
  out.domains.erase(std::unique(out.domains.begin(), out.domains.end()), out.domains.end());

  for (const auto& page : out.pages) {
    const std::string wxml_file = page.page_path + ".wxml";
    const std::string js_file = page.page_path + ".js";

    // C#1 via URL parameters
    for (std::size_t i = 0; i < page.webviews.size(); ++i) {
      std::map<std::optional<Domain>, CategorySet> by_domain;
      std::vector<std::string> keys;
      for (const auto& u : page.urls[i]) {
        if (!u.resolved()) continue;
        const auto cats = backward_taint(u);
        if (cats.empty()) continue;
        by_domain[extract_domain(u)] |= cats;
        for (const auto& q : u.query)
          if (q.value.kind == ParamKind::Tainted && std::find(keys.begin(), keys.end(), q.key) == keys.end())
            keys.push_back(q.key);
        if (!u.path_taint.empty() && std::find(keys.begin(), keys.end(), "<path>") == keys.end())
          keys.push_back("<path>");
      }
      detail::emit(out, page, i, Direction::Send, Channel::UrlParam, by_domain,
                   {wxml_file, page.webviews[i].span, "query:" + detail::join_keys(keys)}, Confidence::High);
    }

    if (!page.script) {
      for (std::size_t i = 0; i < page.webviews.size(); ++i)
        if (page.webviews[i].bindmessage_handler)
          warn(&out.diagnostics, "UnresolvedHandler",
               "bindmessage handler '" + *page.webviews[i].bindmessage_handler + "' has no script",
               wxml_file);
      continue;
    }
    const auto& module = *page.script;

    // C#1 via postMessage
    const bool has_ctx = detail::has_webview_context(module);
    for (const auto& site : find_calls(module, {"postMessage"})) {
      if (site.call->callee().segments.size() < 2 && !site.call->callee().has_base) continue;  // bare postMessage()
      if (page.webviews.empty()) {
        warn(&out.diagnostics, "OrphanPostMessage", "postMessage on a page without web-view",
             js_file + ":" + std::to_string(site.call->span.begin));
        continue;
      }
      const auto cats = backward_taint(site, module, page.table, catalog, &out.diagnostics);
      if (cats.empty()) continue;
      std::vector<std::size_t> targets;
      if (auto id = detail::webview_context_id(module, *site.call)) {
        for (std::size_t i = 0; i < page.webviews.size(); ++i)
          if (page.webviews[i].id == *id) targets.push_back(i);
      }
      if (targets.empty())
        for (std::size_t i = 0; i < page.webviews.size(); ++i) targets.push_back(i);
      for (auto i : targets) {
        std::map<std::optional<Domain>, CategorySet> by_domain;
        const auto domains = detail::webview_domains(out, page, i);
        if (domains.empty()) by_domain[std::nullopt] = cats;
        for (const auto& d : domains) by_domain[d] = cats;
        detail::emit(out, page, i, Direction::Send, Channel::PostMessage, by_domain,
                     {js_file, site.call->span, "postMessage"}, has_ctx ? Confidence::High : Confidence::Low);
      }
    }

    // C#2 via bindmessage
    for (std::size_t i = 0; i < page.webviews.size(); ++i) {
      const auto& handler_name = page.webviews[i].bindmessage_handler;
      if (!handler_name) continue;
      const auto* fn = find_function(module, *handler_name);
      if (!fn) {
        warn(&out.diagnostics, "UnresolvedHandler", "bindmessage handler '" + *handler_name + "' not found",
             js_file);
        continue;
      }
      const auto cats = forward_taint(*fn, catalog);
      std::map<std::optional<Domain>, CategorySet> by_domain;
      const auto domains = detail::webview_domains(out, page, i);
      if (domains.empty()) by_domain[std::nullopt] = cats;
      for (const auto& d : domains) by_domain[d] = cats;
      detail::emit(out, page, i, Direction::Receive, Channel::BindMessage, by_domain,
                   {js_file, fn->span, "handler:" + *handler_name}, Confidence::High);
    }
  }

  // Merge duplicates from multiple postMessage sites on the same web-view.
  std::map<std::tuple<std::string, std::size_t, Direction, Channel, std::optional<Domain>>, FlowFinding> merged;
  for (auto& f : out.findings) {
    auto key = std::make_tuple(f.page_path, f.webview_index, f.direction, f.channel, f.domain);
    auto [it, inserted] = merged.try_emplace(key, f);
    if (!inserted) {
      it->second.categories |= f.categories;
      if (f.confidence == Confidence::High) it->second.confidence = Confidence::High;
      it->second.evidence = std::min(it->second.evidence, f.evidence);
    }
  }
  out.findings.clear();
  for (auto& [k, f] : merged) out.findings.push_back(std::move(f));
  std::sort(out.findings.begin(), out.findings.end());
  return out;
}

}  // namespace cmcs
