#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "cmcs/cmcs.hpp"
#include "fixtures.hpp"
#include "url_oracle.hpp"

namespace cmcs::testing {
namespace {

using SC = SensitiveCategory;

const char* kSenderWxml =
    "<view>\n  <button open-type=\"getPhoneNumber\" bindgetphonenumber=\"getPhoneNumber\">go</button>\n"
    "  <web-view src=\"{{host}}\"></web-view>\n</view>\n";

// ---------------------------------------------------------------------------
// package loading

TEST(Package, SmallestWellFormedPackage) {
  TempDir dir;
  write_file(dir.path() / "app.json", R"({"pages":["pages/index/index"]})");
  write_file(dir.path() / "pages/index/index.wxml", "<view/>");
  write_file(dir.path() / "pages/index/index.js", "Page({})");
  const auto pkg = load_package(dir.path());
  ASSERT_EQ(pkg.pages.size(), 1u);
  EXPECT_EQ(pkg.pages[0].page_path, "pages/index/index");
  EXPECT_EQ(pkg.pages[0].template_source, "<view/>");
  EXPECT_EQ(pkg.pages[0].script_source, "Page({})");
  EXPECT_EQ(pkg.app_id, dir.path().filename().string());
  EXPECT_EQ(pkg.category, "uncategorized");
  EXPECT_FALSE(pkg.app_script);
}

TEST(Package, TemplateOnlyPage) {
  TempDir dir;
  write_package(dir.path(), {"wx1", "", {{"pages/a/a", "<view>hi</view>", ""}}, ""});
  const auto pkg = load_package(dir.path());
  ASSERT_EQ(pkg.pages.size(), 1u);
  EXPECT_TRUE(pkg.pages[0].template_source);
  EXPECT_FALSE(pkg.pages[0].script_source);
  EXPECT_EQ(pkg.app_id, "wx1");
}

TEST(Package, SenderSample) {
  const auto pkg = load_package(samples_dir() / "running_example" / "sender_a");
  ASSERT_EQ(pkg.pages.size(), 1u);
  ASSERT_TRUE(pkg.pages[0].template_source && pkg.pages[0].script_source);
  EXPECT_FALSE(pkg.pages[0].template_source->empty());
  EXPECT_FALSE(pkg.pages[0].script_source->empty());
  EXPECT_TRUE(has_webview(pkg));
}

TEST(Package, ManifestErrors) {
  TempDir dir;
  auto code_of = [&](const std::string& manifest) {
    if (!manifest.empty()) write_file(dir.path() / "app.json", manifest);
    try {
      load_package(dir.path());
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;  // "no error" marker
  };
  EXPECT_EQ(code_of(""), ErrorCode::MissingManifest);
  EXPECT_EQ(code_of("{"), ErrorCode::MalformedManifest);
  EXPECT_EQ(code_of(R"({"window":{}})"), ErrorCode::MalformedManifest);
  EXPECT_EQ(code_of(R"({"pages":"pages/a/a"})"), ErrorCode::MalformedManifest);
  EXPECT_EQ(code_of(R"({"pages":[]})"), ErrorCode::EmptyPackage);
}

TEST(Package, BrokenFilesBecomeAbsentSourcesWithWarnings) {
  TempDir dir;
  write_file(dir.path() / "app.json", R"({"pages":["pages/a/a","pages/b/b","../../etc/passwd"]})");
  write_file(dir.path() / "pages/a/a.wxml", std::string("<view>\xff\xfe</view>"));
  write_file(dir.path() / "pages/a/a.js", "Page({})");
  const auto pkg = load_package(dir.path());
  ASSERT_EQ(pkg.pages.size(), 3u);
  EXPECT_FALSE(pkg.pages[0].template_source);
  EXPECT_TRUE(pkg.pages[0].script_source);
  EXPECT_FALSE(pkg.pages[1].template_source || pkg.pages[1].script_source);
  std::set<std::string> codes;
  for (const auto& d : pkg.diagnostics) codes.insert(d.code);
  EXPECT_TRUE(codes.count("MissingPageFiles"));
  EXPECT_TRUE(codes.count("PathEscapesRoot"));
  EXPECT_GE(codes.size(), 3u);  // plus the non-UTF-8 template
}

TEST(Package, DeterministicAndManifestRoundTrip) {
  TempDir dir;
  const std::vector<std::string> order = {"pages/z/z", "pages/a/a", "pages/m/m"};
  PackageSpec spec{"wx_rt", "tools", {}, "App({})"};
  for (const auto& p : order) spec.pages.push_back({p, "<view/>", ""});
  write_package(dir.path(), spec);
  const auto a = load_package(dir.path());
  const auto b = load_package(dir.path());
  EXPECT_EQ(manifest_pages(a), nlohmann::json(order));
  EXPECT_EQ(manifest_pages(a), manifest_pages(b));
  ASSERT_EQ(a.pages.size(), b.pages.size());
  for (std::size_t i = 0; i < a.pages.size(); ++i) {
    EXPECT_EQ(a.pages[i].template_source, b.pages[i].template_source);
    EXPECT_EQ(a.pages[i].script_source, b.pages[i].script_source);
  }
  EXPECT_EQ(a.app_script, b.app_script);
  EXPECT_EQ(a.diagnostics, b.diagnostics);
}

TEST(Package, HasWebviewAgreesWithTagScan) {
  TempDir dir;
  write_package(dir.path() / "none", {"n", "", {{"pages/a/a", "<view>hello</view>", ""}}, ""});
  write_package(dir.path() / "one", {"o", "", {{"pages/a/a", "<view/>", ""},
                                               {"pages/b/b", "<web-view src=\"https://a.example/x\"/>", ""},
                                               {"pages/c/c", "<text>web-view</text>", ""}}, ""});
  for (const auto* name : {"none", "one"}) {
    const auto pkg = load_package(dir.path() / name);
    bool grep = false;
    std::size_t total = 0;
    for (const auto& p : pkg.pages) {
      grep |= p.template_source && p.template_source->find("<web-view") != std::string::npos;
      total += count_webviews(p);
    }
    EXPECT_EQ(has_webview(pkg), grep) << name;
    EXPECT_EQ(has_webview(pkg), total > 0) << name;
  }
}

// ---------------------------------------------------------------------------
// WXML

TEST(Wxml, MinimalNesting) {
  const auto doc = parse_wxml("<view><web-view src=\"https://a.example\"/></view>");
  const auto top = doc.root.elements();
  ASSERT_EQ(top.size(), 1u);
  EXPECT_EQ(top[0]->tag, "view");
  const auto kids = top[0]->elements();
  ASSERT_EQ(kids.size(), 1u);
  EXPECT_EQ(kids[0]->tag, "web-view");
  EXPECT_EQ(*kids[0]->attribute("src"), "https://a.example");
}

TEST(Wxml, SrcRawValuesPreserved) {
  auto wv = extract_webviews(parse_wxml(kSenderWxml).root, "p");
  ASSERT_EQ(wv.size(), 1u);
  EXPECT_EQ(wv[0].src_raw, "{{host}}");
  wv = extract_webviews(parse_wxml("<web-view src=\"https://a.example/p?u={{uid}}\">").root, "p");
  ASSERT_EQ(wv.size(), 1u);
  EXPECT_EQ(wv[0].src_raw, "https://a.example/p?u={{uid}}");
}

TEST(Wxml, WebviewExtraction) {
  EXPECT_TRUE(extract_webviews(parse_wxml("<view><text>x</text></view>").root, "p").empty());
  auto wv = extract_webviews(
      parse_wxml("<web-view src=\"https://h5.example.com/index.html\" bindmessage=\"handleMsg\"></web-view>").root, "p");
  ASSERT_EQ(wv.size(), 1u);
  EXPECT_EQ(wv[0].bindmessage_handler, "handleMsg");
  wv = extract_webviews(
      parse_wxml("<view><web-view id=a src='x'/></view><block><web-view id=b src=\"{{y}}\" bindload=\"onLoad\"/></block>")
          .root,
      "p");
  ASSERT_EQ(wv.size(), 2u);
  EXPECT_EQ(wv[0].element_index, 0u);
  EXPECT_EQ(wv[1].element_index, 1u);
  EXPECT_EQ(wv[0].id, "a");
  EXPECT_EQ(wv[1].id, "b");
  EXPECT_EQ(wv[1].bindload_handler, "onLoad");
}

TEST(Wxml, ForgivingParse) {
  const auto doc = parse_wxml("<view class=box><image src=a.png><input disabled><text>a < b</text></view></span>");
  const auto top = doc.root.elements();
  ASSERT_FALSE(top.empty());
  EXPECT_EQ(top[0]->tag, "view");
  EXPECT_EQ(*top[0]->attribute("class"), "box");
}

TEST(Binding, Kinds) {
  auto b = parse_binding("https://h5.example.com/page");
  EXPECT_EQ(b.kind, BindingKind::Literal);
  EXPECT_TRUE(b.variable_paths.empty());

  b = parse_binding("{{url}}");
  EXPECT_EQ(b.kind, BindingKind::Bound);
  ASSERT_EQ(b.variable_paths.size(), 1u);
  EXPECT_EQ(b.variable_paths[0].path, "url");

  b = parse_binding("https://a.example/p?n={{user.phone}}");
  EXPECT_EQ(b.kind, BindingKind::Mixed);
  ASSERT_EQ(b.variable_paths.size(), 1u);
  EXPECT_EQ(b.variable_paths[0].path, "user.phone");
  EXPECT_EQ(b.literal_parts.size(), 2u);

  EXPECT_EQ(parse_binding("").kind, BindingKind::Absent);

  b = parse_binding("{{ list[0].url }}");
  ASSERT_EQ(b.variable_paths.size(), 1u);
  EXPECT_EQ(b.variable_paths[0].path, "list.0.url");

  b = parse_binding("{{ok ? a : b}}");
  ASSERT_EQ(b.variable_paths.size(), 1u);
  EXPECT_TRUE(b.variable_paths[0].opaque);
}

TEST(Binding, UnbalancedMustacheIsLiteralWithWarning) {
  Diagnostics diags;
  const auto b = parse_binding("https://a.example/{{x", &diags);
  EXPECT_EQ(b.kind, BindingKind::Literal);
  EXPECT_TRUE(b.variable_paths.empty());
  EXPECT_FALSE(diags.empty());
}

TEST(Binding, RoundTripWithFreshMarkers) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> lits = {"https://a.example/", "?x=", "&y=", "/p", "", "#/r?q="};
  const std::vector<std::string> paths = {"url", "user.phone", "a.b.c", "list[1].u"};
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng() % 4;
    std::string raw = lits[rng() % lits.size()], marked = raw;
    for (std::size_t i = 0; i < n; ++i) {
      const auto lit = lits[rng() % lits.size()];
      raw += "{{" + paths[rng() % paths.size()] + "}}" + lit;
      marked += "{{m" + std::to_string(trial) + "_" + std::to_string(i) + "}}" + lit;
    }
    const auto a = parse_binding(raw);
    const auto b = parse_binding(marked);
    EXPECT_EQ(a.kind, b.kind) << raw;
    EXPECT_EQ(a.variable_paths.size(), n) << raw;
    EXPECT_EQ(b.variable_paths.size(), n) << marked;
    if (n == 0) EXPECT_TRUE(a.kind == BindingKind::Literal || a.kind == BindingKind::Absent) << raw;
  }
}

TEST(Binding, LiteralWithoutBracesHasNoVariables) {
  std::mt19937_64 rng(11);
  const std::string alphabet = "abc/:?&=#.{}% 0123456789";
  for (int trial = 0; trial < 500; ++trial) {
    std::string s;
    const auto len = rng() % 30;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[rng() % alphabet.size()];
    if (s.find("{{") != std::string::npos) continue;
    EXPECT_TRUE(parse_binding(s).variable_paths.empty()) << s;
  }
}

// ---------------------------------------------------------------------------
// JS front end

std::vector<const AstNode*> all_nodes(const ScriptModule& m) {
  std::vector<const AstNode*> out;
  walk(m, [&](const AstNode& n, const std::vector<const AstNode*>&) { out.push_back(&n); });
  return out;
}

TEST(Script, PageRegistration) {
  const auto m = parse_script("Page({ data: { url: \"https://a.example\" } })");
  ASSERT_EQ(m.items.size(), 1u);
  const auto& call = m.items[0];
  EXPECT_EQ(call.kind, NodeKind::Call);
  EXPECT_EQ(call.callee().segments, std::vector<std::string>{"Page"});
  ASSERT_EQ(call.arg_count(), 1u);
  EXPECT_EQ(call.arg(0).kind, NodeKind::ObjectLiteral);
  EXPECT_NE(registration_object(m, "Page"), nullptr);
}

TEST(Script, SenderAssignmentIsConcatenationWithPhoneSource) {
  const auto m = parse_script(
      "Page({ getPhoneNumber(args) { let host; host = \"https://h5.example.com/index.html?number=\" + "
      "args.detail.userInfo.phonenumber; this.setData({ host }); } })");
  const AstNode* assign = nullptr;
  for (const auto* n : all_nodes(m))
    if (n->kind == NodeKind::Assignment) assign = n;
  ASSERT_NE(assign, nullptr);
  EXPECT_EQ(assign->value().kind, NodeKind::TemplateConcat);
  bool found = false;
  for (const auto& c : assign->value().children)
    found |= c.kind == NodeKind::MemberPath &&
             c.segments == std::vector<std::string>{"args", "detail", "userInfo", "phonenumber"};
  EXPECT_TRUE(found);
}

TEST(Script, ClassBecomesOpaqueAndParsingContinues) {
  const auto m = parse_script("class Foo extends Bar { go() { return 1; } }\nconst x = 'a';\nPage({})\n");
  ASSERT_EQ(m.items.size(), 3u);
  EXPECT_EQ(m.items[0].kind, NodeKind::Opaque);
  EXPECT_EQ(m.items[1].kind, NodeKind::VarDecl);
  EXPECT_EQ(m.items[1].text, "x");
  EXPECT_EQ(m.items[2].kind, NodeKind::Call);
}

TEST(Script, FindCalls) {
  EXPECT_EQ(find_calls(parse_script("ctx.postMessage({data: x})"), {"postMessage"}).size(), 1u);
  EXPECT_TRUE(find_calls(parse_script("wx.request({})"), {"createWebViewContext"}).empty());
  const auto m = parse_script("const a = wx.createWebViewContext('wv');\nfunction f() { const b = wx.createWebViewContext('wv'); }");
  const auto sites = find_calls(m, {"createWebViewContext"});
  ASSERT_EQ(sites.size(), 2u);
  EXPECT_LT(sites[0].call->span.begin, sites[1].call->span.begin);
  EXPECT_TRUE(sites[0].functions.empty());
  EXPECT_EQ(sites[1].functions.size(), 1u);
}

TEST(Script, FindFunctionPriority) {
  const auto m = parse_script(
      "function handleMsg(e) { return 1; }\nPage({ handleMsg(event) { console.log(event.detail.phone); } })");
  const auto* fn = find_function(m, "handleMsg");
  ASSERT_NE(fn, nullptr);
  ASSERT_EQ(fn->params.size(), 1u);
  EXPECT_EQ(fn->params[0], "event");
  EXPECT_EQ(find_function(m, "missing"), nullptr);
  const auto top = parse_script("function onMsg(e) {}\nPage({})");
  ASSERT_NE(find_function(top, "onMsg"), nullptr);
}

TEST(Script, FindCallsEqualsExhaustiveWalk) {
  const std::string src =
      "const ctx = wx.createWebViewContext('a');\n"
      "Page({ go() { ctx.postMessage({ data: 1 }); that.ctx.postMessage(2); if (x) { postMessage(3); } },\n"
      "  other: function () { [1].forEach(() => wx.createWebViewContext('b').postMessage({})); } })\n";
  const auto m = parse_script(src);
  for (const std::vector<std::string> suffix : {std::vector<std::string>{"postMessage"},
                                                std::vector<std::string>{"createWebViewContext"},
                                                std::vector<std::string>{"ctx", "postMessage"}}) {
    std::vector<const AstNode*> oracle;
    // independent recursive walk over the raw tree
    std::function<void(const AstNode&)> visit = [&](const AstNode& n) {
      if (n.kind == NodeKind::Call) {
        const auto& segs = n.callee().segments;
        if (segs.size() >= suffix.size() && std::equal(suffix.rbegin(), suffix.rend(), segs.rbegin()))
          oracle.push_back(&n);
      }
      for (const auto& c : n.children) visit(c);
    };
    for (const auto& item : m.items) visit(item);
    std::vector<const AstNode*> got;
    for (const auto& s : find_calls(m, suffix)) got.push_back(s.call);
    EXPECT_EQ(got, oracle);
  }
  EXPECT_EQ(find_calls(m, {"postMessage"}).size(), 4u);
}

TEST(Script, TotalOnArbitraryInput) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> toks = {"Page", "(", ")", "{", "}", "[", "]", "=>", "function", "class", "'s'",
                                         "`t${", "x", ".", ",", ";", "=", "+", "/re/", "//c\n", "/*", "?", ":",
                                         "async", "await", "new", "...", "\"u", "\n", "0x1F", "@"};
  for (int trial = 0; trial < 300; ++trial) {
    std::string src;
    const auto n = rng() % 60;
    for (std::size_t i = 0; i < n; ++i) src += toks[rng() % toks.size()] + " ";
    EXPECT_NO_THROW({
      const auto a = parse_script(src);
      const auto b = parse_script(src);
      EXPECT_EQ(a.items.size(), b.items.size());
    }) << src;
  }
}

// ---------------------------------------------------------------------------
// state model

VariableTable table_of(const std::string& page_js, const std::string& app_js = "") {
  const auto page = parse_script(page_js);
  if (app_js.empty()) return build_variable_table(page, nullptr);
  const auto app = parse_script(app_js);
  return build_variable_table(page, &app);
}

TEST(StateModel, GlobalDataIndirection) {
  const auto t = table_of("Page({ data: { url: \"\" }, onLoad() { this.setData({ url: getApp().globalData.baseUrl }); } })",
                          "App({ globalData: { baseUrl: \"https://h5.example.com\" } })");
  const auto v = resolve_variable(t, "url");
  EXPECT_TRUE(v.contains(AbstractValue::constant("https://h5.example.com")));
  EXPECT_TRUE(v.contains(AbstractValue::constant("")));
  EXPECT_FALSE(v.has_unknown());
}

TEST(StateModel, EmptyModuleResolvesToUnknown) {
  const auto t = table_of("");
  EXPECT_TRUE(t.page_data.empty());
  EXPECT_TRUE(t.global_data.empty());
  EXPECT_EQ(resolve_variable(t, "anything"), ValueSet::unknown());
  EXPECT_EQ(resolve_variable(t, "nonexistent.deep"), ValueSet::unknown());
}

TEST(StateModel, SetDataWritesUnion) {
  const auto t = table_of(
      "Page({ a() { this.setData({ url: \"https://a.example\" }); }, b() { this.setData({ url: \"https://b.example\" }); } })");
  auto consts = resolve_variable(t, "url").constants();
  std::sort(consts.begin(), consts.end());
  EXPECT_EQ(consts, (std::vector<std::string>{"https://a.example", "https://b.example"}));
}

TEST(StateModel, ObjectLiteralSubpaths) {
  const auto t = table_of("Page({ data: { item: { u: \"https://c.example\" }, list: [{ url: 'https://d.example' }] } })");
  EXPECT_EQ(resolve_variable(t, "item.u"), ValueSet::constant("https://c.example"));
  EXPECT_EQ(resolve_variable(t, "list[0].url"), ValueSet::constant("https://d.example"));
}

TEST(StateModel, PhoneSourceBecomesTaintedSlot) {
  const auto pkg = load_package(samples_dir() / "running_example" / "sender_a");
  const auto t = table_of(*pkg.pages[0].script_source);
  const auto v = resolve_variable(t, "host");
  EXPECT_EQ(v.taint(), CategorySet{SC::PhoneNumber});
  bool templ = false;
  for (const auto& x : v) templ |= x.describe() == "https://h5.example.com/index.html?number={{PhoneNumber}}";
  EXPECT_TRUE(templ);
}

TEST(StateModel, CapsOverflowToUnknown) {
  ValueSet s;
  for (int i = 0; i < 40; ++i) s.insert(AbstractValue::constant("v" + std::to_string(i)));
  EXPECT_LE(s.size(), ValueSet::kMaxValues + 1);
  EXPECT_TRUE(s.has_unknown());
}

TEST(StateModel, NeverEmptyAndMonotoneUnderAddedStatements) {
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const auto full = generate_url_program(seed);
    auto prefix = full;
    prefix.handlers.pop_back();
    const auto big = table_of(full.page_js(), full.app_js());
    const auto small = table_of(prefix.page_js(), prefix.app_js());
    for (const auto& [key, values] : small.page_data) {
      const auto grown = resolve_variable(big, key);
      for (const auto& v : values) EXPECT_TRUE(grown.contains(v)) << "seed " << seed << " key " << key;
    }
    for (const auto* k : {"url1", "base", "nope", "cfg.origin", "a.b.c"}) EXPECT_FALSE(resolve_variable(big, k).empty());
  }
}

// One write per handler, no launch-time overwrite, and every key an
// expression reads is written only by read-free expressions. Each key is then
// independently controllable, which is the shape in which a flow-insensitive,
// non-relational table is exact.
UrlProgram independent_form(const UrlProgram& p) {
  std::vector<UrlStmt> stmts;
  for (const auto& h : p.handlers)
    for (const auto& s : h.body) {
      if (s.kind == UrlStmt::Let) continue;
      if (std::any_of(s.value.begin(), s.value.end(), [](const UrlAtom& a) { return a.kind == UrlAtom::Local; }))
        continue;
      stmts.push_back(s);
    }
  auto key_of = [](UrlStmt::Kind k, const std::string& t) { return std::to_string(k == UrlStmt::SetGlobal) + t; };
  auto reads_of = [&](const UrlStmt& s) {
    std::vector<std::string> out;
    for (const auto& a : s.value)
      if (a.kind == UrlAtom::Data || a.kind == UrlAtom::Global)
        out.push_back(key_of(a.kind == UrlAtom::Global ? UrlStmt::SetGlobal : UrlStmt::SetData, a.text));
    return out;
  };
  for (bool changed = true; changed;) {
    changed = false;
    std::set<std::string> derived;  // keys written by an expression with reads
    for (const auto& s : stmts)
      if (!reads_of(s).empty()) derived.insert(key_of(s.kind, s.target));
    std::vector<std::string> seen;
    for (auto it = stmts.begin(); it != stmts.end();) {
      const auto r = reads_of(*it);
      std::set<std::string> uniq(r.begin(), r.end());
      const bool bad = uniq.size() != r.size() ||
                       std::any_of(r.begin(), r.end(), [&](const std::string& k) { return derived.count(k); });
      if (bad) {
        it = stmts.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  UrlProgram out = p;
  out.on_launch.clear();
  out.handlers.clear();
  for (const auto& s : stmts) out.handlers.push_back({"w" + std::to_string(out.handlers.size()), {s}});
  return out;
}

std::set<std::string> concrete_constants(const std::set<std::string>& values) {
  std::set<std::string> out;
  for (const auto& v : values)
    if (v.find(kConcretePhone) == std::string::npos) out.insert(v);
  return out;
}

TEST(StateModel, TableCoversReachableConstants) {
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const auto p = generate_url_program(seed);
    const auto t = table_of(p.page_js(), p.app_js());
    for (const auto& [key, values] : reachable_data_values(p)) {
      const auto all = resolve_variable(t, key);
      if (all.has_unknown()) continue;  // Unknown stands for every value
      const auto consts = all.constants();
      const std::set<std::string> stat(consts.begin(), consts.end());
      const auto concrete = concrete_constants(values);
      EXPECT_TRUE(std::includes(stat.begin(), stat.end(), concrete.begin(), concrete.end()))
          << "seed " << seed << " key " << key;
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000u);
}

TEST(StateModel, TableHasNoUnreachableConstantsInIndependentForm) {
  std::size_t checked = 0;
  for (std::uint64_t seed = 1; seed <= 300; ++seed) {
    const auto p = independent_form(generate_url_program(seed));
    if (p.handlers.size() > 8) continue;  // keeps the state search small
    const auto t = table_of(p.page_js(), p.app_js());
    for (const auto& [key, values] : reachable_data_values(p)) {
      const auto all = resolve_variable(t, key);
      if (all.has_unknown()) continue;
      const auto consts = all.constants();
      const std::set<std::string> stat(consts.begin(), consts.end());
      EXPECT_EQ(stat, concrete_constants(values)) << "seed " << seed << " key " << key << "\n" << p.page_js();
      ++checked;
    }
  }
  EXPECT_GT(checked, 500u);
}

// ---------------------------------------------------------------------------
// taint catalog

TEST(Catalog, ClassifyExamples) {
  EXPECT_EQ(classify_sensitive("phonenumber"), CategorySet{SC::PhoneNumber});
  EXPECT_EQ(classify_sensitive("banner_color"), CategorySet{});
  EXPECT_EQ(classify_sensitive("banner_id"), CategorySet{});
  EXPECT_EQ(classify_sensitive("headimgurl"), CategorySet{SC::Avatar});
  EXPECT_EQ(classify_sensitive("latitude"), CategorySet{SC::Latitude});
  EXPECT_EQ(classify_sensitive("res.longitude"), CategorySet{SC::Longitude});
  EXPECT_EQ(classify_sensitive("userInfo.nickName"), CategorySet{SC::Nickname});
  EXPECT_EQ(classify_sensitive("user_id"), CategorySet{SC::UserId});
  EXPECT_EQ(TaintCatalog::defaults().api_categories({"wx", "getLocation"}), (CategorySet{SC::Latitude, SC::Longitude}));
  EXPECT_EQ(classify_sensitive("args.detail.userInfo.phonenumber"), CategorySet{SC::PhoneNumber});
}

TEST(Catalog, CaseInsensitiveAndDeterministic) {
  for (const auto* name : {"PhoneNumber", "HEADIMGURL", "Nick_Name", "OpenId", "lng", "Device_ID"}) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    EXPECT_EQ(classify_sensitive(name), classify_sensitive(lower)) << name;
    EXPECT_EQ(classify_sensitive(name), classify_sensitive(name));
    EXPECT_FALSE(classify_sensitive(name).empty()) << name;
  }
}

TEST(Catalog, ShippedConfigEqualsBuiltinDefaults) {
  const auto shipped = TaintCatalog::load(std::filesystem::path(CMCS_DATA_DIR) / "taint_catalog.conf");
  const auto& builtin = TaintCatalog::defaults();
  EXPECT_EQ(shipped.keywords(), builtin.keywords());
  ASSERT_EQ(shipped.api_sources().size(), builtin.api_sources().size());
  for (std::size_t i = 0; i < builtin.api_sources().size(); ++i) {
    EXPECT_EQ(shipped.api_sources()[i].suffix, builtin.api_sources()[i].suffix);
    EXPECT_EQ(shipped.api_sources()[i].categories, builtin.api_sources()[i].categories);
  }
}

TEST(Catalog, ConfigErrorsAndCustomRules) {
  EXPECT_THROW(TaintCatalog::parse("phone"), Error);
  EXPECT_THROW(TaintCatalog::parse("phone=Telephone"), Error);
  const auto c = TaintCatalog::parse("# custom\nzip=Latitude\napi:getCity=Latitude,Longitude\n");
  EXPECT_EQ(c.classify("user_zip"), CategorySet{SC::Latitude});
  EXPECT_EQ(c.api_categories({"wx", "getCity"}), (CategorySet{SC::Latitude, SC::Longitude}));
  EXPECT_TRUE(c.classify("phone").empty());
}

}  // namespace
}  // namespace cmcs::testing
