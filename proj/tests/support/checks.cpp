#include "checks.hpp"

#include "cmcs/cmcs.hpp"

namespace cmcs::testing {

UrlCheck check_url_program(const UrlProgram& p) {
  MiniProgramPackage pkg;
  pkg.app_id = "wx_oracle";
  pkg.app_script = p.app_js();
  pkg.pages.push_back({"pages/index/index", p.wxml(), p.page_js()});
  const auto analysis = analyze_package(pkg);

  std::vector<ResolvedUrl> urls;
  for (const auto& page : analysis.pages)
    for (const auto& per_wv : page.urls) urls.insert(urls.end(), per_wv.begin(), per_wv.end());

  UrlCheck out;
  for (const auto& u : urls)
    if (u.resolved()) out.static_hosts.insert(u.host);
  const auto concrete = concrete_srcs(p);
  out.concrete = concrete.size();
  for (const auto& c : concrete) {
    const auto host = concrete_host(c);
    if (host.empty()) {
      out.not_urls.push_back(c);
      continue;
    }
    out.concrete_hosts.insert(host);
    bool matched = false;
    for (const auto& u : urls)
      if (u.resolved() && u.host == host && template_matches(u.display, c)) {
        matched = true;
        break;
      }
    if (!matched) out.missed.push_back(c);
  }
  return out;
}

TaintResult run_taint_fixture(const TaintFixture& fx) {
  TaintResult out;
  const auto module = parse_script(fx.page_js);
  for (const auto& d : module.diagnostics)
    if (d.severity != Severity::Info) out.parsed_clean = false;
  const auto table = build_variable_table(module, nullptr);
  for (const auto& site : find_calls(module, {"postMessage"})) {
    out.backward |= backward_taint(site, module, table);
    ++out.sinks;
  }
  if (const auto* fn = find_function(module, fx.handler)) out.forward = forward_taint(*fn);
  return out;
}

std::vector<std::set<std::string>> visible_per_read(const std::string& script, const std::string& mode) {
  HostEnv env(*parse_isolation_mode(mode));
  run_scenario(env, parse_scenario(script));
  std::vector<std::set<std::string>> out;
  for (const auto& e : env.trace()) {
    if (e.event != "read") continue;
    std::set<std::string> seen;
    for (const auto& c : e.fields.at("cookies"))
      seen.insert(c.at("domain").get<std::string>() + "|" + c.at("name").get<std::string>() + "=" +
                  c.at("value").get<std::string>());
    out.push_back(std::move(seen));
  }
  return out;
}

bool visibility_monotone(const std::string& script, std::string* why) {
  const auto shared = visible_per_read(script, "shared");
  const auto consent = visible_per_read(script, "consent");
  const auto isolated = visible_per_read(script, "isolated");
  if (shared.size() != consent.size() || shared.size() != isolated.size()) {
    if (why) *why = "read counts differ between modes";
    return false;
  }
  for (std::size_t i = 0; i < shared.size(); ++i) {
    const bool ok = std::includes(consent[i].begin(), consent[i].end(), isolated[i].begin(), isolated[i].end()) &&
                    std::includes(shared[i].begin(), shared[i].end(), consent[i].begin(), consent[i].end());
    if (!ok) {
      if (why) *why = "read #" + std::to_string(i) + " is not monotone";
      return false;
    }
  }
  return true;
}

}  // namespace cmcs::testing
