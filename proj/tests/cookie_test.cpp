#include <gtest/gtest.h>

#include "checks.hpp"
#include "cmcs/cmcs.hpp"
#include "cookie_gen.hpp"
#include "fixtures.hpp"

namespace cmcs::testing {
namespace {

CookieRecord cookie(std::string name, std::string value, std::string domain = {}, std::optional<Tick> expires = {}) {
  CookieRecord r;
  r.name = std::move(name);
  r.value = std::move(value);
  r.domain = std::move(domain);
  r.expires = expires;
  return r;
}

std::set<std::string> names(const std::vector<CookieRecord>& v) {
  std::set<std::string> out;
  for (const auto& r : v) out.insert(r.name + "=" + r.value);
  return out;
}

std::size_t collusion_events(const HostEnv& env) {
  std::size_t n = 0;
  for (const auto& e : env.trace()) n += e.event == "collusion_demonstrated";
  return n;
}

std::string sample(const std::string& name) {
  std::string body;
  detail::read_text_file(samples_dir() / "scenarios" / name, body);
  return body;
}

TEST(CookieSim, StoreKeyPerMode) {
  HostEnv shared(IsolationMode::SharedGlobal);
  HostEnv isolated(IsolationMode::IsolatedPerApp);
  HostEnv consent(IsolationMode::ConsentGated);
  const auto key_a = shared.open_webview("A", "https://a.host.com/").store_key;
  EXPECT_EQ(key_a, shared.open_webview("B", "https://b.host.com/").store_key);
  EXPECT_EQ(isolated.open_webview("A", "https://a.host.com/").store_key, "A");
  EXPECT_EQ(isolated.open_webview("B", "https://a.host.com/").store_key, "B");
  EXPECT_EQ(consent.open_webview("A", "https://a.host.com/").store_key, key_a);
}

TEST(CookieSim, OpenRejectsUrlsWithoutSchemeOrHost) {
  HostEnv env;
  for (const char* bad : {"a.host.com/x", "/relative", "https://", "{{x}}"}) {
    try {
      env.open_webview("A", bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::MalformedUrl) << bad;
    }
  }
}

TEST(CookieSim, SharedVisibilityFollowsDomain) {
  HostEnv env(IsolationMode::SharedGlobal);
  env.open_webview("A", "https://a.host.com/");
  ASSERT_TRUE(env.set_cookie("A", cookie("phone", "P", "a.host.com")));
  env.close_app("A");
  env.open_webview("B", "https://b.host.com/");
  EXPECT_TRUE(env.get_cookies("B").empty());
  EXPECT_FALSE(env.collusion_demonstrated());
  env.open_webview("B", "https://a.host.com/");
  EXPECT_EQ(names(env.get_cookies("B")), std::set<std::string>{"phone=P"});
  EXPECT_TRUE(env.collusion_demonstrated());
}

TEST(CookieSim, IsolatedNeverSeesOtherApps) {
  HostEnv env(IsolationMode::IsolatedPerApp);
  env.open_webview("A", "https://a.host.com/");
  env.set_cookie("A", cookie("phone", "P", "a.host.com"));
  env.set_cookie("A", cookie("wide", "W", ".host.com"));
  env.close_app("A");
  for (const char* url : {"https://b.host.com/", "https://a.host.com/", "https://host.com/"}) {
    env.open_webview("B", url);
    EXPECT_TRUE(env.get_cookies("B").empty()) << url;
  }
  EXPECT_FALSE(env.collusion_demonstrated());
  env.open_webview("A", "https://a.host.com/");
  EXPECT_EQ(names(env.get_cookies("A")), (std::set<std::string>{"phone=P", "wide=W"}));
}

TEST(CookieSim, RejectsForeignDomain) {
  HostEnv env;
  env.open_webview("A", "https://a.host.com/");
  EXPECT_FALSE(env.set_cookie("A", cookie("x", "1", "other.org")));
  EXPECT_FALSE(env.set_cookie("A", cookie("x", "1", "b.host.com")));
  EXPECT_EQ(env.jar().size(), 0u);
  EXPECT_EQ(env.trace().back().event, "rejected");
}

TEST(CookieSim, ExpiryIsInclusiveOfTheExpiryTick) {
  HostEnv env;
  env.open_webview("A", "https://a.host.com/");
  env.set_cookie("A", cookie("t", "1", {}, 10));
  env.set_cookie("A", cookie("s", "2"));
  env.advance_clock(10);
  EXPECT_EQ(names(env.get_cookies("A")), (std::set<std::string>{"s=2", "t=1"}));
  env.advance_clock(1);
  EXPECT_EQ(env.now(), 11u);
  EXPECT_EQ(names(env.get_cookies("A")), std::set<std::string>{"s=2"});
}

TEST(CookieSim, AttackScriptPerMode) {
  const auto steps = parse_scenario(sample("attack.cmcs"));
  const std::map<IsolationMode, bool> want = {{IsolationMode::SharedGlobal, true},
                                              {IsolationMode::IsolatedPerApp, false},
                                              {IsolationMode::ConsentGated, false}};
  for (const auto& [mode, demonstrated] : want) {
    HostEnv env(mode);
    run_scenario(env, steps);
    EXPECT_EQ(env.collusion_demonstrated(), demonstrated) << to_string(mode);
    EXPECT_EQ(collusion_events(env) > 0, demonstrated) << to_string(mode);
    if (demonstrated) {
      // the read precedes its collusion event
      ASSERT_GE(env.trace().size(), 2u);
      EXPECT_EQ(env.trace().back().event, "collusion_demonstrated");
      EXPECT_EQ(env.trace().back().fields["reader"], "B");
      EXPECT_EQ(env.trace().back().fields["writer"], "A");
    }
  }
}

TEST(CookieSim, ConsentGrantUnlocksReads) {
  const auto steps = parse_scenario(sample("attack_with_consent.cmcs"));
  HostEnv gated(IsolationMode::ConsentGated);
  run_scenario(gated, steps);
  EXPECT_TRUE(gated.collusion_demonstrated());

  // the same script without its grant line
  Scenario no_grant;
  for (const auto& s : steps)
    if (s.kind != StepKind::Grant) no_grant.push_back(s);
  HostEnv withheld(IsolationMode::ConsentGated);
  run_scenario(withheld, no_grant);
  EXPECT_FALSE(withheld.collusion_demonstrated());
  EXPECT_TRUE(std::any_of(withheld.trace().begin(), withheld.trace().end(),
                          [](const TraceEvent& e) { return e.event == "consent_required"; }));
}

TEST(CookieSim, GrantCoversSubdomainsOnly) {
  HostEnv env(IsolationMode::ConsentGated);
  env.open_webview("A", "https://a.host.com/");
  env.set_cookie("A", cookie("n", "1", "a.host.com"));
  env.set_cookie("A", cookie("w", "2", ".host.com"));
  env.open_webview("B", "https://a.host.com/");
  env.grant_consent("B", "a.host.com");
  EXPECT_EQ(names(env.get_cookies("B")), std::set<std::string>{"n=1"});
  env.grant_consent("B", ".HOST.com");
  EXPECT_EQ(names(env.get_cookies("B")), (std::set<std::string>{"n=1", "w=2"}));
}

TEST(CookieSim, VisibilityIsMonotoneAcrossModes) {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::string why;
    EXPECT_TRUE(visibility_monotone(random_scenario(seed), &why)) << seed << ": " << why;
  }
}

TEST(CookieSim, CookiesSurviveCloseAndReopen) {
  for (const auto* domain : {"", ".host.com"}) {
    for (const std::optional<Tick> expires : {std::optional<Tick>{}, std::optional<Tick>{100}}) {
      HostEnv env;
      env.open_webview("A", "https://a.host.com/");
      env.set_cookie("A", cookie("k", "v", domain, expires));
      env.close_app("A");
      env.advance_clock(5);
      env.open_webview("A", "https://a.host.com/");
      EXPECT_EQ(names(env.get_cookies("A")), std::set<std::string>{"k=v"});
      env.close_app("A");
      env.open_webview("B", "https://a.host.com/");
      EXPECT_EQ(names(env.get_cookies("B")), std::set<std::string>{"k=v"});
    }
  }
}

TEST(CookieSim, PersistenceSample) {
  const auto reads = visible_per_read(sample("persistence.cmcs"), "shared");
  ASSERT_EQ(reads.size(), 2u);
  EXPECT_EQ(reads[0], (std::set<std::string>{"a.host.com|sid=s1", ".host.com|token=t1"}));
  EXPECT_EQ(reads[1], std::set<std::string>{"a.host.com|sid=s1"});
}

TEST(CookieSim, TracesAreDeterministic) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto script = random_scenario(seed);
    for (const char* mode : {"shared", "isolated", "consent"}) {
      std::string first;
      for (int run = 0; run < 2; ++run) {
        HostEnv env(*parse_isolation_mode(mode));
        run_scenario(env, parse_scenario(script));
        const auto text = trace_to_jsonl(env.trace());
        if (run == 0) first = text;
        else EXPECT_EQ(text, first) << seed << " " << mode;
      }
    }
  }
}

TEST(CookieSim, ScenarioSyntaxErrors) {
  const std::vector<std::string> bad = {
      "open A",                 "set A",          "set A novalue",   "set A =v",
      "set A k=v colour=red",   "set A k=v expires=soon", "tick -1",   "tick",
      "jump A",                 "get",            "close",           "grant B",
      "tick 99999999999999999999999",
  };
  for (const auto& line : bad) {
    try {
      parse_scenario("# comment\n" + line + "\n");
      ADD_FAILURE() << line;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ScenarioSyntax) << line;
      EXPECT_NE(std::string(e.what()).find("2"), std::string::npos) << "line number missing: " << e.what();
    }
  }
  EXPECT_EQ(parse_scenario("\n# only comments\n\n").size(), 0u);
  EXPECT_EQ(parse_scenario("open A https://x.com/\nset A k=v path=/p domain=x.com expires=3\nget A\n").size(), 3u);
}

TEST(CookieSim, StepsOnUnopenedAppsFail) {
  HostEnv env;
  EXPECT_THROW(env.get_cookies("Z"), Error);
  EXPECT_THROW(env.set_cookie("Z", cookie("k", "v")), Error);
  EXPECT_THROW(env.close_app("Z"), Error);
}

TEST(CookieSim, DomainMatching) {
  EXPECT_TRUE(domain_matches("a.host.com", "a.host.com"));
  EXPECT_FALSE(domain_matches("b.a.host.com", "a.host.com"));
  EXPECT_TRUE(domain_matches("host.com", ".host.com"));
  EXPECT_TRUE(domain_matches("a.host.com", ".host.com"));
  EXPECT_TRUE(domain_matches("x.a.host.com", ".host.com"));
  EXPECT_FALSE(domain_matches("evilhost.com", ".host.com"));
  EXPECT_FALSE(domain_matches("host.com", ".a.host.com"));
  EXPECT_FALSE(domain_matches("host.com", ""));
}

TEST(CookieSim, PathMatching) {
  EXPECT_TRUE(path_matches("/anything", "/"));
  EXPECT_TRUE(path_matches("/shop", "/shop"));
  EXPECT_TRUE(path_matches("/shop/list", "/shop"));
  EXPECT_TRUE(path_matches("/shop/list", "/shop/"));
  EXPECT_FALSE(path_matches("/shopping", "/shop"));
  EXPECT_FALSE(path_matches("/", "/shop"));
}

TEST(CookieSim, PathScopesVisibility) {
  HostEnv env;
  env.open_webview("A", "https://b.site.com/shop/list");
  CookieRecord scoped = cookie("cart", "3");
  scoped.path = "/shop";
  env.set_cookie("A", scoped);
  env.open_webview("B", "https://b.site.com/home");
  EXPECT_TRUE(env.get_cookies("B").empty());
  env.open_webview("B", "https://b.site.com/shop/item");
  EXPECT_EQ(names(env.get_cookies("B")), std::set<std::string>{"cart=3"});
}

}  // namespace
}  // namespace cmcs::testing
