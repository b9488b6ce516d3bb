#include <gtest/gtest.h>

#include "checks.hpp"
#include "cmcs/cmcs.hpp"
#include "corpus_gen.hpp"
#include "fixtures.hpp"

namespace cmcs::testing {
namespace {

TEST(UrlOracle, StaticUrlsCoverEveryConcreteExecution) {
  for (std::uint64_t seed = 1; seed <= 120; ++seed) {
    const auto p = generate_url_program(seed);
    const auto r = check_url_program(p);
    SCOPED_TRACE("seed " + std::to_string(seed) + "\n" + p.app_js() + p.page_js() + p.wxml());
    ASSERT_GT(r.concrete, 0u);
    EXPECT_TRUE(r.not_urls.empty()) << r.not_urls.front();
    EXPECT_TRUE(r.missed.empty()) << r.missed.front();
    for (const auto& h : r.concrete_hosts) EXPECT_TRUE(r.static_hosts.count(h)) << h;
  }
}

TEST(UrlOracle, ConcreteInterpreterSeesEveryOrder) {
  UrlProgram p;
  p.data_init = {{"url1", "https://a.example.com/x"}};
  p.handlers = {{"s0", {{UrlStmt::SetData, "url1", {{UrlAtom::Lit, "https://b.example.com"}}}}},
                {"s1", {{UrlStmt::SetData, "url1", {{UrlAtom::Data, "url1"}, {UrlAtom::Lit, "/y"}}}}}};
  p.src_parts = {"", ""};
  p.src_slots = {"url1"};
  const auto got = concrete_srcs(p);
  const std::set<std::string> want = {"https://a.example.com/x", "https://b.example.com",
                                      "https://a.example.com/x/y", "https://b.example.com/y"};
  EXPECT_EQ(got, want);
}

TEST(UrlOracle, TemplateMatching) {
  EXPECT_TRUE(template_matches("https://a.com/i?n={{PhoneNumber}}", "https://a.com/i?n=138"));
  EXPECT_TRUE(template_matches("https://a.com/i?n={{?}}&x=1", "https://a.com/i?n=&x=1"));
  EXPECT_FALSE(template_matches("https://a.com/i?n=1", "https://a.com/i?n=2"));
  EXPECT_FALSE(template_matches("https://a.com/a.b", "https://a.com/aXb"));
  EXPECT_EQ(concrete_host("https://H5.Example.com:8080/x"), "h5.example.com:8080");
  EXPECT_EQ(concrete_host("/relative"), "");
}

TEST(TaintOracle, BackwardAndForwardMatchDefUseEnumeration) {
  std::size_t nonempty_send = 0, nonempty_receive = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto fx = generate_taint_fixture(seed);
    const auto r = run_taint_fixture(fx);
    SCOPED_TRACE("seed " + std::to_string(seed) + "\n" + fx.page_js);
    EXPECT_TRUE(r.parsed_clean);
    EXPECT_GT(r.sinks, 0u);
    EXPECT_EQ(r.backward.to_string(), fx.expected_send.to_string());
    EXPECT_EQ(r.forward.to_string(), fx.expected_receive.to_string());
    nonempty_send += fx.expected_send.empty() ? 0 : 1;
    nonempty_receive += fx.expected_receive.empty() ? 0 : 1;
  }
  // the family must actually plant paths
  EXPECT_GE(nonempty_send, 25u);
  EXPECT_GE(nonempty_receive, 25u);
}

class CorpusProperties : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(CorpusProperties, FunnelClustersAndCollusionMatchPlantedTruth) {
  TempDir dir("corpus");
  CorpusConfig cfg;
  cfg.seed = GetParam();
  cfg.total = 14 + GetParam() % 7;
  cfg.cluster_sizes = {1 + GetParam() % 5, 3, 2};
  const auto truth = generate_corpus(dir.path(), cfg);
  ScanOptions opts;
  opts.min_cluster = 3;
  const auto report = scan_corpus(dir.path(), opts);

  ASSERT_EQ(report.funnel.size(), 4u);
  EXPECT_EQ(report.funnel[0].count, truth.total);
  EXPECT_EQ(report.funnel[1].count, truth.with_webview);
  EXPECT_EQ(report.funnel[2].count, truth.clusters.size());
  EXPECT_EQ(report.funnel[3].count, truth.large_clusters(3).size());
  for (std::size_t i = 1; i < report.funnel.size(); ++i)
    EXPECT_LE(report.funnel[i].count, report.funnel[i - 1].count);
  EXPECT_EQ(report.large_clusters, truth.large_clusters(3));

  // incidence: every member of a cluster loads that domain
  std::map<std::string, std::set<std::string>> got;
  for (const auto& c : report.clusters) got[c.key] = c.members;
  EXPECT_EQ(got, truth.clusters);
  for (const auto& c : report.clusters)
    for (const auto& m : c.members) {
      const auto app = std::find_if(report.apps.begin(), report.apps.end(),
                                    [&](const AppReport& a) { return a.app_id == m; });
      ASSERT_NE(app, report.apps.end());
      EXPECT_NE(std::find(app->domains.begin(), app->domains.end(), c.key), app->domains.end());
    }

  std::vector<std::tuple<std::string, std::string, std::string, CategorySet>> found;
  for (const auto& f : report.collusion) found.emplace_back(f.domain, f.sender_app, f.receiver_app, f.overlap);
  EXPECT_EQ(found, truth.collusion());
}

INSTANTIATE_TEST_SUITE_P(Seeds, CorpusProperties, ::testing::Values(1, 2, 3, 4, 5, 6, 7, 8));

}  // namespace
}  // namespace cmcs::testing
