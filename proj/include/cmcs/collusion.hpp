#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cmcs/taint_engine.hpp"

namespace cmcs {

/// What clustering needs from one analyzed app.
struct AppFlows {
  std::string app_id;
  std::vector<Domain> webview_domains;
  std::vector<FlowFinding> findings;
};

inline AppFlows flows_of(const PackageAnalysis& a) {
  AppFlows f;
  f.app_id = a.app_id;
  for (const auto& d : a.domains) f.webview_domains.push_back(d.domain);
  f.findings = a.findings;
  return f;
}

struct DomainCluster {
  std::string key;  // host or registrable domain, per mode
  Domain domain;
  std::set<std::string> members;
  std::map<std::string, CategorySet> send_categories;
  std::map<std::string, CategorySet> receive_categories;

  bool bidirectional() const { return !send_categories.empty() && !receive_categories.empty(); }

  auto operator<=>(const DomainCluster&) const = default;
};

struct CollusionFinding {
  std::string domain;  // cluster key
  std::string sender_app;
  std::string receiver_app;
  CategorySet overlap;
  bool bidirectional_domain = false;

  auto operator<=>(const CollusionFinding&) const = default;
};

/// One cluster per distinct domain key, sorted by key. Apps loading several
/// domains appear in several clusters.
inline std::vector<DomainCluster> cluster_by_domain(const std::vector<AppFlows>& apps,
                                                    ClusterKeyMode mode = ClusterKeyMode::Host) {
  std::map<std::string, DomainCluster> by_key;
  auto cluster_for = [&](const Domain& d) -> DomainCluster& {
    const auto& key = cluster_key(d, mode);
    auto& c = by_key[key];
    if (c.key.empty()) {
      c.key = key;
      c.domain = mode == ClusterKeyMode::Host ? d : Domain{d.registrable, d.registrable};
    }
    return c;
  };
  for (const auto& app : apps) {
    for (const auto& d : app.webview_domains) cluster_for(d).members.insert(app.app_id);
    for (const auto& f : app.findings) {
      if (!f.domain) continue;
      auto& c = cluster_for(*f.domain);
      c.members.insert(app.app_id);
      auto& slot = f.direction == Direction::Send ? c.send_categories : c.receive_categories;
      slot[app.app_id] |= f.categories;
    }
  }
  std::vector<DomainCluster> out;
  out.reserve(by_key.size());
  for (auto& [k, c] : by_key) out.push_back(std::move(c));
  return out;
}

/// Keeps clusters with at least `min_members` members (`--min-cluster`).
/// The default of 6 reproduces "more than 5".
inline std::vector<DomainCluster> filter_clusters(const std::vector<DomainCluster>& clusters,
                                                  std::size_t min_members = 6) {
  std::vector<DomainCluster> out;
  for (const auto& c : clusters)
    if (c.members.size() >= std::max<std::size_t>(min_members, 1)) out.push_back(c);
  return out;
}

/// Ordered (sender, receiver) pairs of distinct apps whose sent and received
/// categories intersect.
inline std::vector<CollusionFinding> detect_collusion(const DomainCluster& cluster) {
  std::vector<CollusionFinding> out;
  for (const auto& [sender, sent] : cluster.send_categories) {
    for (const auto& [receiver, received] : cluster.receive_categories) {
      if (sender == receiver) continue;
      const auto overlap = sent & received;
      if (overlap.empty()) continue;
      out.push_back({cluster.key, sender, receiver, overlap, cluster.bidirectional()});
    }
  }
  return out;
}

/// Trusted domains removed before collusion detection. One entry per line,
/// `#` comments. An entry covers itself and its subdomains.
class Allowlist {
 public:
  Allowlist() = default;

  static Allowlist parse(std::string_view text_body) {
    Allowlist a;
    for (const auto& raw : text::split(text_body, '\n')) {
      auto line = std::string(raw);
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      auto entry = text::to_lower(text::trim(line));
      while (!entry.empty() && entry.front() == '.') entry.erase(0, 1);
      if (!entry.empty()) a.entries_.insert(entry);
    }
    return a;
  }

  static Allowlist load(const std::filesystem::path& path) {
    std::string body;
    if (detail::read_text_file(path, body) != detail::ReadStatus::Ok)
      throw Error(ErrorCode::Io, "cannot read allowlist '" + path.string() + "'");
    return parse(body);
  }

  bool covers(std::string_view domain) const {
    const auto d = text::to_lower(domain);
    for (const auto& e : entries_)
      if (d == e || (d.size() > e.size() && text::ends_with(d, e) && d[d.size() - e.size() - 1] == '.'))
        return true;
    return false;
  }

  bool empty() const { return entries_.empty(); }
  const std::set<std::string>& entries() const { return entries_; }

 private:
  std::set<std::string> entries_;
};

inline std::vector<DomainCluster> remove_allowlisted(const std::vector<DomainCluster>& clusters,
                                                     const Allowlist& allow) {
  std::vector<DomainCluster> out;
  for (const auto& c : clusters)
    if (!allow.covers(c.key)) out.push_back(c);
  return out;
}

struct FunnelStage {
  std::string name;
  std::size_t count = 0;

  auto operator<=>(const FunnelStage&) const = default;
};

struct CorpusResult {
  std::vector<DomainCluster> clusters;  // after the allowlist
  std::vector<DomainCluster> large;     // after the size filter
  std::vector<CollusionFinding> collusion;
  std::vector<FunnelStage> funnel;
};

/// The corpus-level pipeline: cluster, drop allowlisted domains, apply the
/// size filter, detect collusion. Collusion is searched in every remaining
/// cluster; the size filter only decides which clusters count as large.
inline CorpusResult run_collusion_pipeline(const std::vector<AppFlows>& apps, std::size_t total_packages,
                                           std::size_t packages_with_webview, ClusterKeyMode mode,
                                           const Allowlist& allow, std::size_t min_members) {
  CorpusResult r;
  r.clusters = remove_allowlisted(cluster_by_domain(apps, mode), allow);
  r.large = filter_clusters(r.clusters, min_members);
  for (const auto& c : r.clusters) {
    auto found = detect_collusion(c);
    r.collusion.insert(r.collusion.end(), found.begin(), found.end());
  }
  std::sort(r.collusion.begin(), r.collusion.end());
  r.funnel = {{"total", total_packages},
              {"has_webview", packages_with_webview},
              {"clustered", r.clusters.size()},
              {"size_filtered", r.large.size()}};
  return r;
}

}  // namespace cmcs
