#pragma once

#include <array>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cmcs/collusion.hpp"
#include "json.hpp"

namespace cmcs {

inline constexpr int kSchemaVersion = 1;

struct AppReport {
  std::string app_id;
  std::string category = "uncategorized";
  std::string root;  // package directory as given on the command line
  std::size_t webview_count = 0;
  std::vector<std::string> domains;  // resolved web-view hosts, sorted
  std::vector<FlowFinding> findings;
  Diagnostics diagnostics;

  bool operator==(const AppReport&) const = default;
};

/// Finding counts per app category, per (SensitiveCategory, direction).
struct CategoryMatrix {
  struct Row {
    std::array<std::size_t, 6> sent{};
    std::array<std::size_t, 6> received{};
    bool operator==(const Row&) const = default;
  };
  std::map<std::string, Row> rows;

  void add(const std::string& label, const FlowFinding& f) {
    auto& row = rows[label];
    auto& cells = f.direction == Direction::Send ? row.sent : row.received;
    for (auto c : f.categories.items()) ++cells[static_cast<std::size_t>(c)];
  }

  Row totals() const {
    Row t;
    for (const auto& [label, r] : rows)
      for (std::size_t i = 0; i < 6; ++i) {
        t.sent[i] += r.sent[i];
        t.received[i] += r.received[i];
      }
    return t;
  }

  bool operator==(const CategoryMatrix&) const = default;
};

struct ScanReport {
  int schema_version = kSchemaVersion;
  std::string command;  // "scan" | "corpus"
  std::string cluster_mode = "host";
  std::size_t min_cluster = 6;
  std::vector<AppReport> apps;
  std::vector<DomainCluster> clusters;
  std::vector<std::string> large_clusters;  // keys surviving the size filter
  std::vector<CollusionFinding> collusion;
  std::vector<FunnelStage> funnel;
  CategoryMatrix category_matrix;
  Diagnostics diagnostics;  // corpus-level (packages that failed to load, ...)

  bool operator==(const ScanReport&) const = default;

  std::vector<FlowFinding> all_findings() const {
    std::vector<FlowFinding> out;
    for (const auto& a : apps) out.insert(out.end(), a.findings.begin(), a.findings.end());
    return out;
  }
};

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

using nlohmann::json;

inline json categories_json(CategorySet c) { return c.names(); }

inline CategorySet categories_from_json(const json& j) {
  CategorySet out;
  for (const auto& n : j) {
    auto c = parse_category(n.get<std::string>());
    if (!c) throw Error(ErrorCode::MalformedManifest, "unknown category in report: " + n.get<std::string>());
    out.insert(*c);
  }
  return out;
}

inline void to_json(json& j, const Diagnostic& d) {
  j = json{{"severity", to_string(d.severity)}, {"code", d.code}, {"message", d.message}, {"location", d.location}};
}
inline void from_json(const json& j, Diagnostic& d) {
  const auto sev = j.at("severity").get<std::string>();
  d.severity = sev == "error" ? Severity::Error : sev == "info" ? Severity::Info : Severity::Warning;
  d.code = j.at("code").get<std::string>();
  d.message = j.at("message").get<std::string>();
  d.location = j.at("location").get<std::string>();
}

inline void to_json(json& j, const Domain& d) { j = json{{"host", d.host}, {"registrable", d.registrable}}; }
inline void from_json(const json& j, Domain& d) {
  d.host = j.at("host").get<std::string>();
  d.registrable = j.at("registrable").get<std::string>();
}

inline void to_json(json& j, const FlowFinding& f) {
  j = json{{"app_id", f.app_id},
           {"page_path", f.page_path},
           {"webview_index", f.webview_index},
           {"direction", to_string(f.direction)},
           {"channel", to_string(f.channel)},
           {"categories", categories_json(f.categories)},
           {"domain", f.domain ? json(*f.domain) : json(nullptr)},
           {"evidence",
            {{"file", f.evidence.file},
             {"begin", f.evidence.span.begin},
             {"end", f.evidence.span.end},
             {"rule", f.evidence.rule}}},
           {"confidence", to_string(f.confidence)}};
}
inline void from_json(const json& j, FlowFinding& f) {
  f.app_id = j.at("app_id").get<std::string>();
  f.page_path = j.at("page_path").get<std::string>();
  f.webview_index = j.at("webview_index").get<std::size_t>();
  f.direction = j.at("direction").get<std::string>() == "Send" ? Direction::Send : Direction::Receive;
  const auto ch = j.at("channel").get<std::string>();
  f.channel = ch == "UrlParam" ? Channel::UrlParam : ch == "PostMessage" ? Channel::PostMessage : Channel::BindMessage;
  f.categories = categories_from_json(j.at("categories"));
  if (j.at("domain").is_null())
    f.domain.reset();
  else
    f.domain = j.at("domain").get<Domain>();
  const auto& ev = j.at("evidence");
  f.evidence.file = ev.at("file").get<std::string>();
  f.evidence.span = {ev.at("begin").get<std::size_t>(), ev.at("end").get<std::size_t>()};
  f.evidence.rule = ev.at("rule").get<std::string>();
  f.confidence = j.at("confidence").get<std::string>() == "low" ? Confidence::Low : Confidence::High;
}

inline void to_json(json& j, const AppReport& a) {
  j = json{{"app_id", a.app_id},         {"category", a.category}, {"root", a.root},
           {"webview_count", a.webview_count}, {"domains", a.domains}, {"findings", a.findings},
           {"diagnostics", a.diagnostics}};
}
inline void from_json(const json& j, AppReport& a) {
  a.app_id = j.at("app_id").get<std::string>();
  a.category = j.at("category").get<std::string>();
  a.root = j.at("root").get<std::string>();
  a.webview_count = j.at("webview_count").get<std::size_t>();
  a.domains = j.at("domains").get<std::vector<std::string>>();
  a.findings = j.at("findings").get<std::vector<FlowFinding>>();
  a.diagnostics = j.at("diagnostics").get<Diagnostics>();
}

inline json category_map_json(const std::map<std::string, CategorySet>& m) {
  json out = json::object();
  for (const auto& [app, cats] : m) out[app] = categories_json(cats);
  return out;
}
inline std::map<std::string, CategorySet> category_map_from_json(const json& j) {
  std::map<std::string, CategorySet> out;
  for (const auto& [app, cats] : j.items()) out[app] = categories_from_json(cats);
  return out;
}

inline void to_json(json& j, const DomainCluster& c) {
  j = json{{"key", c.key},
           {"domain", c.domain},
           {"members", c.members},
           {"send", category_map_json(c.send_categories)},
           {"receive", category_map_json(c.receive_categories)},
           {"bidirectional", c.bidirectional()}};
}
inline void from_json(const json& j, DomainCluster& c) {
  c.key = j.at("key").get<std::string>();
  c.domain = j.at("domain").get<Domain>();
  c.members = j.at("members").get<std::set<std::string>>();
  c.send_categories = category_map_from_json(j.at("send"));
  c.receive_categories = category_map_from_json(j.at("receive"));
}

inline void to_json(json& j, const CollusionFinding& c) {
  j = json{{"domain", c.domain},
           {"sender_app", c.sender_app},
           {"receiver_app", c.receiver_app},
           {"overlap", categories_json(c.overlap)},
           {"bidirectional_domain", c.bidirectional_domain}};
}
inline void from_json(const json& j, CollusionFinding& c) {
  c.domain = j.at("domain").get<std::string>();
  c.sender_app = j.at("sender_app").get<std::string>();
  c.receiver_app = j.at("receiver_app").get<std::string>();
  c.overlap = categories_from_json(j.at("overlap"));
  c.bidirectional_domain = j.at("bidirectional_domain").get<bool>();
}

inline void to_json(json& j, const FunnelStage& s) { j = json{{"stage", s.name}, {"count", s.count}}; }
inline void from_json(const json& j, FunnelStage& s) {
  s.name = j.at("stage").get<std::string>();
  s.count = j.at("count").get<std::size_t>();
}

inline void to_json(json& j, const CategoryMatrix& m) {
  auto row_json = [](const CategoryMatrix::Row& r) {
    json cells = json::object();
    for (auto c : kAllCategories) {
      const auto i = static_cast<std::size_t>(c);
      cells[to_string(c)] = json{{"S", r.sent[i]}, {"R", r.received[i]}};
    }
    return cells;
  };
  json rows = json::object();
  for (const auto& [label, r] : m.rows) rows[label] = row_json(r);
  j = json{{"rows", rows}, {"totals", row_json(m.totals())}};
}
inline void from_json(const json& j, CategoryMatrix& m) {
  m.rows.clear();
  for (const auto& [label, cells] : j.at("rows").items()) {
    CategoryMatrix::Row r;
    for (auto c : kAllCategories) {
      const auto i = static_cast<std::size_t>(c);
      r.sent[i] = cells.at(to_string(c)).at("S").get<std::size_t>();
      r.received[i] = cells.at(to_string(c)).at("R").get<std::size_t>();
    }
    m.rows[label] = r;
  }
}

inline void to_json(json& j, const ScanReport& r) {
  j = json{{"schema_version", r.schema_version},
           {"command", r.command},
           {"cluster_mode", r.cluster_mode},
           {"min_cluster", r.min_cluster},
           {"apps", r.apps},
           {"clusters", r.clusters},
           {"large_clusters", r.large_clusters},
           {"collusion", r.collusion},
           {"funnel", r.funnel},
           {"category_matrix", r.category_matrix},
           {"diagnostics", r.diagnostics}};
}
inline void from_json(const json& j, ScanReport& r) {
  r.schema_version = j.at("schema_version").get<int>();
  r.command = j.at("command").get<std::string>();
  r.cluster_mode = j.at("cluster_mode").get<std::string>();
  r.min_cluster = j.at("min_cluster").get<std::size_t>();
  r.apps = j.at("apps").get<std::vector<AppReport>>();
  r.clusters = j.at("clusters").get<std::vector<DomainCluster>>();
  r.large_clusters = j.at("large_clusters").get<std::vector<std::string>>();
  r.collusion = j.at("collusion").get<std::vector<CollusionFinding>>();
  r.funnel = j.at("funnel").get<std::vector<FunnelStage>>();
  r.category_matrix = j.at("category_matrix").get<CategoryMatrix>();
  r.diagnostics = j.at("diagnostics").get<Diagnostics>();
}

inline std::string report_to_json(const ScanReport& r) { return json(r).dump(2) + "\n"; }

inline ScanReport report_from_json(std::string_view text_body) { return json::parse(text_body).get<ScanReport>(); }

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

/// Header `app_id,page_path,direction,channel,categories,domain`; categories
/// are `;`-joined, domain is the host (empty when unresolved).
inline std::string report_to_csv(const ScanReport& r) {
  std::string out = "app_id,page_path,direction,channel,categories,domain\n";
  for (const auto& f : r.all_findings()) {
    out += csv_field(f.app_id) + ',' + csv_field(f.page_path) + ',' + to_string(f.direction) + ',' +
           to_string(f.channel) + ',' + csv_field(f.categories.to_string()) + ',' +
           csv_field(f.domain ? f.domain->host : std::string()) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text summary
// ---------------------------------------------------------------------------

inline std::string report_to_text(const ScanReport& r) {
  std::ostringstream os;
  os << "Filtering funnel\n";
  for (const auto& s : r.funnel) os << "  " << std::left << std::setw(16) << s.name << s.count << "\n";

  os << "\nPrivileged data (S = sent, R = received)\n";
  os << "  " << std::left << std::setw(18) << "category";
  for (auto c : kAllCategories) os << std::setw(16) << (std::string(to_string(c)) + " S/R");
  os << "\n";
  auto print_row = [&](const std::string& label, const CategoryMatrix::Row& row) {
    os << "  " << std::left << std::setw(18) << label;
    for (std::size_t i = 0; i < 6; ++i)
      os << std::setw(16) << (std::to_string(row.sent[i]) + "/" + std::to_string(row.received[i]));
    os << "\n";
  };
  for (const auto& [label, row] : r.category_matrix.rows) print_row(label, row);
  print_row("total", r.category_matrix.totals());

  os << "\nClusters: " << r.clusters.size() << " (" << r.large_clusters.size() << " with >= " << r.min_cluster
     << " members)\n";
  for (const auto& c : r.clusters)
    if (c.bidirectional()) os << "  bidirectional " << c.key << " (" << c.members.size() << " apps)\n";

  os << "\nCollusion candidates: " << r.collusion.size() << "\n";
  for (const auto& c : r.collusion)
    os << "  " << c.domain << ": " << c.sender_app << " -> " << c.receiver_app << " {" << c.overlap.to_string()
       << "}\n";
  return os.str();
}

}  // namespace cmcs
