#pragma once

#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>
#include <vector>

#include "cmcs/report.hpp"

namespace cmcs {

struct ScanOptions {
  ClusterKeyMode cluster_mode = ClusterKeyMode::Host;
  std::size_t min_cluster = 6;
  Allowlist allowlist;
  unsigned jobs = 1;
  TaintCatalog catalog = TaintCatalog::defaults();
};

inline AppReport to_app_report(const PackageAnalysis& a, const std::string& root) {
  AppReport r;
  r.app_id = a.app_id;
  r.category = a.category;
  r.root = root;
  r.webview_count = a.webview_count;
  for (const auto& d : a.domains) r.domains.push_back(d.domain.host);
  std::sort(r.domains.begin(), r.domains.end());
  r.domains.erase(std::unique(r.domains.begin(), r.domains.end()), r.domains.end());
  r.findings = a.findings;
  r.diagnostics = a.diagnostics;
  return r;
}

namespace detail {

// Fills clusters, collusion, funnel and the category matrix from `apps`.
inline void finish_report(ScanReport& report, const std::vector<AppFlows>& flows, std::size_t total,
                          const ScanOptions& opts) {
  std::sort(report.apps.begin(), report.apps.end(),
            [](const AppReport& a, const AppReport& b) { return std::tie(a.app_id, a.root) < std::tie(b.app_id, b.root); });
  std::size_t with_webview = 0;
  for (const auto& a : report.apps) with_webview += a.webview_count > 0 ? 1 : 0;
  auto result = run_collusion_pipeline(flows, total, with_webview, opts.cluster_mode, opts.allowlist, opts.min_cluster);
  report.cluster_mode = to_string(opts.cluster_mode);
  report.min_cluster = opts.min_cluster;
  report.clusters = std::move(result.clusters);
  for (const auto& c : result.large) report.large_clusters.push_back(c.key);
  report.collusion = std::move(result.collusion);
  report.funnel = std::move(result.funnel);
  for (const auto& a : report.apps)
    for (const auto& f : a.findings) report.category_matrix.add(a.category, f);
  std::sort(report.diagnostics.begin(), report.diagnostics.end());
}

}  // namespace detail

/// Single-package scan. Throws Error(MissingManifest | MalformedManifest |
/// EmptyPackage) from loading.
inline ScanReport scan_package(const std::filesystem::path& root, const ScanOptions& opts = {}) {
  const auto pkg = load_package(root);
  const auto analysis = analyze_package(pkg, opts.catalog);
  ScanReport report;
  report.command = "scan";
  report.apps.push_back(to_app_report(analysis, root.string()));
  std::vector<AppFlows> flows{flows_of(analysis)};
  detail::finish_report(report, flows, 1, opts);
  return report;
}

/// Direct children of `root` that contain an app.json, sorted by name.
/// Throws Error(EmptyCorpus) when there are none.
inline std::vector<std::filesystem::path> discover_packages(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  if (std::filesystem::is_directory(root, ec)) {
    for (const auto& entry : std::filesystem::directory_iterator(root, ec)) {
      std::error_code ec2;
      if (entry.is_directory(ec2) && std::filesystem::is_regular_file(entry.path() / "app.json", ec2))
        out.push_back(entry.path());
    }
  }
  if (out.empty()) throw Error(ErrorCode::EmptyCorpus, "no package directories under '" + root.string() + "'");
  std::sort(out.begin(), out.end());
  return out;
}

/// Corpus scan. Packages are analyzed by `opts.jobs` workers; results are
/// gathered by index and every list is sorted, so the report does not
/// depend on the number of workers.
inline ScanReport scan_corpus(const std::filesystem::path& root, const ScanOptions& opts = {}) {
  const auto dirs = discover_packages(root);
  struct Slot {
    std::optional<PackageAnalysis> analysis;
    std::optional<Diagnostic> failure;
  };
  std::vector<Slot> slots(dirs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    while (true) {
      const auto i = next.fetch_add(1);
      if (i >= dirs.size()) return;
      try {
        slots[i].analysis = analyze_package(load_package(dirs[i]), opts.catalog);
      } catch (const Error& e) {
        slots[i].failure = Diagnostic{Severity::Error, to_string(e.code()), e.what(),
                                      dirs[i].filename().string()};
      } catch (...) {
        std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(dirs.size())));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  ScanReport report;
  report.command = "corpus";
  std::vector<AppFlows> flows;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (slots[i].failure) {
      report.diagnostics.push_back(*slots[i].failure);
      continue;
    }
    report.apps.push_back(to_app_report(*slots[i].analysis, dirs[i].filename().string()));
    flows.push_back(flows_of(*slots[i].analysis));
  }
  detail::finish_report(report, flows, dirs.size(), opts);
  return report;
}

/// Exit status for `scan`: 3 when one domain both sends and receives, 2 when
/// anything is sent, else 0.
inline int scan_exit_code(const ScanReport& r) {
  std::set<std::string> send_hosts, receive_hosts;
  bool any_send = false;
  for (const auto& f : r.all_findings()) {
    if (f.direction == Direction::Send) any_send = true;
    if (!f.domain) continue;
    (f.direction == Direction::Send ? send_hosts : receive_hosts).insert(f.domain->host);
  }
  for (const auto& h : send_hosts)
    if (receive_hosts.count(h)) return 3;
  return any_send ? 2 : 0;
}

}  // namespace cmcs
