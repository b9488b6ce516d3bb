#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cmcs/cookie_sim.hpp"
#include "cmcs/pipeline.hpp"

namespace cmcs {

/// Exit codes shared by all subcommands.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kError = 1;          // bad input: missing manifest, empty corpus, DSL error
inline constexpr int kSend = 2;           // scan: at least one Send finding
inline constexpr int kBidirectional = 3;  // scan: send and receive on one domain
inline constexpr int kCollusion = 4;      // simulate: CollusionDemonstrated
inline constexpr int kUsage = 64;         // malformed command line
}  // namespace exit_code

namespace detail {

inline bool write_output(const std::string& body, const std::string& out_path, std::ostream& out,
                         std::ostream& err) {
  if (out_path.empty() || out_path == "-") {
    out << body;
    return true;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) {
    err << "error: cannot write '" << out_path << "'\n";
    return false;
  }
  f << body;
  return static_cast<bool>(f);
}

inline std::string render_report(const ScanReport& r, const std::string& format) {
  if (format == "csv") return report_to_csv(r);
  if (format == "text") return report_to_text(r);
  return report_to_json(r);
}

}  // namespace detail

/// Entry point behind the `cmcscan` binary.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"cmcscan: detect cross mini-program cookie sharing risks in mini-program packages"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cmcscan 1.0 (psl " + std::string(PublicSuffixList::builtin_version()) + ")");

  std::string taint_config;
  app.add_option("--taint-config", taint_config,
                 "keyword/API catalog file (default: $CMCS_TAINT_CONFIG or built-in)");

  std::string format = "json";
  std::string out_path;
  std::string cluster_by = "host";
  std::string allowlist_path;
  std::size_t min_cluster = 6;
  unsigned jobs = 1;

  auto* scan = app.add_subcommand("scan", "scan one unpacked package");
  std::string scan_path;
  scan->add_option("path", scan_path, "package root (directory with app.json)")->required();
  scan->add_option("--format", format, "json|csv|text")->check(CLI::IsMember({"json", "csv", "text"}));
  scan->add_option("--out", out_path, "write the report here instead of stdout");
  scan->add_option("--cluster-by", cluster_by, "host|etld1")->check(CLI::IsMember({"host", "etld1"}));

  auto* corpus = app.add_subcommand("corpus", "scan every package directory under a root");
  std::string corpus_root;
  corpus->add_option("root", corpus_root, "directory whose children are package roots")->required();
  corpus->add_option("--min-cluster", min_cluster, "keep clusters with at least N members")
      ->check(CLI::PositiveNumber);
  corpus->add_option("--cluster-by", cluster_by, "host|etld1")->check(CLI::IsMember({"host", "etld1"}));
  corpus->add_option("--allowlist", allowlist_path, "trusted domains, one per line");
  corpus->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::Range(1u, 1024u));
  corpus->add_option("--format", format, "json|csv|text")->check(CLI::IsMember({"json", "csv", "text"}));
  corpus->add_option("--out", out_path, "write the report here instead of stdout");

  auto* simulate = app.add_subcommand("simulate", "run a cookie-sharing scenario script");
  std::string script_path;
  std::string mode_name = "shared";
  simulate->add_option("script", script_path, "scenario file")->required();
  simulate->add_option("--mode", mode_name, "shared|isolated|consent")
      ->check(CLI::IsMember({"shared", "isolated", "consent"}));
  simulate->add_option("--out", out_path, "write the trace here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? exit_code::kOk : exit_code::kUsage;
  }

  try {
    if (simulate->parsed()) {
      std::string body;
      if (detail::read_text_file(script_path, body) != detail::ReadStatus::Ok)
        throw Error(ErrorCode::Io, "cannot read scenario '" + script_path + "'");
      HostEnv env(*parse_isolation_mode(mode_name));
      int rc = exit_code::kOk;
      std::string trace;
      try {
        run_scenario(env, parse_scenario(body));
      } catch (const Error& e) {
        trace = trace_to_jsonl(env.trace());
        detail::write_output(trace, out_path, out, err);
        err << "error: " << e.what() << "\n";
        return exit_code::kError;
      }
      trace = trace_to_jsonl(env.trace());
      if (!detail::write_output(trace, out_path, out, err)) return exit_code::kError;
      if (env.collusion_demonstrated()) rc = exit_code::kCollusion;
      return rc;
    }

    ScanOptions opts;
    if (taint_config.empty())
      if (const char* env = std::getenv("CMCS_TAINT_CONFIG"); env && *env) taint_config = env;
    if (!taint_config.empty()) opts.catalog = TaintCatalog::load(taint_config);
    opts.cluster_mode = *parse_cluster_mode(cluster_by);
    opts.min_cluster = min_cluster;
    opts.jobs = jobs;
    if (!allowlist_path.empty()) opts.allowlist = Allowlist::load(allowlist_path);

    if (scan->parsed()) {
      const auto report = scan_package(scan_path, opts);
      if (!detail::write_output(detail::render_report(report, format), out_path, out, err)) return exit_code::kError;
      return scan_exit_code(report);
    }
    const auto report = scan_corpus(corpus_root, opts);
    if (!detail::write_output(detail::render_report(report, format), out_path, out, err)) return exit_code::kError;
    return exit_code::kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::kError;
  }
}

}  // namespace cmcs
