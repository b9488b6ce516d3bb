#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cmcs/common.hpp"
#include "cmcs/wxml.hpp"
#include "json.hpp"

namespace cmcs {

struct PageUnit {
  std::string page_path;
  std::optional<std::string> template_source;  // <page>.wxml
  std::optional<std::string> script_source;    // <page>.js
};

/// One unpacked mini-program. Immutable after load_package().
struct MiniProgramPackage {
  std::string app_id;
  std::vector<PageUnit> pages;           // manifest order
  std::optional<std::string> app_script; // app.js
  std::string category = "uncategorized";
  std::filesystem::path root;
  Diagnostics diagnostics;
};

namespace detail {

enum class ReadStatus { Ok, Missing, Unreadable, NotUtf8 };

inline ReadStatus read_text_file(const std::filesystem::path& path, std::string& out) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) return ReadStatus::Missing;
  std::ifstream in(path, std::ios::binary);
  if (!in) return ReadStatus::Unreadable;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return ReadStatus::Unreadable;
  out = ss.str();
  if (!text::is_valid_utf8(out)) return ReadStatus::NotUtf8;
  return ReadStatus::Ok;
}

// Missing files are silent; unreadable or non-UTF-8 ones become absent plus
// a warning.
inline std::optional<std::string> read_source(const std::filesystem::path& path,
                                              const std::string& label, Diagnostics& diags) {
  std::string body;
  switch (read_text_file(path, body)) {
    case ReadStatus::Ok: return body;
    case ReadStatus::Missing: return std::nullopt;
    case ReadStatus::Unreadable:
      diags.push_back({Severity::Warning, "UnreadableFile", "cannot read file", label});
      return std::nullopt;
    case ReadStatus::NotUtf8:
      diags.push_back({Severity::Warning, "NotUtf8", "file is not valid UTF-8", label});
      return std::nullopt;
  }
  return std::nullopt;
}

inline bool escapes_root(const std::string& rel) {
  const std::filesystem::path p(rel);
  if (p.is_absolute()) return true;
  for (const auto& part : p)
    if (part == "..") return true;
  return false;
}

inline std::string directory_name(const std::filesystem::path& root) {
  std::error_code ec;
  auto canon = std::filesystem::weakly_canonical(root, ec);
  auto name = (ec ? root : canon).filename().string();
  if (name.empty()) name = root.parent_path().filename().string();
  return name.empty() ? std::string("app") : name;
}

}  // namespace detail

/// Loads `<root>/app.json` and the `.wxml`/`.js` pair of every listed page.
/// Throws Error(MissingManifest | MalformedManifest | EmptyPackage).
inline MiniProgramPackage load_package(const std::filesystem::path& root) {
  MiniProgramPackage pkg;
  pkg.root = root;

  const auto manifest_path = root / "app.json";
  std::string manifest_text;
  switch (detail::read_text_file(manifest_path, manifest_text)) {
    case detail::ReadStatus::Missing:
      throw Error(ErrorCode::MissingManifest, "no app.json in '" + root.string() + "'");
    case detail::ReadStatus::Unreadable:
    case detail::ReadStatus::NotUtf8:
      throw Error(ErrorCode::MalformedManifest, "app.json is unreadable or not UTF-8");
    case detail::ReadStatus::Ok: break;
  }

  const auto manifest = nlohmann::json::parse(manifest_text, nullptr, /*allow_exceptions=*/false);
  if (manifest.is_discarded() || !manifest.is_object())
    throw Error(ErrorCode::MalformedManifest, "app.json is not a JSON object");
  const auto pages = manifest.find("pages");
  if (pages == manifest.end() || !pages->is_array())
    throw Error(ErrorCode::MalformedManifest, "app.json has no \"pages\" array");

  if (auto id = manifest.find("appid"); id != manifest.end() && id->is_string() &&
                                        !id->get<std::string>().empty())
    pkg.app_id = id->get<std::string>();
  else
    pkg.app_id = detail::directory_name(root);
  if (auto cat = manifest.find("category"); cat != manifest.end() && cat->is_string() &&
                                            !cat->get<std::string>().empty())
    pkg.category = cat->get<std::string>();

  for (const auto& entry : *pages) {
    if (!entry.is_string()) {
      pkg.diagnostics.push_back({Severity::Warning, "MalformedManifest",
                                 "non-string entry in pages skipped", "app.json"});
      continue;
    }
    PageUnit unit;
    unit.page_path = entry.get<std::string>();
    if (detail::escapes_root(unit.page_path)) {
      pkg.diagnostics.push_back({Severity::Warning, "PathEscapesRoot",
                                 "page path leaves the package root", unit.page_path});
    } else {
      unit.template_source = detail::read_source(root / (unit.page_path + ".wxml"),
                                                 unit.page_path + ".wxml", pkg.diagnostics);
      unit.script_source = detail::read_source(root / (unit.page_path + ".js"),
                                               unit.page_path + ".js", pkg.diagnostics);
    }
    if (!unit.template_source && !unit.script_source)
      pkg.diagnostics.push_back({Severity::Warning, "MissingPageFiles",
                                 "neither .wxml nor .js found for page", unit.page_path});
    pkg.pages.push_back(std::move(unit));
  }
  if (pkg.pages.empty()) throw Error(ErrorCode::EmptyPackage, "app.json lists no pages");

  pkg.app_script = detail::read_source(root / "app.js", "app.js", pkg.diagnostics);
  return pkg;
}

/// The manifest page list as it would be re-serialized.
inline nlohmann::json manifest_pages(const MiniProgramPackage& pkg) {
  auto arr = nlohmann::json::array();
  for (const auto& p : pkg.pages) arr.push_back(p.page_path);
  return arr;
}

inline std::size_t count_webviews(const PageUnit& page) {
  if (!page.template_source) return 0;
  const auto doc = parse_wxml(*page.template_source);
  return extract_webviews(doc.root, page.page_path).size();
}

inline bool has_webview(const MiniProgramPackage& pkg) {
  for (const auto& page : pkg.pages)
    if (count_webviews(page) > 0) return true;
  return false;
}

}  // namespace cmcs
