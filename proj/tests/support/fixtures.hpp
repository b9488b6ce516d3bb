#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace cmcs::testing {

/// Self-deleting scratch directory.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "cmcs") {
    static std::mt19937_64 rng{std::random_device{}()};
    for (;;) {
      path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(rng()));
      if (std::filesystem::create_directories(path_)) break;
    }
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& body) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << body;
}

struct PageSpec {
  std::string path = "pages/index/index";
  std::string wxml;  // empty: no file
  std::string js;    // empty: no file
};

struct PackageSpec {
  std::string appid;
  std::string category;  // empty: omitted from app.json
  std::vector<PageSpec> pages;
  std::string app_js;  // empty: no app.js
};

/// Writes app.json plus page files under `root`.
inline void write_package(const std::filesystem::path& root, const PackageSpec& spec) {
  std::string manifest = "{\n  \"appid\": \"" + spec.appid + "\",\n";
  if (!spec.category.empty()) manifest += "  \"category\": \"" + spec.category + "\",\n";
  manifest += "  \"pages\": [";
  for (std::size_t i = 0; i < spec.pages.size(); ++i)
    manifest += (i ? ", \"" : "\"") + spec.pages[i].path + "\"";
  manifest += "]\n}\n";
  write_file(root / "app.json", manifest);
  if (!spec.app_js.empty()) write_file(root / "app.js", spec.app_js);
  for (const auto& p : spec.pages) {
    if (!p.wxml.empty()) write_file(root / (p.path + ".wxml"), p.wxml);
    if (!p.js.empty()) write_file(root / (p.path + ".js"), p.js);
  }
}

/// The repository's samples/ directory.
inline std::filesystem::path samples_dir() { return CMCS_SAMPLES_DIR; }

}  // namespace cmcs::testing
