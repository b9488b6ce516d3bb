#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cmcs/common.hpp"
#include "cmcs/detail/psl_snapshot.inc"

namespace cmcs {

/// Public Suffix List matcher. Rules use the list's own syntax: plain,
/// wildcard (`*.ck`) and exception (`!www.ck`). Hostnames are matched
/// label-wise and case-insensitively; no IDNA conversion is done.
class PublicSuffixList {
 public:
  PublicSuffixList() = default;

  static PublicSuffixList from_text(std::string_view text) {
    PublicSuffixList psl;
    for (const auto& raw : text::split(text, '\n')) {
      auto line = text::trim(raw);
      if (line.empty() || text::starts_with(line, "//")) continue;
      const auto ws = line.find_first_of(" \t");
      if (ws != std::string::npos) line = line.substr(0, ws);
      psl.add_rule(std::string(line));
    }
    return psl;
  }

  /// The snapshot compiled into the library.
  static const PublicSuffixList& builtin() {
    static const PublicSuffixList psl = [] {
      std::string all;
      for (const char* chunk : kPslSnapshotChunks) all += chunk;
      return from_text(all);
    }();
    return psl;
  }

  static constexpr const char* builtin_version() { return CMCS_PSL_SNAPSHOT_VERSION; }

  void add_rule(std::string rule) {
    rule = text::to_lower(rule);
    if (text::starts_with(rule, "!"))
      exceptions_.insert(rule.substr(1));
    else
      rules_.insert(std::move(rule));
  }

  std::size_t rule_count() const { return rules_.size() + exceptions_.size(); }

  /// Number of trailing labels forming the public suffix of `host`.
  std::size_t suffix_labels(std::string_view host) const {
    const auto labels = text::split(text::to_lower(host), '.');
    const std::size_t n = labels.size();
    std::size_t best = 1;  // implicit "*" rule
    for (std::size_t i = 0; i < n; ++i) {
      const auto candidate = join_from(labels, i);
      if (exceptions_.count(candidate)) return n - i - 1;
      const std::size_t len = n - i;
      if (len > best && rules_.count(candidate)) best = len;
      if (i + 1 < n && len > best && rules_.count("*." + join_from(labels, i + 1))) best = len;
    }
    return best;
  }

  std::string public_suffix(std::string_view host) const {
    const auto labels = text::split(text::to_lower(host), '.');
    const auto k = std::min(suffix_labels(host), labels.size());
    return join_from(labels, labels.size() - k);
  }

  /// Public suffix plus one label; the host itself when it is a bare suffix.
  std::string registrable_domain(std::string_view host) const {
    const auto labels = text::split(text::to_lower(host), '.');
    const auto k = suffix_labels(host);
    if (k >= labels.size()) return text::to_lower(host);
    return join_from(labels, labels.size() - k - 1);
  }

 private:
  static std::string join_from(const std::vector<std::string>& labels, std::size_t i) {
    std::string out;
    for (std::size_t j = i; j < labels.size(); ++j) {
      if (!out.empty()) out += '.';
      out += labels[j];
    }
    return out;
  }

  std::unordered_set<std::string> rules_;
  std::unordered_set<std::string> exceptions_;
};

}  // namespace cmcs
