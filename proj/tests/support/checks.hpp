#pragma once

#include <set>
#include <string>
#include <vector>

#include "cmcs/categories.hpp"
#include "taint_oracle.hpp"
#include "url_oracle.hpp"

namespace cmcs::testing {

/// Static resolution of a generated program compared with its concrete runs.
struct UrlCheck {
  std::size_t concrete = 0;           // distinct concrete src strings
  std::vector<std::string> missed;    // concrete URLs no static URL matches
  std::vector<std::string> not_urls;  // concrete srcs without a host (should stay empty)
  std::set<std::string> static_hosts;
  std::set<std::string> concrete_hosts;
};

UrlCheck check_url_program(const UrlProgram& p);

struct TaintResult {
  CategorySet backward;  // union over every postMessage site
  CategorySet forward;   // the bindmessage handler
  std::size_t sinks = 0;
  bool parsed_clean = true;
};

TaintResult run_taint_fixture(const TaintFixture& fx);

/// Cookies (`domain|name=value`) returned by each `get` of a scenario, in
/// order. `mode` is "shared", "isolated" or "consent".
std::vector<std::set<std::string>> visible_per_read(const std::string& script, const std::string& mode);

/// isolated ⊆ consent ⊆ shared at every read. On failure `why` says where.
bool visibility_monotone(const std::string& script, std::string* why = nullptr);

}  // namespace cmcs::testing
