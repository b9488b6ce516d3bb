#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cmcs/categories.hpp"
#include "cmcs/common.hpp"

namespace cmcs {

/// Sources and keyword rules that decide which values count as privileged.
///
/// Keyword rules match as case-insensitive substrings of an identifier or
/// dotted path. When two matches overlap, the longer keyword wins and the
/// shorter one is discarded. API sources match a trailing run of path
/// segments (`getLocation` matches `wx.getLocation`, and
/// `detail.userInfo.phonenumber` matches `args.detail.userInfo.phonenumber`).
///
/// Config file format, one entry per line, `#` starts a comment:
///
///     phone=PhoneNumber
///     api:getLocation=Latitude,Longitude
class TaintCatalog {
 public:
  struct ApiSource {
    std::vector<std::string> suffix;  // lowercase segments
    CategorySet categories;
  };

  TaintCatalog() = default;

  static const TaintCatalog& defaults() {
    static const TaintCatalog catalog = parse(default_config_text());
    return catalog;
  }

  static std::string_view default_config_text() {
    return R"(# Default privileged-data catalog.
# keyword=Category matches case-insensitive substrings of identifiers/paths.
phone=PhoneNumber
mobile=PhoneNumber
tel=PhoneNumber
nick=Nickname
username=Nickname
lat=Latitude
latitude=Latitude
lng=Longitude
lon=Longitude
longitude=Longitude
avatar=Avatar
headimg=Avatar
uid=UserId
userid=UserId
user_id=UserId
openid=UserId
distinct_id=UserId
device_id=UserId
# api:<callee or field-path suffix>=Cat1,Cat2
api:getLocation=Latitude,Longitude
api:getFuzzyLocation=Latitude,Longitude
api:chooseLocation=Latitude,Longitude
api:getUserInfo=Nickname,Avatar
api:getUserProfile=Nickname,Avatar
api:detail.userInfo.phonenumber=PhoneNumber
api:detail.phoneNumber=PhoneNumber
)";
  }

  /// Throws Error(BadConfig) on a malformed line.
  static TaintCatalog parse(std::string_view config) {
    TaintCatalog cat;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(config, '\n')) {
      ++line_no;
      auto line = std::string(text::trim(raw));
      if (auto hash = line.find('#'); hash != std::string::npos)
        line = std::string(text::trim(std::string_view(line).substr(0, hash)));
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == line.size())
        throw Error(ErrorCode::BadConfig,
                    "line " + std::to_string(line_no) + ": expected key=value");
      const auto key = std::string(text::trim(std::string_view(line).substr(0, eq)));
      const auto value = std::string(text::trim(std::string_view(line).substr(eq + 1)));
      if (text::starts_with(key, "api:")) {
        ApiSource src;
        src.suffix = text::split(text::to_lower(key.substr(4)), '.');
        for (const auto& name : text::split(value, ',')) {
          auto c = parse_category(text::trim(name));
          if (!c)
            throw Error(ErrorCode::BadConfig, "line " + std::to_string(line_no) +
                                                  ": unknown category '" + name + "'");
          src.categories.insert(*c);
        }
        for (const auto& seg : src.suffix)
          if (seg.empty())
            throw Error(ErrorCode::BadConfig,
                        "line " + std::to_string(line_no) + ": empty path segment");
        cat.api_sources_.push_back(std::move(src));
      } else {
        auto c = parse_category(value);
        if (!c)
          throw Error(ErrorCode::BadConfig, "line " + std::to_string(line_no) +
                                                ": unknown category '" + value + "'");
        cat.keywords_[text::to_lower(key)] = *c;
      }
    }
    return cat;
  }

  static TaintCatalog load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot read taint catalog '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  const std::map<std::string, SensitiveCategory>& keywords() const {
    return keywords_;
  }
  const std::vector<ApiSource>& api_sources() const { return api_sources_; }

  /// Keyword classification of a name or dotted path.
  CategorySet classify(std::string_view name_or_path) const {
    const auto lower = text::to_lower(name_or_path);
    struct Match {
      std::size_t pos, len;
      SensitiveCategory cat;
    };
    std::vector<Match> matches;
    for (const auto& [kw, cat] : keywords_) {
      for (auto pos = lower.find(kw); pos != std::string::npos;
           pos = lower.find(kw, pos + 1))
        matches.push_back({pos, kw.size(), cat});
    }
    std::sort(matches.begin(), matches.end(), [](const Match& a, const Match& b) {
      if (a.len != b.len) return a.len > b.len;
      return a.pos < b.pos;
    });
    CategorySet out;
    std::vector<Match> accepted;
    for (const auto& m : matches) {
      const bool overlaps = std::any_of(accepted.begin(), accepted.end(), [&](const Match& a) {
        return m.pos < a.pos + a.len && a.pos < m.pos + m.len;
      });
      if (overlaps) continue;
      accepted.push_back(m);
      out.insert(m.cat);
    }
    return out;
  }

  /// Union of categories of every API source whose suffix ends `segments`.
  CategorySet api_categories(const std::vector<std::string>& segments) const {
    CategorySet out;
    for (const auto& src : api_sources_) {
      if (src.suffix.size() > segments.size()) continue;
      const auto offset = segments.size() - src.suffix.size();
      bool match = true;
      for (std::size_t i = 0; i < src.suffix.size() && match; ++i)
        match = text::to_lower(segments[offset + i]) == src.suffix[i];
      if (match) out |= src.categories;
    }
    return out;
  }

  /// Same text format accepted by parse().
  std::string serialize() const {
    std::string out;
    for (const auto& [kw, cat] : keywords_) out += kw + "=" + to_string(cat) + "\n";
    for (const auto& src : api_sources_) {
      out += "api:" + text::join(src.suffix, ".") + "=";
      out += text::join(src.categories.names(), ",") + "\n";
    }
    return out;
  }

 private:
  std::map<std::string, SensitiveCategory> keywords_;
  std::vector<ApiSource> api_sources_;
};

inline CategorySet classify_sensitive(std::string_view name_or_path,
                                      const TaintCatalog& catalog = TaintCatalog::defaults()) {
  return catalog.classify(name_or_path);
}

}  // namespace cmcs
