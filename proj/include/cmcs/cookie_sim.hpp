#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "cmcs/url_resolver.hpp"
#include "json.hpp"

namespace cmcs {

enum class IsolationMode { SharedGlobal, IsolatedPerApp, ConsentGated };

inline const char* to_string(IsolationMode m) {
  switch (m) {
    case IsolationMode::SharedGlobal: return "shared";
    case IsolationMode::IsolatedPerApp: return "isolated";
    case IsolationMode::ConsentGated: return "consent";
  }
  return "?";
}

inline std::optional<IsolationMode> parse_isolation_mode(std::string_view s) {
  if (s == "shared") return IsolationMode::SharedGlobal;
  if (s == "isolated") return IsolationMode::IsolatedPerApp;
  if (s == "consent") return IsolationMode::ConsentGated;
  return std::nullopt;
}

using Tick = std::uint64_t;

struct CookieRecord {
  std::string name;
  std::string value;
  std::string domain;  // ".host.com" covers subdomains; "host.com" is host-only
  std::string path = "/";
  std::optional<Tick> expires;  // nullopt: session cookie
  Tick created_at = 0;
  std::string writer_app;

  auto operator<=>(const CookieRecord&) const = default;
};

struct WebViewSession {
  std::string app_id;
  std::string current_url;
  std::string host;
  std::string path;
  std::string store_key;
};

/// host equals the cookie domain, or the cookie domain is dot-prefixed and
/// host is that domain or one of its subdomains.
inline bool domain_matches(std::string_view host, std::string_view cookie_domain) {
  if (cookie_domain.empty()) return false;
  if (cookie_domain.front() != '.') return host == cookie_domain;
  const auto bare = cookie_domain.substr(1);
  if (host == bare) return true;
  return host.size() > cookie_domain.size() && host.substr(host.size() - cookie_domain.size()) == cookie_domain;
}

inline bool path_matches(std::string_view request_path, std::string_view cookie_path) {
  if (cookie_path.empty() || cookie_path == "/") return true;
  if (request_path.substr(0, cookie_path.size()) != cookie_path) return false;
  return request_path.size() == cookie_path.size() || cookie_path.back() == '/' ||
         request_path[cookie_path.size()] == '/';
}

/// Cookie storage of one host app process.
class CookieJar {
 public:
  explicit CookieJar(IsolationMode mode = IsolationMode::SharedGlobal) : mode_(mode) {}

  IsolationMode mode() const { return mode_; }

  std::string store_key(const std::string& app_id) const {
    return mode_ == IsolationMode::IsolatedPerApp ? app_id : std::string("*");
  }

  void put(const std::string& store, CookieRecord rec) {
    entries_[{store, rec.domain, rec.name}] = std::move(rec);
  }

  std::vector<CookieRecord> records(const std::string& store) const {
    std::vector<CookieRecord> out;
    for (const auto& [k, v] : entries_)
      if (std::get<0>(k) == store) out.push_back(v);
    return out;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  IsolationMode mode_;
  std::map<std::tuple<std::string, std::string, std::string>, CookieRecord> entries_;
};

/// One line of the simulator trace.
struct TraceEvent {
  std::uint64_t seq = 0;
  Tick tick = 0;
  std::string event;
  nlohmann::json fields = nlohmann::json::object();

  nlohmann::json to_json() const {
    nlohmann::json j = fields;
    j["seq"] = seq;
    j["tick"] = tick;
    j["event"] = event;
    return j;
  }
};

inline nlohmann::json cookie_json(const CookieRecord& r) {
  nlohmann::json j{{"name", r.name},   {"value", r.value},         {"domain", r.domain},
                   {"path", r.path},   {"writer", r.writer_app},   {"created_at", r.created_at}};
  j["expires"] = r.expires ? nlohmann::json(*r.expires) : nlohmann::json("session");
  return j;
}

/// A host app with web-view sessions over one cookie jar. Session cookies
/// live as long as the HostEnv; closing a mini-program keeps them.
class HostEnv {
 public:
  explicit HostEnv(IsolationMode mode = IsolationMode::SharedGlobal) : jar_(mode) {}

  IsolationMode mode() const { return jar_.mode(); }
  Tick now() const { return clock_; }
  const CookieJar& jar() const { return jar_; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  bool collusion_demonstrated() const { return collusion_; }

  /// Throws Error(MalformedUrl) when `url` lacks scheme or host.
  const WebViewSession& open_webview(const std::string& app_id, const std::string& url) {
    const auto r = resolve_url_value(AbstractValue::constant(url));
    if (!r.resolved() || r.scheme.empty())
      throw Error(ErrorCode::MalformedUrl, "cannot open '" + url + "': need scheme and host");
    WebViewSession s;
    s.app_id = app_id;
    s.current_url = url;
    s.host = r.host;
    s.path = r.path.empty() ? "/" : r.path;
    s.store_key = jar_.store_key(app_id);
    sessions_[app_id] = s;
    log("open", {{"app", app_id}, {"url", url}, {"store", s.store_key}});
    return sessions_[app_id];
  }

  void close_app(const std::string& app_id) {
    session(app_id);
    sessions_.erase(app_id);
    log("close", {{"app", app_id}});
  }

  /// Stores `rec` for the session's host. Empty domain means host-only.
  /// Returns false (and logs `rejected`) when the domain does not cover the host.
  bool set_cookie(const std::string& app_id, CookieRecord rec) {
    const auto& s = session(app_id);
    rec.domain = rec.domain.empty() ? s.host : text::to_lower(rec.domain);
    if (rec.path.empty()) rec.path = "/";
    rec.created_at = clock_;
    rec.writer_app = app_id;
    if (!domain_matches(s.host, rec.domain)) {
      log("rejected", {{"app", app_id}, {"cookie", cookie_json(rec)}, {"host", s.host}});
      return false;
    }
    log("set", {{"app", app_id}, {"cookie", cookie_json(rec)}});
    jar_.put(s.store_key, std::move(rec));
    return true;
  }

  /// Cookies visible to the app's current page. Logs `read`, plus
  /// `consent_required` for withheld records and `collusion_demonstrated`
  /// for each returned record written by another app.
  std::vector<CookieRecord> get_cookies(const std::string& app_id) {
    const auto& s = session(app_id);
    std::vector<CookieRecord> visible;
    std::vector<CookieRecord> withheld;
    for (const auto& rec : jar_.records(s.store_key)) {
      if (rec.expires && clock_ > *rec.expires) continue;
      if (!domain_matches(s.host, rec.domain) || !path_matches(s.path, rec.path)) continue;
      if (mode() == IsolationMode::ConsentGated && rec.writer_app != app_id && !granted(app_id, rec.domain)) {
        withheld.push_back(rec);
        continue;
      }
      visible.push_back(rec);
    }
    auto cookies = nlohmann::json::array();
    for (const auto& r : visible) cookies.push_back(cookie_json(r));
    log("read", {{"app", app_id}, {"host", s.host}, {"cookies", cookies}});
    for (const auto& r : withheld)
      log("consent_required", {{"app", app_id}, {"domain", r.domain}, {"name", r.name}, {"writer", r.writer_app}});
    for (const auto& r : visible) {
      if (r.writer_app == app_id) continue;
      collusion_ = true;
      log("collusion_demonstrated",
          {{"reader", app_id}, {"writer", r.writer_app}, {"name", r.name}, {"value", r.value}, {"domain", r.domain}});
    }
    return visible;
  }

  void advance_clock(Tick n) {
    clock_ += n;
    log("tick", {{"by", n}});
  }

  /// Lets `app_id` read records other apps wrote for `domain` or its
  /// subdomains (ConsentGated mode).
  void grant_consent(const std::string& app_id, const std::string& domain) {
    auto d = text::to_lower(domain);
    while (!d.empty() && d.front() == '.') d.erase(0, 1);
    grants_.insert({app_id, d});
    log("consent_granted", {{"app", app_id}, {"domain", d}});
  }

  bool has_session(const std::string& app_id) const { return sessions_.count(app_id) > 0; }

 private:
  const WebViewSession& session(const std::string& app_id) const {
    auto it = sessions_.find(app_id);
    if (it == sessions_.end()) throw Error(ErrorCode::UnopenedSession, "no open web-view for app '" + app_id + "'");
    return it->second;
  }

  bool granted(const std::string& app_id, const std::string& cookie_domain) const {
    std::string d = cookie_domain;
    while (!d.empty() && d.front() == '.') d.erase(0, 1);
    for (const auto& [app, g] : grants_) {
      if (app != app_id) continue;
      if (d == g || (d.size() > g.size() && text::ends_with(d, "." + g))) return true;
    }
    return false;
  }

  void log(std::string event, nlohmann::json fields) {
    TraceEvent e;
    e.seq = trace_.size();
    e.tick = clock_;
    e.event = std::move(event);
    e.fields = std::move(fields);
    trace_.push_back(std::move(e));
  }

  CookieJar jar_;
  Tick clock_ = 0;
  std::map<std::string, WebViewSession> sessions_;
  std::set<std::pair<std::string, std::string>> grants_;
  std::vector<TraceEvent> trace_;
  bool collusion_ = false;
};

// ---------------------------------------------------------------------------
// Scenario DSL
// ---------------------------------------------------------------------------

enum class StepKind { Open, Set, Get, Close, Tick, Grant };

struct ScenarioStep {
  StepKind kind = StepKind::Get;
  std::string app;
  std::string url;     // Open
  CookieRecord cookie; // Set
  Tick ticks = 0;      // Tick
  std::string domain;  // Grant
  std::size_t line = 0;
};

using Scenario = std::vector<ScenarioStep>;

/// Line-oriented DSL:
///   open <app> <url>
///   set <app> <name>=<value> [expires=<tick>] [domain=<d>] [path=<p>]
///   get <app> | close <app> | tick <n> | grant <app> <domain>
/// Blank lines and `#` comments are ignored. Throws Error(ScenarioSyntax).
inline Scenario parse_scenario(std::string_view source) {
  Scenario out;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) {
    throw Error(ErrorCode::ScenarioSyntax, "line " + std::to_string(line_no) + ": " + msg);
  };
  auto parse_tick = [&](const std::string& s) -> Tick {
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      fail("expected a non-negative integer, got '" + s + "'");
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      fail("integer out of range: '" + s + "'");
    }
    return 0;
  };
  for (const auto& raw : text::split(source, '\n')) {
    ++line_no;
    auto line = std::string(raw);
    if (auto hash = line.find('#'); hash != std::string::npos && (hash == 0 || text::is_space(line[hash - 1])))
      line.resize(hash);
    std::vector<std::string> words;
    for (const auto& w : text::split(line, ' ')) {
      auto t = std::string(text::trim(w));
      if (!t.empty()) words.push_back(t);
    }
    if (words.empty()) continue;
    ScenarioStep step;
    step.line = line_no;
    const auto& op = words[0];
    auto need = [&](std::size_t n) {
      if (words.size() != n) fail("'" + op + "' takes " + std::to_string(n - 1) + " argument(s)");
    };
    if (op == "open") {
      need(3);
      step.kind = StepKind::Open;
      step.app = words[1];
      step.url = words[2];
    } else if (op == "set") {
      if (words.size() < 3) fail("'set' needs <app> <name>=<value>");
      step.kind = StepKind::Set;
      step.app = words[1];
      const auto eq = words[2].find('=');
      if (eq == std::string::npos || eq == 0) fail("expected <name>=<value>");
      step.cookie.name = words[2].substr(0, eq);
      step.cookie.value = words[2].substr(eq + 1);
      step.cookie.path.clear();
      for (std::size_t i = 3; i < words.size(); ++i) {
        const auto e = words[i].find('=');
        if (e == std::string::npos) fail("expected attribute=value, got '" + words[i] + "'");
        const auto key = words[i].substr(0, e);
        const auto val = words[i].substr(e + 1);
        if (key == "expires")
          step.cookie.expires = parse_tick(val);
        else if (key == "domain")
          step.cookie.domain = val;
        else if (key == "path")
          step.cookie.path = val;
        else
          fail("unknown cookie attribute '" + key + "'");
      }
    } else if (op == "get") {
      need(2);
      step.kind = StepKind::Get;
      step.app = words[1];
    } else if (op == "close") {
      need(2);
      step.kind = StepKind::Close;
      step.app = words[1];
    } else if (op == "tick") {
      need(2);
      step.kind = StepKind::Tick;
      step.ticks = parse_tick(words[1]);
    } else if (op == "grant") {
      need(3);
      step.kind = StepKind::Grant;
      step.app = words[1];
      step.domain = words[2];
    } else {
      fail("unknown step '" + op + "'");
    }
    out.push_back(std::move(step));
  }
  return out;
}

/// Executes the steps in order. Throws Error(UnopenedSession) for a step on
/// an app without an open web-view, Error(MalformedUrl) for a bad open URL.
inline const std::vector<TraceEvent>& run_scenario(HostEnv& env, const Scenario& steps) {
  for (const auto& s : steps) {
    try {
      switch (s.kind) {
        case StepKind::Open: env.open_webview(s.app, s.url); break;
        case StepKind::Set: env.set_cookie(s.app, s.cookie); break;
        case StepKind::Get: env.get_cookies(s.app); break;
        case StepKind::Close: env.close_app(s.app); break;
        case StepKind::Tick: env.advance_clock(s.ticks); break;
        case StepKind::Grant: env.grant_consent(s.app, s.domain); break;
      }
    } catch (const Error& e) {
      std::string msg = e.what();
      const std::string prefix = std::string(to_string(e.code())) + ": ";
      if (text::starts_with(msg, prefix)) msg.erase(0, prefix.size());
      throw Error(e.code(), "line " + std::to_string(s.line) + ": " + msg);
    }
  }
  return env.trace();
}

/// JSON-lines rendering of a trace.
inline std::string trace_to_jsonl(const std::vector<TraceEvent>& trace) {
  std::string out;
  for (const auto& e : trace) {
    out += e.to_json().dump();
    out += '\n';
  }
  return out;
}

}  // namespace cmcs
