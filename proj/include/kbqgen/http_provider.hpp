#ifndef KBQGEN_HTTP_PROVIDER_HPP
#define KBQGEN_HTTP_PROVIDER_HPP

#include <cctype>
#include <chrono>
#include <cstdio>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kbqgen/error.hpp"
#include "kbqgen/expander.hpp"
#include "kbqgen/text.hpp"

namespace kbqgen {

enum class SuggestionFormat {
  json_string_array,  // ["s1", "s2", ...]
  json_nested_array,  // ["echoed query", ["s1", "s2", ...], ...]
};

inline SuggestionFormat parse_suggestion_format(std::string_view s) {
  if (s == "json_string_array") return SuggestionFormat::json_string_array;
  if (s == "json_nested_array") return SuggestionFormat::json_nested_array;
  throw Error("unknown suggestion parser: " + std::string(s));
}

/// RFC 3986 percent-encoding; only unreserved characters pass through.
inline std::string url_encode(std::string_view s) {
  static constexpr char hex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(hex[c >> 4]);
      out.push_back(hex[c & 15]);
    }
  }
  return out;
}

/// Extracts suggestion strings from a response body. Throws TransportError
/// when the body does not have the expected shape.
inline std::vector<std::string> parse_suggestion_body(std::string_view body,
                                                      SuggestionFormat format) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw TransportError("response body is not JSON");
  const nlohmann::json *list = &j;
  if (format == SuggestionFormat::json_nested_array) {
    if (!j.is_array() || j.size() < 2) throw TransportError("expected [query, [suggestions]]");
    list = &j[1];
  }
  if (!list->is_array()) throw TransportError("expected a JSON array of suggestions");
  std::vector<std::string> out;
  for (const auto &item : *list) {
    if (!item.is_string()) throw TransportError("suggestion is not a string");
    std::string text = normalize(item.get<std::string>());
    if (!text.empty()) out.push_back(std::move(text));
  }
  return out;
}

/// Live suggestion endpoint reached with GET. The endpoint template holds a
/// "{query}" slot, e.g. "http://localhost:8080/complete?q={query}".
class HttpProvider : public SuggestionProvider {
 public:
  HttpProvider(std::string endpoint_template, SuggestionFormat format,
               std::chrono::milliseconds min_interval = std::chrono::milliseconds(0),
               std::chrono::seconds timeout = std::chrono::seconds(10))
      : format_(format), min_interval_(min_interval), timeout_(timeout) {
    const auto scheme_end = endpoint_template.find("://");
    if (scheme_end == std::string::npos) throw Error("endpoint needs a scheme: " + endpoint_template);
    const auto path_start = endpoint_template.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      origin_ = endpoint_template;
      target_template_ = "/";
    } else {
      origin_ = endpoint_template.substr(0, path_start);
      target_template_ = endpoint_template.substr(path_start);
    }
    if (target_template_.find("{query}") == std::string::npos)
      throw Error("endpoint template has no {query} slot: " + endpoint_template);
  }

  std::vector<std::string> suggest(const std::string &query) override {
    wait_turn();
    std::string target = target_template_;
    target.replace(target.find("{query}"), 7, url_encode(query));

    httplib::Client client(origin_);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    auto res = client.Get(target);
    last_call_ = std::chrono::steady_clock::now();
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()));
    if (res->status < 200 || res->status >= 300)
      throw TransportError("HTTP status " + std::to_string(res->status));
    return parse_suggestion_body(res->body, format_);
  }

 private:
  void wait_turn() {
    if (!last_call_ || min_interval_.count() == 0) return;
    std::this_thread::sleep_until(*last_call_ + min_interval_);
  }

  std::string origin_;
  std::string target_template_;
  SuggestionFormat format_;
  std::chrono::milliseconds min_interval_;
  std::chrono::seconds timeout_;
  std::optional<std::chrono::steady_clock::time_point> last_call_;
};

inline std::unique_ptr<SuggestionProvider> http_provider(const std::string &endpoint_template,
                                                         SuggestionFormat format,
                                                         const ExpansionConfig &config) {
  return std::make_unique<HttpProvider>(endpoint_template, format,
                                        std::chrono::milliseconds(config.rate_limit_ms));
}

}  // namespace kbqgen

#endif
