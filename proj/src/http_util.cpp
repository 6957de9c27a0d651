#include "http_util.hpp"

#include <httplib.h>

#include <chrono>
#include <stdexcept>

namespace slidegen::detail {

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw std::invalid_argument("URL has no scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpResult post_json(const std::string& url, const std::string& body, const std::map<std::string, std::string>& headers,
                     double timeout_s) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::duration<double>(timeout_s));
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  HttpResult out;
  auto res = client.Post(parsed.path, hdrs, body, "application/json");
  if (!res) {
    const httplib::Error err = res.error();
    out.failure_message = httplib::to_string(err);
    switch (err) {
      case httplib::Error::Connection:
        out.failure = HttpFailure::connect;
        break;
      case httplib::Error::ConnectionTimeout:
      case httplib::Error::Read:
        out.failure = HttpFailure::timeout;
        break;
      default:
        out.failure = HttpFailure::other;
        break;
    }
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

}  // namespace slidegen::detail
