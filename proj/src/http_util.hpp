#pragma once

#include <map>
#include <string>

namespace slidegen::detail {

enum class HttpFailure { none, connect, timeout, other };

struct HttpResult {
  int status = 0;
  std::string body;
  HttpFailure failure = HttpFailure::none;
  std::string failure_message;
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

ParsedUrl parse_url(const std::string& url);

/// POSTs a JSON body. Transport failures are reported through `failure`, never thrown.
HttpResult post_json(const std::string& url, const std::string& body, const std::map<std::string, std::string>& headers,
                     double timeout_s);

}  // namespace slidegen::detail
