#include "slidegen/llm.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "http_util.hpp"
#include "slidegen/hash.hpp"

namespace slidegen::llm {

using nlohmann::json;

std::string to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::transport: return "transport";
    case ErrorKind::authentication: return "authentication";
    case ErrorKind::empty_response: return "empty_response";
    case ErrorKind::timeout: return "timeout";
    case ErrorKind::unscripted_prompt: return "unscripted_prompt";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

std::string ChatRequest::text() const {
  std::string out = system;
  for (const auto& p : parts) {
    if (p.kind != ContentPart::Kind::text) continue;
    out += "\n";
    out += p.value;
  }
  return out;
}

std::vector<std::string> ChatRequest::image_paths() const {
  std::vector<std::string> out;
  for (const auto& p : parts) {
    if (p.kind == ContentPart::Kind::image) out.push_back(p.value);
  }
  return out;
}

std::string fingerprint(const ChatRequest& req) { return hex64(fnv1a64(req.text())); }

bool Matcher::matches(const ChatRequest& req) const {
  if (kind == Kind::hash) return fingerprint(req) == pattern;
  return req.text().find(pattern) != std::string::npos;
}

MockBackend::MockBackend(std::vector<ScriptEntry> script) : script_(std::move(script)) {}

ChatResponse MockBackend::complete(const ChatRequest& req) {
  const std::string fp = fingerprint(req);
  for (std::size_t i = 0; i < script_.size(); ++i) {
    if (!script_[i].matcher.matches(req)) continue;
    std::lock_guard lock(mu_);
    log_.push_back({fp, static_cast<int>(i), script_[i].reply});
    return {script_[i].reply, std::nullopt};
  }
  {
    std::lock_guard lock(mu_);
    log_.push_back({fp, -1, ""});
  }
  throw BackendError(ErrorKind::unscripted_prompt, "no script entry matches prompt " + fp);
}

std::vector<ReplayRecord> MockBackend::replay_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::size_t MockBackend::call_count() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::unique_ptr<MockBackend> script_mock(std::vector<ScriptEntry> entries) {
  return std::make_unique<MockBackend>(std::move(entries));
}

json script_to_json(const std::vector<ScriptEntry>& script) {
  json out = json::array();
  for (const auto& e : script) {
    const char* key = e.matcher.kind == Matcher::Kind::hash ? "hash" : "substring";
    out.push_back({{key, e.matcher.pattern}, {"reply", e.reply}});
  }
  return out;
}

std::vector<ScriptEntry> script_from_json(const json& j) {
  std::vector<ScriptEntry> out;
  for (const auto& e : j) {
    ScriptEntry s;
    if (e.contains("hash")) {
      s.matcher = {Matcher::Kind::hash, e.at("hash").get<std::string>()};
    } else {
      s.matcher = {Matcher::Kind::substring, e.at("substring").get<std::string>()};
    }
    s.reply = e.at("reply").get<std::string>();
    out.push_back(std::move(s));
  }
  return out;
}

json replay_to_json(const std::vector<ReplayRecord>& log) {
  json out = json::array();
  for (const auto& r : log) out.push_back({{"fingerprint", r.fingerprint}, {"matched", r.matched}, {"reply", r.reply}});
  return out;
}

std::vector<ReplayRecord> replay_from_json(const json& j) {
  std::vector<ReplayRecord> out;
  for (const auto& r : j) {
    out.push_back({r.at("fingerprint").get<std::string>(), r.at("matched").get<int>(), r.at("reply").get<std::string>()});
  }
  return out;
}

void BackendConfig::validate() const {
  if (kind == Kind::http) {
    if (endpoint.empty()) throw BackendError(ErrorKind::config, "http backend requires an endpoint");
    if (model.empty()) throw BackendError(ErrorKind::config, "http backend requires a model");
  }
  if (retries < 0) throw BackendError(ErrorKind::config, "retries must be non-negative");
  if (!(timeout_s > 0)) throw BackendError(ErrorKind::config, "timeout must be positive");
}

namespace {

std::string base64(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BackendError(ErrorKind::config, "cannot read image part " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

HttpBackend::HttpBackend(BackendConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.kind = BackendConfig::Kind::http;
  cfg_.validate();
}

json HttpBackend::wire_body(const ChatRequest& req, const std::string& model) {
  json content = json::array();
  for (const auto& p : req.parts) {
    if (p.kind == ContentPart::Kind::text) {
      content.push_back({{"type", "text"}, {"text", p.value}});
    } else {
      content.push_back(
          {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64(read_file(p.value))}}}});
    }
  }
  json messages = json::array();
  if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
  messages.push_back({{"role", "user"}, {"content", content}});
  return {{"model", model}, {"messages", messages}, {"max_tokens", req.max_tokens}, {"temperature", req.temperature}};
}

ChatResponse HttpBackend::complete(const ChatRequest& req) {
  std::map<std::string, std::string> headers;
  const char* key = cfg_.api_key_env.empty() ? nullptr : std::getenv(cfg_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw BackendError(ErrorKind::authentication, "API key variable '" + cfg_.api_key_env + "' is not set");
  }
  headers["Authorization"] = std::string("Bearer ") + key;
  const std::string body = wire_body(req, cfg_.model).dump();

  std::optional<BackendError> last;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(cfg_.backoff_base_s * (1 << (attempt - 1))));
    }
    const auto res = detail::post_json(cfg_.endpoint, body, headers, cfg_.timeout_s);
    if (res.failure == detail::HttpFailure::timeout) {
      last.emplace(ErrorKind::timeout, res.failure_message);
      continue;
    }
    if (res.failure != detail::HttpFailure::none) {
      last.emplace(ErrorKind::transport, res.failure_message);
      continue;
    }
    if (res.status == 401 || res.status == 403) {
      throw BackendError(ErrorKind::authentication, "HTTP " + std::to_string(res.status));
    }
    if (res.status == 429 || res.status >= 500) {
      last.emplace(ErrorKind::transport, "HTTP " + std::to_string(res.status));
      continue;
    }
    if (res.status != 200) throw BackendError(ErrorKind::transport, "HTTP " + std::to_string(res.status));

    ChatResponse out;
    try {
      const json reply = json::parse(res.body);
      const json& content = reply.at("choices").at(0).at("message").at("content");
      if (content.is_string()) out.text = content.get<std::string>();
      if (reply.contains("usage")) {
        const json& u = reply.at("usage");
        out.usage = Usage{u.value("prompt_tokens", 0), u.value("completion_tokens", 0)};
      }
    } catch (const json::exception& e) {
      throw BackendError(ErrorKind::transport, std::string("malformed reply: ") + e.what());
    }
    if (out.text.empty()) throw BackendError(ErrorKind::empty_response, "model returned no text");
    return out;
  }
  throw *last;
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
  cfg.validate();
  if (cfg.kind == BackendConfig::Kind::http) return std::make_unique<HttpBackend>(cfg);
  std::vector<ScriptEntry> script;
  if (!cfg.script_path.empty()) {
    std::ifstream in(cfg.script_path);
    if (!in) throw BackendError(ErrorKind::config, "cannot open mock script " + cfg.script_path);
    try {
      script = script_from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw BackendError(ErrorKind::config, "malformed mock script " + cfg.script_path + ": " + e.what());
    }
  }
  return std::make_unique<MockBackend>(std::move(script));
}

ChatResponse complete(const ChatRequest& req, const BackendConfig& cfg) { return make_backend(cfg)->complete(req); }

}  // namespace slidegen::llm
