#pragma once

#include <nlohmann/json.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Chat-completion backends: a scripted deterministic mock and an HTTP client
// speaking the common messages-array wire format.

namespace slidegen::llm {

struct ContentPart {
  enum class Kind { text, image };
  Kind kind = Kind::text;
  std::string value;  // text, or an image file path

  static ContentPart text(std::string t) { return {Kind::text, std::move(t)}; }
  static ContentPart image(std::string path) { return {Kind::image, std::move(path)}; }
  friend bool operator==(const ContentPart&, const ContentPart&) = default;
};

struct ChatRequest {
  std::string system;
  std::vector<ContentPart> parts;
  int max_tokens = 4096;
  double temperature = 0.0;

  /// System text followed by every text part, newline separated. Images are excluded.
  std::string text() const;
  std::vector<std::string> image_paths() const;
  friend bool operator==(const ChatRequest&, const ChatRequest&) = default;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  std::optional<Usage> usage;
};

enum class ErrorKind { transport, authentication, empty_response, timeout, unscripted_prompt, config };

std::string to_string(ErrorKind k);

class BackendError : public std::runtime_error {
 public:
  BackendError(ErrorKind kind, const std::string& what) : std::runtime_error(to_string(kind) + ": " + what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// Stable hex digest of the request's text content.
std::string fingerprint(const ChatRequest& req);

/// Implementations must be safe to call from several threads at once.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual ChatResponse complete(const ChatRequest& req) = 0;
};

struct Matcher {
  enum class Kind { substring, hash };
  Kind kind = Kind::substring;
  std::string pattern;

  bool matches(const ChatRequest& req) const;
};

struct ScriptEntry {
  Matcher matcher;
  std::string reply;
};

struct ReplayRecord {
  std::string fingerprint;
  int matched = -1;  // script index, -1 when unscripted
  std::string reply;
  friend bool operator==(const ReplayRecord&, const ReplayRecord&) = default;
};

/// Replies with the first script entry whose matcher accepts the request.
class MockBackend final : public Backend {
 public:
  explicit MockBackend(std::vector<ScriptEntry> script);
  ChatResponse complete(const ChatRequest& req) override;

  std::vector<ReplayRecord> replay_log() const;
  std::size_t call_count() const;

 private:
  std::vector<ScriptEntry> script_;
  mutable std::mutex mu_;
  std::vector<ReplayRecord> log_;
};

std::unique_ptr<MockBackend> script_mock(std::vector<ScriptEntry> entries);

nlohmann::json script_to_json(const std::vector<ScriptEntry>& script);
std::vector<ScriptEntry> script_from_json(const nlohmann::json& j);

nlohmann::json replay_to_json(const std::vector<ReplayRecord>& log);
std::vector<ReplayRecord> replay_from_json(const nlohmann::json& j);

struct BackendConfig {
  enum class Kind { mock, http };
  Kind kind = Kind::mock;
  std::string endpoint;  // full URL of the chat-completions route
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_s = 120.0;
  int retries = 2;
  double backoff_base_s = 1.0;
  std::string script_path;  // mock only

  /// Throws BackendError(config) when required fields are missing.
  void validate() const;
};

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig cfg);
  ChatResponse complete(const ChatRequest& req) override;

  /// Request body sent on the wire; images are inlined as base64 data URLs.
  static nlohmann::json wire_body(const ChatRequest& req, const std::string& model);

 private:
  BackendConfig cfg_;
};

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg);

/// One-shot completion through a backend built from `cfg`.
ChatResponse complete(const ChatRequest& req, const BackendConfig& cfg);

}  // namespace slidegen::llm
