#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slidegen/checker.hpp"

// Client side of the runner protocol: one JSON object per line over the
// stdin/stdout of a long-lived child process, one reply per request.
//
// request: {"id": n, "op": "syntax_check|execute|extract|render",
//           "code"?: str, "path"?: str, "workdir"?: str, "timeout": seconds}
// reply:   {"id": n, "op": ..., "ok": bool,
//           "error"?: {"kind", "message", "traceback"}, "payload"?: any}

namespace slidegen::runner {

enum class Op { syntax_check, execute, extract, render };

std::string to_string(Op op);
Op parse_op(const std::string& s);

struct RunnerRequest {
  Op op = Op::syntax_check;
  std::string code;
  std::string path;
  std::string workdir;
  double timeout_s = 30.0;
};

struct RunnerFailure {
  std::string kind;
  std::string message;
  std::string traceback;
};

struct RunnerReply {
  Op op = Op::syntax_check;
  bool ok = false;
  std::optional<RunnerFailure> error;
  nlohmann::json payload;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json encode_request(const RunnerRequest& req, long long id);

/// Validates shape and the ok/error exclusivity of a reply.
RunnerReply decode_reply(const nlohmann::json& j);

/// Spawns `argv` and exchanges requests serially; calls are mutex-guarded.
class RunnerClient {
 public:
  explicit RunnerClient(std::vector<std::string> argv);
  ~RunnerClient();
  RunnerClient(const RunnerClient&) = delete;
  RunnerClient& operator=(const RunnerClient&) = delete;

  RunnerReply call(const RunnerRequest& req);
  long long requests_sent() const;

 private:
  std::string read_line(double timeout_s);
  void shutdown();

  int fd_ = -1;
  int pid_ = -1;
  long long next_id_ = 1;
  std::string buffer_;
  mutable std::mutex mu_;
};

/// Formats a failed reply as feedback text for a refinement prompt.
std::string describe_failure(const RunnerReply& reply);

/// Snippet-stage probe: parses code in the runner's fragment harness.
class SyntaxChecker final : public Checker {
 public:
  SyntaxChecker(RunnerClient& client, double timeout_s) : client_(client), timeout_s_(timeout_s) {}
  CheckResult check(const std::string& code) override;

 private:
  RunnerClient& client_;
  double timeout_s_;
};

/// Assembly-stage probe: executes the full program inside `workdir`.
class ExecutionChecker final : public Checker {
 public:
  ExecutionChecker(RunnerClient& client, std::filesystem::path workdir, double timeout_s)
      : client_(client), workdir_(std::move(workdir)), timeout_s_(timeout_s) {}
  CheckResult check(const std::string& code) override;
  const std::optional<std::string>& last_deck() const { return last_deck_; }

 private:
  RunnerClient& client_;
  std::filesystem::path workdir_;
  double timeout_s_;
  std::optional<std::string> last_deck_;
};

}  // namespace slidegen::runner
