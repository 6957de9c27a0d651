#include "slidegen/runner_client.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

namespace slidegen::runner {

using nlohmann::json;

std::string to_string(Op op) {
  switch (op) {
    case Op::syntax_check: return "syntax_check";
    case Op::execute: return "execute";
    case Op::extract: return "extract";
    case Op::render: return "render";
  }
  return "unknown";
}

Op parse_op(const std::string& s) {
  if (s == "syntax_check") return Op::syntax_check;
  if (s == "execute") return Op::execute;
  if (s == "extract") return Op::extract;
  if (s == "render") return Op::render;
  throw ProtocolError("unknown runner op '" + s + "'");
}

json encode_request(const RunnerRequest& req, long long id) {
  if (!(req.timeout_s > 0)) throw ProtocolError("runner timeout must be positive");
  json j = {{"id", id}, {"op", to_string(req.op)}, {"timeout", req.timeout_s}};
  if (!req.code.empty()) j["code"] = req.code;
  if (!req.path.empty()) j["path"] = req.path;
  if (!req.workdir.empty()) j["workdir"] = req.workdir;
  return j;
}

RunnerReply decode_reply(const json& j) {
  try {
    RunnerReply r;
    r.op = parse_op(j.at("op").get<std::string>());
    r.ok = j.at("ok").get<bool>();
    const bool has_error = j.contains("error") && !j.at("error").is_null();
    if (r.ok == has_error) throw ProtocolError("reply must carry exactly one of ok=true or an error");
    if (has_error) {
      const json& e = j.at("error");
      r.error = RunnerFailure{e.value("kind", std::string{"unknown"}), e.value("message", std::string{}),
                              e.value("traceback", std::string{})};
    }
    if (j.contains("payload")) r.payload = j.at("payload");
    return r;
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed runner reply: ") + e.what());
  }
}

RunnerClient::RunnerClient(std::vector<std::string> argv) {
  if (argv.empty()) throw ProtocolError("runner command is empty");
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw ProtocolError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  std::vector<char*> args;
  for (auto& a : argv) args.push_back(a.data());
  args.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw ProtocolError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  ::close(fds[1]);
  fd_ = fds[0];
  pid_ = pid;
}

RunnerClient::~RunnerClient() { shutdown(); }

void RunnerClient::shutdown() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    for (int i = 0; i < 50; ++i) {
      if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

std::string RunnerClient::read_line(double timeout_s) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw ProtocolError("runner did not reply in time");
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(left.count()));
    if (rc < 0 && errno == EINTR) continue;
    if (rc < 0) throw ProtocolError(std::string("poll failed: ") + std::strerror(errno));
    if (rc == 0) continue;
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n == 0) throw ProtocolError("runner process closed its output");
    if (n < 0) {
      if (errno == EINTR) continue;
      throw ProtocolError(std::string("read failed: ") + std::strerror(errno));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

RunnerReply RunnerClient::call(const RunnerRequest& req) {
  std::lock_guard lock(mu_);
  if (fd_ < 0) throw ProtocolError("runner is not running");
  const long long id = next_id_++;
  const std::string line = encode_request(req, id).dump() + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n < 0) throw ProtocolError(std::string("runner write failed: ") + std::strerror(errno));
    sent += static_cast<std::size_t>(n);
  }
  // The runner enforces req.timeout_s itself; allow slack for process startup and teardown.
  const std::string reply_line = read_line(req.timeout_s + 30.0);
  json j;
  try {
    j = json::parse(reply_line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("runner sent invalid JSON: ") + e.what());
  }
  if (!j.contains("id") || j.at("id") != id) {
    throw ProtocolError("runner reply id mismatch: expected " + std::to_string(id));
  }
  RunnerReply reply = decode_reply(j);
  if (reply.op != req.op) throw ProtocolError("runner reply op mismatch for request " + std::to_string(id));
  return reply;
}

long long RunnerClient::requests_sent() const {
  std::lock_guard lock(mu_);
  return next_id_ - 1;
}

std::string describe_failure(const RunnerReply& reply) {
  if (reply.ok || !reply.error) return {};
  std::string out = reply.error->kind + ": " + reply.error->message;
  if (!reply.error->traceback.empty()) out += "\n" + reply.error->traceback;
  return out;
}

CheckResult SyntaxChecker::check(const std::string& code) {
  try {
    const RunnerReply r = client_.call({Op::syntax_check, code, "", "", timeout_s_});
    return {r.ok, describe_failure(r)};
  } catch (const ProtocolError& e) {
    return {false, std::string("runner protocol error: ") + e.what()};
  }
}

CheckResult ExecutionChecker::check(const std::string& code) {
  try {
    const RunnerReply r = client_.call({Op::execute, code, "", workdir_.string(), timeout_s_});
    if (r.ok) {
      last_deck_ = r.payload.is_object() ? r.payload.value("deck", std::string{}) : r.payload.dump();
    }
    return {r.ok, describe_failure(r)};
  } catch (const ProtocolError& e) {
    return {false, std::string("runner protocol error: ") + e.what()};
  }
}

}  // namespace slidegen::runner
