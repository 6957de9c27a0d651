#pragma once

#include <functional>
#include <string>

namespace slidegen {

struct CheckResult {
  bool ok = false;
  std::string error;  // empty when ok
};

/// Validates generated code. Shared by concurrent snippet tasks, so must be thread-safe.
class Checker {
 public:
  virtual ~Checker() = default;
  virtual CheckResult check(const std::string& code) = 0;
};

/// Wraps a callable; used for stubs and tests.
class FunctionChecker final : public Checker {
 public:
  explicit FunctionChecker(std::function<CheckResult(const std::string&)> fn) : fn_(std::move(fn)) {}
  CheckResult check(const std::string& code) override { return fn_(code); }

 private:
  std::function<CheckResult(const std::string&)> fn_;
};

}  // namespace slidegen
