#pragma once

#include <stdexcept>
#include <string>

namespace vqla {

// Error taxonomy shared by all modules. `kind` is a stable machine-readable
// code; the CLI maps kinds to exit codes and emits them in the stderr report.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, std::string message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

struct DegenerateBox : Error {
  explicit DegenerateBox(const std::string& msg) : Error("DegenerateBox", msg) {}
};

struct OutOfFrame : Error {
  explicit OutOfFrame(const std::string& msg) : Error("OutOfFrame", msg) {}
};

struct GroupTooSmall : Error {
  explicit GroupTooSmall(const std::string& msg) : Error("GroupTooSmall", msg) {}
};

struct NonFinite : Error {
  explicit NonFinite(const std::string& msg) : Error("NonFinite", msg) {}
};

struct DimensionMismatch : Error {
  explicit DimensionMismatch(const std::string& msg) : Error("DimensionMismatch", msg) {}
};

struct OutOfSupport : Error {
  explicit OutOfSupport(const std::string& msg) : Error("OutOfSupport", msg) {}
};

struct EmptyInput : Error {
  explicit EmptyInput(const std::string& msg) : Error("EmptyInput", msg) {}
};

struct IoFailure : Error {
  explicit IoFailure(const std::string& msg) : Error("IoFailure", msg) {}
};

}  // namespace vqla
