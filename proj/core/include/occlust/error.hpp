#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace occlust {

enum class ErrorKind {
  validation,
  parameter,
  numerical,
  degeneracy,
  load,
  contract,
  undefined_metric,
  selection,
  affinity,
  divergence,
  io,
  config,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so that sweeps can
/// record skipped cells and the CLI can map failures to exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace occlust
