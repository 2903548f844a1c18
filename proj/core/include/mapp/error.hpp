// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mapp {

enum class ErrorKind {
  kInvalidArgument,
  kDegenerateChannel,
  kConfig,
  kGeometry,
  kNumerical,
  kCorruptDataset,
  kState,
  kIo,
};

std::string_view to_string(ErrorKind kind);

/// Library-wide exception. `kind()` is what the CLI reports on its
/// machine-readable error line.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace mapp
