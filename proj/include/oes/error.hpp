#pragma once

#include <stdexcept>
#include <string>

namespace oes {

/// Broad failure classes. The values line up with the C API status codes
/// and, for the first few, with the CLI exit codes.
enum class ErrorCode {
  kUsage = 1,
  kCorruptData = 2,
  kUnreachableTarget = 3,
  kIo = 4,
  kConfig = 5,
  kOversizedFrame = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace oes
