#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace embedkit {

enum class ErrorCode {
  kFormat,      // bad magic, unsupported version
  kIntegrity,   // duplicate ids, non-finite values, violated invariants
  kIo,          // unreadable/unwritable paths, truncated files
  kDegenerate,  // zero or near-zero vector where a direction is required
  kShape,       // dimension mismatch
  kRange,       // index out of range
  kLookup,      // missing id or class
  kParse,       // malformed text input
  kAlignment,   // key sets that must match do not
  kDivergence,  // non-finite loss during training
  kEmpty,       // empty universe (no classes, no index items)
  kConfig,      // invalid configuration value
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace embedkit
