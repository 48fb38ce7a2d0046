#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rmsd {

enum class ErrorCode {
  kContract,        // precondition violated by the caller
  kInvalidPool,     // empty teacher pool
  kDegeneratePool,  // all effective qualities zero after filtering
  kNoValidTarget,   // no SFT target can be selected
  kInvalidWeights,  // reward weights out of range or not summing to one
  kEmptyReport,
  kConfig,
  kIo,
  kParse,
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

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::kContract, what);
}

}  // namespace rmsd
