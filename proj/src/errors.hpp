#pragma once

#include <stdexcept>
#include <string>

namespace distpd {

// Numeric values are part of the C ABI (see distpd.h); keep them in sync.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDegenerateGains = 2,
  kNoCrossover = 3,
  kConditionUndefined = 4,
  kNoRoot = 5,
  kNotReal = 6,
  kDtTooCoarse = 7,
  kDiverged = 8,
  kSingular = 9,
  kInconclusive = 10,
  kIo = 11,
  kConfig = 12,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what,
                    ErrorCode code = ErrorCode::kInvalidArgument) {
  if (!cond) throw Error(code, what);
}

}  // namespace distpd
