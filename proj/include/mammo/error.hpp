#ifndef MAMMO_ERROR_HPP_
#define MAMMO_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace mammo {

// Error categories. The numeric values double as CLI exit codes.
enum class ErrorCode : int {
  kInternal = 1,
  kConfig = 2,
  kIo = 3,
  kTrainingRefused = 4,
  kFormatVersion = 5,
  kIntegrity = 6,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace mammo

#endif  // MAMMO_ERROR_HPP_
