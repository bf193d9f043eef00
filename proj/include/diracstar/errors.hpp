#pragma once

#include <stdexcept>
#include <string>

namespace diracstar {

enum class ErrorClass { config, numerical, io };

// Typed failure. `code` is a short stable tag such as "bracket-not-found".
class Error : public std::runtime_error {
public:
  Error(ErrorClass cls, std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), cls_(cls), code_(std::move(code)) {}

  ErrorClass error_class() const { return cls_; }
  const std::string& code() const { return code_; }

  // 2 config, 3 numerical, 4 io
  int exit_code() const {
    switch (cls_) {
      case ErrorClass::config: return 2;
      case ErrorClass::numerical: return 3;
      case ErrorClass::io: return 4;
    }
    return 3;
  }

private:
  ErrorClass cls_;
  std::string code_;
};

inline Error numerical_error(const std::string& code, const std::string& what) {
  return Error(ErrorClass::numerical, code, what);
}
inline Error config_error(const std::string& code, const std::string& what) {
  return Error(ErrorClass::config, code, what);
}
inline Error io_error(const std::string& code, const std::string& what) {
  return Error(ErrorClass::io, code, what);
}

}  // namespace diracstar
