#pragma once

#include <stdexcept>
#include <string>

namespace rankmctp {

// Input/validation failure; maps to CLI exit code 2.
class validation_error : public std::runtime_error {
public:
  validation_error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// Statistic cannot be formed (zero variance, zero trace, ...); CLI exit code 3.
class degenerate_error : public std::runtime_error {
public:
  degenerate_error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

}  // namespace rankmctp
