#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qpsim {

// Failure taxonomy shared across the library. The CLI maps categories onto
// its exit-code contract: parse/config/domain -> 2, no-path and
// no-feasible-time -> 3, in-flight failures -> 4.
enum class ErrorCode {
  parse_error,
  config_error,
  domain_error,
  singularity,
  infeasible_thrust,
  no_path,
  no_feasible_time,
  numerical_blowup,
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::domain_error: return "domain-error";
    case ErrorCode::singularity: return "singularity";
    case ErrorCode::infeasible_thrust: return "infeasible-thrust";
    case ErrorCode::no_path: return "no-path";
    case ErrorCode::no_feasible_time: return "no-feasible-time";
    case ErrorCode::numerical_blowup: return "numerical-blowup";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string phase = {})
      : std::runtime_error(message), code_(code), phase_(std::move(phase)) {}

  ErrorCode code() const noexcept { return code_; }
  // Mission phase that raised the failure ("load", "validate", "plan",
  // "time", "simulate"); empty outside the mission pipeline.
  const std::string& phase() const noexcept { return phase_; }
  void set_phase(std::string phase) { phase_ = std::move(phase); }

 private:
  ErrorCode code_;
  std::string phase_;
};

// Rotor mixing produced a negative squared speed. `rotor` is 1-based.
class InfeasibleThrustError : public Error {
 public:
  InfeasibleThrustError(int rotor, double squared, const std::string& message)
      : Error(ErrorCode::infeasible_thrust, message), rotor_(rotor), squared_(squared) {}

  int rotor() const noexcept { return rotor_; }
  double squared_speed() const noexcept { return squared_; }

 private:
  int rotor_;
  double squared_;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string& message)
      : Error(ErrorCode::parse_error, "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

}  // namespace qpsim
