#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace condmv {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Array = Eigen::ArrayXd;

enum class ErrorCode {
  invalid_parameter,
  unsupported_dimension,
  unknown_preset,
  no_oracle_available,
  unsupported_law,
  strategy_unsupported,
  simulation_diverged,
  alphabet_mismatch,
  non_spd,
  widen_domain,
  empty_ensemble,
  config,
  insufficient_data,
  output_exists,
  io,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised when a run produces a non-finite drift or position.
class DivergedError : public Error {
 public:
  DivergedError(std::int64_t step, const std::string& what)
      : Error(ErrorCode::simulation_diverged, what), step_(step) {}
  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

/// Config problems carry a path-like key location such as "axes.n[2]".
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(ErrorCode::config, key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

/// Kahan accumulator. Addition order is the caller's responsibility.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;

  void add(double x) noexcept {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  double value() const noexcept { return sum; }
};

}  // namespace condmv
