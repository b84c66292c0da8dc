#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace femtoq {

/// Argument outside the mathematical domain of a function (non-positive distance, power, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed or inconsistent experiment description. Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// No placement or allocation satisfies the constraints. Maps to CLI exit code 2.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double dbm_to_watts(double level_dbm) {
  return std::pow(10.0, (level_dbm - 30.0) / 10.0);
}

inline double watts_to_dbm(double power_w) {
  if (!(power_w > 0.0)) {
    throw DomainError("watts_to_dbm: power must be positive, got " + std::to_string(power_w));
  }
  return 10.0 * std::log10(power_w) + 30.0;
}

}  // namespace femtoq
