#pragma once

#include <stdexcept>
#include <string>

namespace nechannel {

/// Requested instant falls inside a window where channels differ in their
/// collision history. Carries the closest instants on either side where the
/// whole ensemble is between collisions again.
class MixedPhaseError : public std::runtime_error {
 public:
  MixedPhaseError(const std::string& what, double safe_before, double safe_after)
      : std::runtime_error(what), safe_before_(safe_before), safe_after_(safe_after) {}

  double safe_before() const { return safe_before_; }
  double safe_after() const { return safe_after_; }

 private:
  double safe_before_;
  double safe_after_;
};

/// Invalid scenario or grid configuration; the message names the field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Grid propagation left its unitarity envelope.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nechannel
