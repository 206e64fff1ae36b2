#pragma once

#include <stdexcept>
#include <string>

namespace extremal {

// Tuning input outside its domain (block size, tau, process parameter, ...).
class InvalidConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The threshold leaves -log(Fhat)/tauhat undefined. Carries the offending
// statistics so callers know in which direction to move u.
class DegenerateThresholdError : public std::runtime_error {
 public:
  DegenerateThresholdError(const std::string& what, double fhat, double tau_hat)
      : std::runtime_error(what), fhat_(fhat), tau_hat_(tau_hat) {}

  double fhat() const { return fhat_; }
  double tau_hat() const { return tau_hat_; }

 private:
  double fhat_;
  double tau_hat_;
};

class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientExceedancesError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable or unparseable input file.
class IngestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace extremal
