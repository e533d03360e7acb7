#pragma once

#include <stdexcept>
#include <string>

namespace balmet {

/// A domain-type invariant or operation precondition failed; the message
/// names the violated invariant.
class validation_error : public std::runtime_error {
 public:
  explicit validation_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown: loss of positivity, nonpositive density, overflow.
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

/// A function declared convex produced non-convex data. Carries the
/// offending abscissa triple.
class convexity_error : public std::runtime_error {
 public:
  convexity_error(const std::string& what, double t0, double t1, double t2)
      : std::runtime_error(what), t_left(t0), t_mid(t1), t_right(t2) {}
  double t_left;
  double t_mid;
  double t_right;
};

/// Caller-supplied data is internally inconsistent (e.g. a gradient that
/// disagrees with its function by finite differences).
class contract_error : public std::runtime_error {
 public:
  explicit contract_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace balmet
