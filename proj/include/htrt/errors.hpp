#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace htrt {

/// Shortest-form rendering (%.6g) for error messages.
inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

/// Invalid user input: bad closure orders, malformed configs, unknown names.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of a function (e.g. negative E).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Failure while advancing the solution. Carries where and when it happened
/// so the driver can report it; cell/node are -1 when not applicable.
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, int cell = -1, int node = -1,
              double time = 0.0)
      : std::runtime_error(what), cell_(cell), node_(node), time_(time) {}

  int cell() const { return cell_; }
  int node() const { return node_; }
  double time() const { return time_; }

 private:
  int cell_;
  int node_;
  double time_;
};

}  // namespace htrt
