#pragma once

#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sublab {

// Base error for everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation (e.g. B(λ) for λ < 0).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Numerical procedure that did not reach the requested accuracy.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double achievable)
      : Error(what), achievable_(achievable) {}
  double achievable() const { return achievable_; }

 private:
  double achievable_;
};

enum class Verdict { yes, no, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::yes: return "yes";
    case Verdict::no: return "no";
    default: return "inconclusive";
  }
}

using Point = std::vector<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Log-spaced grid [lo, hi] with `per_decade` points per decade (inclusive ends).
std::vector<double> log_grid(double lo, double hi, int per_decade);

}  // namespace sublab
