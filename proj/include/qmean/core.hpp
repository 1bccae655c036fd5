#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmean {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Precondition or invariant violated by the caller.
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Operation not defined for the given group action.
class UnsupportedAction : public Error {
 public:
  using Error::Error;
};

/// Instance too large for an exhaustive method.
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Iteration cap reached without convergence.
class NonterminationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

/// A point of the ambient space R^N: a discretized signal.
struct TemplateVector {
  std::vector<double> values;

  TemplateVector() = default;
  explicit TemplateVector(std::size_t n, double fill = 0.0) : values(n, fill) {}
  TemplateVector(std::initializer_list<double> init) : values(init) {}
  explicit TemplateVector(std::vector<double> v) : values(std::move(v)) {}

  std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  bool operator==(const TemplateVector& other) const = default;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

inline void require_same_dimension(const TemplateVector& a, const TemplateVector& b) {
  if (a.size() != b.size())
    throw ContractViolation("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
}

inline double inner(const TemplateVector& a, const TemplateVector& b) {
  require_same_dimension(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_squared(const TemplateVector& a) {
  double s = 0.0;
  for (double x : a.values) s += x * x;
  return s;
}

inline double norm(const TemplateVector& a) { return std::sqrt(norm_squared(a)); }

inline TemplateVector operator+(const TemplateVector& a, const TemplateVector& b) {
  require_same_dimension(a, b);
  TemplateVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline TemplateVector operator-(const TemplateVector& a, const TemplateVector& b) {
  require_same_dimension(a, b);
  TemplateVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline TemplateVector operator*(double s, const TemplateVector& a) {
  TemplateVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

inline double distance(const TemplateVector& a, const TemplateVector& b) {
  require_same_dimension(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline bool all_finite(const TemplateVector& a) {
  for (double x : a.values)
    if (!std::isfinite(x)) return false;
  return true;
}

inline void validate_vector(const TemplateVector& a) {
  require(a.size() >= 1, "vector must have dimension >= 1");
  require(all_finite(a), "vector has non-finite coordinates");
}

}  // namespace qmean
