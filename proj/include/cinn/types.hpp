#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace cinn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Caller handed us something malformed (bad dimensions, non-finite entries, ...).
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A contraction condition required by the operation does not hold (mu >= 1,
// inadmissible averaging step, ...). These are refusals, not internal errors.
struct NotContractive : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solve failed to converge where convergence is required.
struct SolveFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bool all_finite(const Matrix& m);
bool all_finite(const Vector& v);
void require_finite(const Matrix& m, const char* name);
void require_finite(const Vector& v, const char* name);

/// Axis-aligned box [lower, upper] with lower <= upper componentwise.
struct IntervalVector {
  Vector lower;
  Vector upper;

  IntervalVector() = default;
  IntervalVector(Vector lo, Vector hi);

  static IntervalVector degenerate(const Vector& x);
  static IntervalVector ball(const Vector& center, double eps);

  Index size() const { return lower.size(); }
  Vector width() const { return upper - lower; }
  bool contains(const Vector& x, double slack = 0.0) const;
  bool contained_in(const IntervalVector& outer, double slack = 0.0) const;
};

}  // namespace cinn
