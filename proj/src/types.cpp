#include "cinn/types.hpp"

#include <string>

namespace cinn {

bool all_finite(const Matrix& m) { return m.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite())
    throw InvalidInput(std::string(name) + ": non-finite entry");
}

void require_finite(const Vector& v, const char* name) {
  if (!v.allFinite())
    throw InvalidInput(std::string(name) + ": non-finite entry");
}

IntervalVector::IntervalVector(Vector lo, Vector hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size())
    throw InvalidInput("IntervalVector: lower/upper length mismatch");
  require_finite(lower, "IntervalVector.lower");
  require_finite(upper, "IntervalVector.upper");
  for (Index i = 0; i < lower.size(); ++i)
    if (lower[i] > upper[i])
      throw InvalidInput("IntervalVector: lower > upper at component " +
                         std::to_string(i));
}

IntervalVector IntervalVector::degenerate(const Vector& x) {
  return IntervalVector(x, x);
}

IntervalVector IntervalVector::ball(const Vector& center, double eps) {
  if (!(eps >= 0.0))
    throw InvalidInput("IntervalVector::ball: eps must be >= 0");
  return IntervalVector(center.array() - eps, center.array() + eps);
}

bool IntervalVector::contains(const Vector& x, double slack) const {
  if (x.size() != lower.size()) return false;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
  return true;
}

bool IntervalVector::contained_in(const IntervalVector& outer,
                                  double slack) const {
  if (outer.size() != size()) return false;
  for (Index i = 0; i < size(); ++i)
    if (lower[i] < outer.lower[i] - slack || upper[i] > outer.upper[i] + slack)
      return false;
  return true;
}

}  // namespace cinn
