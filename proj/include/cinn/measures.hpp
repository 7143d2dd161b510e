#pragma once

#include "cinn/types.hpp"

namespace cinn {

/// Strictly positive diagonal weight vector eta with cached extremes.
/// Defines the weighted infinity norm ||x|| = max_i |x_i| / eta_i and the
/// matching matrix measure (see weighted_inf_measure).
class PositiveWeights {
 public:
  explicit PositiveWeights(Vector eta);

  /// All-ones weights of dimension n (the unweighted infinity norm).
  static PositiveWeights ones(Index n);

  const Vector& eta() const { return eta_; }
  double eta_max() const { return max_; }
  double eta_min() const { return min_; }
  double ratio() const { return max_ / min_; }
  Index size() const { return eta_.size(); }

 private:
  Vector eta_;
  double max_ = 0.0;
  double min_ = 0.0;
};

/// Entrywise nonnegative / nonpositive parts: plus + minus == input exactly.
struct SplitPair {
  Matrix plus;
  Matrix minus;
};

/// metzler keeps the diagonal and the nonnegative off-diagonal entries;
/// nonmetzler holds the remaining (negative, off-diagonal) entries.
/// metzler + nonmetzler == input exactly.
struct MetzlerPair {
  Matrix metzler;
  Matrix nonmetzler;
};

SplitPair sign_split(const Matrix& b);
MetzlerPair metzler_split(const Matrix& a);

/// max_i |x_i| / eta_i
double weighted_inf_norm(const Vector& x, const PositiveWeights& w);

/// max_i ( A_ii + sum_{j != i} (eta_i / eta_j) |A_ij| ).
/// This is the matrix measure induced by the weighted infinity norm; it can
/// be negative.
double weighted_inf_measure(const Matrix& a, const PositiveWeights& w);

/// Induced infinity operator norm: max absolute row sum.
double inf_operator_norm(const Matrix& b);

/// Constraint-free parametrization W = [eta]^{-1} T [eta] - diag(|T| 1) +
/// gamma I. For every T the returned W satisfies
/// weighted_inf_measure(W, eta) <= gamma, so gamma < 1 guarantees a usable
/// contraction certificate without projecting during optimization.
Matrix parametrize_weight(const Matrix& t, const PositiveWeights& w,
                          double gamma);

}  // namespace cinn
