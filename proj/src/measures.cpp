#include "cinn/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cinn {

PositiveWeights::PositiveWeights(Vector eta) : eta_(std::move(eta)) {
  if (eta_.size() < 1) throw InvalidInput("PositiveWeights: empty vector");
  require_finite(eta_, "PositiveWeights.eta");
  for (Index i = 0; i < eta_.size(); ++i)
    if (!(eta_[i] > 0.0))
      throw InvalidInput("PositiveWeights: component " + std::to_string(i) +
                         " is not strictly positive");
  max_ = eta_.maxCoeff();
  min_ = eta_.minCoeff();
}

PositiveWeights PositiveWeights::ones(Index n) {
  return PositiveWeights(Vector::Ones(n));
}

SplitPair sign_split(const Matrix& b) {
  require_finite(b, "sign_split input");
  SplitPair out;
  out.plus = b.cwiseMax(0.0);
  out.minus = b.cwiseMin(0.0);
  return out;
}

MetzlerPair metzler_split(const Matrix& a) {
  if (a.rows() != a.cols())
    throw InvalidInput("metzler_split: matrix must be square");
  require_finite(a, "metzler_split input");
  MetzlerPair out;
  out.metzler = Matrix::Zero(a.rows(), a.cols());
  out.nonmetzler = Matrix::Zero(a.rows(), a.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j) {
      if (a(i, j) >= 0.0 || i == j)
        out.metzler(i, j) = a(i, j);
      else
        out.nonmetzler(i, j) = a(i, j);
    }
  return out;
}

double weighted_inf_norm(const Vector& x, const PositiveWeights& w) {
  if (x.size() != w.size())
    throw InvalidInput("weighted_inf_norm: length mismatch");
  double best = 0.0;
  for (Index i = 0; i < x.size(); ++i)
    best = std::max(best, std::abs(x[i]) / w.eta()[i]);
  return best;
}

double weighted_inf_measure(const Matrix& a, const PositiveWeights& w) {
  if (a.rows() != a.cols())
    throw InvalidInput("weighted_inf_measure: matrix must be square");
  if (a.rows() != w.size())
    throw InvalidInput("weighted_inf_measure: dimension mismatch with eta");
  require_finite(a, "weighted_inf_measure input");
  const Vector& eta = w.eta();
  double best = -std::numeric_limits<double>::infinity();
  for (Index i = 0; i < a.rows(); ++i) {
    double row = a(i, i);
    for (Index j = 0; j < a.cols(); ++j)
      if (j != i) row += eta[i] / eta[j] * std::abs(a(i, j));
    best = std::max(best, row);
  }
  return best;
}

double inf_operator_norm(const Matrix& b) {
  require_finite(b, "inf_operator_norm input");
  double best = 0.0;
  for (Index i = 0; i < b.rows(); ++i)
    best = std::max(best, b.row(i).cwiseAbs().sum());
  return best;
}

Matrix parametrize_weight(const Matrix& t, const PositiveWeights& w,
                          double gamma) {
  if (t.rows() != t.cols())
    throw InvalidInput("parametrize_weight: T must be square");
  if (t.rows() != w.size())
    throw InvalidInput("parametrize_weight: dimension mismatch with eta");
  require_finite(t, "parametrize_weight input");
  if (!(gamma < 1.0))
    throw NotContractive("parametrize_weight: gamma must be < 1");
  const Vector& eta = w.eta();
  const Index n = t.rows();
  Matrix out(n, n);
  for (Index i = 0; i < n; ++i) {
    const double abs_row_sum = t.row(i).cwiseAbs().sum();
    for (Index j = 0; j < n; ++j) {
      if (i == j)
        out(i, i) = t(i, i) - abs_row_sum + gamma;
      else
        out(i, j) = eta[j] / eta[i] * t(i, j);
    }
  }
  return out;
}

}  // namespace cinn
