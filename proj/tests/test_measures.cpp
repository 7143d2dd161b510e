#include <doctest.h>

#include <cmath>
#include <limits>

#include "cinn/measures.hpp"
#include "cinn/rng.hpp"
#include "support/test_helpers.hpp"

using namespace cinn;
using namespace cinn::testsupport;

namespace {

Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST_CASE("sign_split on fixed matrices") {
  const SplitPair zero = sign_split(Matrix::Zero(2, 2));
  CHECK(zero.plus.isZero(0.0));
  CHECK(zero.minus.isZero(0.0));

  const SplitPair id = sign_split(Matrix::Identity(2, 2));
  CHECK(id.plus == Matrix::Identity(2, 2));
  CHECK(id.minus.isZero(0.0));

  const SplitPair s = sign_split(mat2(1, -2, -3, 4));
  CHECK(s.plus == mat2(1, 0, 0, 4));
  CHECK(s.minus == mat2(0, -2, -3, 0));
}

TEST_CASE("sign_split reconstruction is exact bitwise") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix b = random_matrix(rng, 3 + trial % 4, 2 + trial % 5, 10.0);
    const SplitPair s = sign_split(b);
    CHECK((s.plus + s.minus) == b);
    CHECK((s.plus.array() >= 0.0).all());
    CHECK((s.minus.array() <= 0.0).all());
  }
}

TEST_CASE("sign_split rejects non-finite input") {
  Matrix b = Matrix::Zero(2, 2);
  b(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sign_split(b), InvalidInput);
}

TEST_CASE("metzler_split on fixed matrices") {
  const MetzlerPair id = metzler_split(Matrix::Identity(2, 2));
  CHECK(id.metzler == Matrix::Identity(2, 2));
  CHECK(id.nonmetzler.isZero(0.0));

  const MetzlerPair m = metzler_split(mat2(-1, 2, -3, 4));
  CHECK(m.metzler == mat2(-1, 2, 0, 4));
  CHECK(m.nonmetzler == mat2(0, 0, -3, 0));

  Matrix diag = Matrix::Zero(2, 2);
  diag(0, 0) = -5;
  diag(1, 1) = -7;
  const MetzlerPair d = metzler_split(diag);
  CHECK(d.metzler == diag);
  CHECK(d.nonmetzler.isZero(0.0));
}

TEST_CASE("metzler_split rejects non-square input") {
  CHECK_THROWS_AS(metzler_split(Matrix::Zero(2, 3)), InvalidInput);
}

TEST_CASE("metzler_split invariants on random matrices") {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 5;
    const Matrix a = random_matrix(rng, n, n, 5.0);
    const MetzlerPair m = metzler_split(a);
    CHECK((m.metzler + m.nonmetzler) == a);
    for (Index i = 0; i < n; ++i) {
      CHECK(m.nonmetzler(i, i) == 0.0);
      for (Index j = 0; j < n; ++j) {
        if (i != j) CHECK(m.metzler(i, j) >= 0.0);
        CHECK(m.nonmetzler(i, j) <= 0.0);
      }
    }
    // Entrywise dominance against the sign split.
    const SplitPair s = sign_split(a);
    CHECK((m.metzler.array() <= s.plus.array()).all());
    CHECK((s.minus.array() <= m.nonmetzler.array()).all());
  }
}

TEST_CASE("weighted_inf_norm examples and errors") {
  const PositiveWeights ones = PositiveWeights::ones(2);
  CHECK(weighted_inf_norm(vec({0, 0}), ones) == 0.0);

  const PositiveWeights w(vec({1, 2}));
  CHECK(weighted_inf_norm(vec({1, -4}), w) == doctest::Approx(2.0));

  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_vector(rng, 4, -5.0, 5.0);
    CHECK(weighted_inf_norm(x, PositiveWeights::ones(4)) ==
          doctest::Approx(x.cwiseAbs().maxCoeff()));
  }
  CHECK_THROWS_AS(weighted_inf_norm(vec({1, 2, 3}), w), InvalidInput);
}

TEST_CASE("weighted_inf_measure examples") {
  const PositiveWeights ones3 = PositiveWeights::ones(3);
  CHECK(weighted_inf_measure(Matrix::Zero(3, 3), ones3) == 0.0);
  CHECK(weighted_inf_measure(Matrix::Identity(3, 3), ones3) == 1.0);

  // Hand evaluation: rows give -1 + (1/2) 0.5 = -0.75 and -2 + 2 * 0.25 = -1.5.
  const PositiveWeights w(vec({1, 2}));
  CHECK(weighted_inf_measure(mat2(-1, 0.5, -0.25, -2), w) ==
        doctest::Approx(-0.75).epsilon(1e-12));

  CHECK_THROWS_AS(weighted_inf_measure(Matrix::Zero(2, 3), w), InvalidInput);
  CHECK_THROWS_AS(weighted_inf_measure(Matrix::Zero(3, 3), w), InvalidInput);
}

TEST_CASE("measure is dominated by the operator norm at unit weights") {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 1 + trial % 6;
    const Matrix a = random_matrix(rng, n, n, 3.0);
    CHECK(weighted_inf_measure(a, PositiveWeights::ones(n)) <=
          inf_operator_norm(a) + 1e-14);
  }
}

TEST_CASE("measure homogeneity for nonnegative scalings") {
  Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 4;
    const Matrix a = random_matrix(rng, n, n, 2.0);
    Vector eta = random_vector(rng, n, 0.2, 5.0);
    const PositiveWeights w(eta);
    const double c = rng.uniform(0.0, 4.0);
    const double lhs = weighted_inf_measure(c * a, w);
    const double rhs = c * weighted_inf_measure(a, w);
    CHECK(std::abs(lhs - rhs) <=
          1e-12 * std::max(1.0, std::max(std::abs(lhs), std::abs(rhs))));
  }
}

TEST_CASE("inf_operator_norm examples") {
  CHECK(inf_operator_norm(Matrix::Identity(3, 3)) == 1.0);
  CHECK(inf_operator_norm(mat2(1, -2, 0, 0.5)) == doctest::Approx(3.0));
  CHECK(inf_operator_norm(Matrix::Zero(4, 2)) == 0.0);
}

TEST_CASE("parametrize_weight fixed examples") {
  const PositiveWeights ones2 = PositiveWeights::ones(2);
  const Matrix w0 = parametrize_weight(Matrix::Zero(2, 2), ones2, 0.5);
  CHECK(w0 == 0.5 * Matrix::Identity(2, 2));

  // [eta]^{-1} T [eta] = [[0, 2], [0, 0]], row sums diag(1, 0).
  Matrix t = Matrix::Zero(2, 2);
  t(0, 1) = 1.0;
  const PositiveWeights w12(vec({1, 2}));
  const Matrix wp = parametrize_weight(t, w12, 0.0);
  CHECK(wp == mat2(-1, 2, 0, 0));

  CHECK_THROWS_AS(parametrize_weight(t, w12, 1.0), NotContractive);
  CHECK_THROWS_AS(parametrize_weight(Matrix::Zero(2, 3), w12, 0.0),
                  InvalidInput);
}

TEST_CASE("parametrization guarantees the measure bound") {
  Rng rng(16);
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 2 + trial % 19;
    const Matrix t = random_matrix(rng, n, n, 2.0);
    const Vector eta = random_vector(rng, n, 0.1, 10.0);
    const PositiveWeights w(eta);
    const double gamma = rng.uniform(-2.0, 0.95);
    const Matrix wm = parametrize_weight(t, w, gamma);
    CHECK(weighted_inf_measure(wm, w) <= gamma + 1e-9);
  }
}

TEST_CASE("gamma = 0.9 parametrization verified through the measure oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix t = random_matrix(rng, 3, 3, 1.0);
    const Vector eta = random_vector(rng, 3, 0.25, 4.0);
    const PositiveWeights w(eta);
    CHECK(weighted_inf_measure(parametrize_weight(t, w, 0.9), w) <=
          0.9 + 1e-12);
  }
}

TEST_CASE("PositiveWeights validation") {
  CHECK_THROWS_AS(PositiveWeights(vec({1.0, 0.0})), InvalidInput);
  CHECK_THROWS_AS(PositiveWeights(vec({1.0, -2.0})), InvalidInput);
  CHECK_THROWS_AS(PositiveWeights(Vector()), InvalidInput);
  const PositiveWeights w(vec({0.5, 4.0, 1.0}));
  CHECK(w.eta_max() == 4.0);
  CHECK(w.eta_min() == 0.5);
  CHECK(w.ratio() == doctest::Approx(8.0));
}
