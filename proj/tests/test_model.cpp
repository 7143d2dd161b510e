#include <doctest.h>

#include <cmath>

#include "cinn/model.hpp"
#include "cinn/rng.hpp"
#include "cinn/solver.hpp"
#include "support/test_helpers.hpp"

using namespace cinn;
using namespace cinn::testsupport;

TEST_CASE("activation values at fixed points") {
  CHECK(activation_apply(Activation::relu(), vec({-1, 0, 2})) == vec({0, 0, 2}));
  CHECK(activation_apply(Activation::tanh(), vec({0})) == vec({0}));
  CHECK(activation_apply(Activation::sigmoid(), vec({0}))[0] ==
        doctest::Approx(0.5));
  CHECK(activation_apply(Activation::identity(), vec({-3, 7})) == vec({-3, 7}));
  const Activation leaky = Activation::leaky_relu(0.1);
  CHECK(activation_apply(leaky, vec({-2}))[0] == doctest::Approx(-0.2));
}

TEST_CASE("activation derivatives, including the kink conventions") {
  CHECK(activation_derivative(Activation::relu(), vec({-1, 2})) == vec({0, 1}));
  // Subgradient 0 at the origin for relu; leaky uses its slope there.
  CHECK(activation_derivative(Activation::relu(), vec({0}))[0] == 0.0);
  CHECK(activation_derivative(Activation::leaky_relu(0.25), vec({0}))[0] ==
        0.25);
  CHECK(activation_derivative(Activation::tanh(), vec({0}))[0] == 1.0);
}

TEST_CASE("activations are non-expansive, monotone, with slopes in [0,1]") {
  Rng rng(21);
  const Activation kinds[5] = {Activation::relu(), Activation::leaky_relu(0.3),
                               Activation::tanh(), Activation::sigmoid(),
                               Activation::identity()};
  for (int trial = 0; trial < 10000; ++trial) {
    const Activation& act = kinds[trial % 5];
    const Vector u = random_vector(rng, 4, -6.0, 6.0);
    const Vector v = random_vector(rng, 4, -6.0, 6.0);
    const Vector fu = activation_apply(act, u);
    const Vector fv = activation_apply(act, v);
    CHECK((fu - fv).cwiseAbs().maxCoeff() <=
          (u - v).cwiseAbs().maxCoeff() + 1e-15);
    const Vector lo = u.cwiseMin(v);
    const Vector hi = u.cwiseMax(v);
    CHECK((activation_apply(act, lo).array() <=
           activation_apply(act, hi).array() + 1e-15)
              .all());
    const Vector d = activation_derivative(act, u);
    CHECK((d.array() >= 0.0).all());
    CHECK((d.array() <= 1.0).all());
  }
}

TEST_CASE("leaky_relu slope outside (0,1) is rejected") {
  ImplicitNetwork net = scalar_net(0.0, 1.0, 0.0, 1.0, Activation::leaky_relu(1.5));
  CHECK_THROWS_AS(net.validate(), InvalidInput);
}

TEST_CASE("forward_map examples") {
  // Passthrough: W = 0, U = I, identity activation.
  ImplicitNetwork pass;
  pass.W = Matrix::Zero(2, 2);
  pass.U = Matrix::Identity(2, 2);
  pass.b = Vector::Zero(2);
  pass.C = Matrix::Identity(2, 2);
  pass.c = Vector::Zero(2);
  pass.activation = Activation::identity();
  const Vector x = vec({0.3, -0.7});
  CHECK(pass.forward_map(Vector::Zero(2), x) == x);

  const ImplicitNetwork relu = scalar_net(0.5, 1.0, 0.0, 1.0, Activation::relu());
  CHECK(relu.forward_map(vec({2}), vec({1}))[0] == doctest::Approx(2.0));

  CHECK_THROWS_AS(pass.forward_map(Vector::Zero(3), x), InvalidInput);
}

TEST_CASE("a solved fixed point is invariant under forward_map") {
  Rng rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const ImplicitNetwork net =
        random_wellposed_net(rng, 5, 3, 2, 0.4, Activation::tanh());
    const Vector x = random_vector(rng, 3);
    SolveConfig cfg;
    const SolveReport rep = solve_fixed_point(net, x, cfg);
    REQUIRE(rep.converged);
    CHECK((net.forward_map(rep.z_star, x) - rep.z_star).cwiseAbs().maxCoeff() <=
          10 * cfg.tol);
  }
}

TEST_CASE("output_map examples") {
  ImplicitNetwork net = mirror_net();
  CHECK(net.output_map(vec({2})) == vec({2, -2}));
  net.c = vec({1, 1});
  CHECK(net.output_map(vec({0})) == vec({1, 1}));

  ImplicitNetwork id;
  id.W = Matrix::Zero(2, 2);
  id.U = Matrix::Identity(2, 2);
  id.b = Vector::Zero(2);
  id.C = Matrix::Identity(2, 2);
  id.c = Vector::Zero(2);
  id.activation = Activation::identity();
  const Vector z = vec({0.5, -1});
  CHECK(id.output_map(z) == z);
}

TEST_CASE("check_wellposed fixed examples") {
  const PositiveWeights ones1 = PositiveWeights::ones(1);

  ImplicitNetwork half = scalar_net(0.5, 1.0, 0.0, 1.0, Activation::relu());
  const ContractionCertificate c1 = check_wellposed(half, ones1);
  CHECK(c1.mu == doctest::Approx(0.5));
  CHECK(c1.wellposed);
  CHECK(c1.alpha_max == doctest::Approx(1.0));

  ImplicitNetwork neg = scalar_net(-3.0, 1.0, 0.0, 1.0, Activation::relu());
  const ContractionCertificate c2 = check_wellposed(neg, ones1);
  CHECK(c2.mu == doctest::Approx(-3.0));
  CHECK(c2.wellposed);
  CHECK(c2.alpha_max == doctest::Approx(0.25));

  ImplicitNetwork bad = scalar_net(1.5, 1.0, 0.0, 1.0, Activation::relu());
  CHECK_FALSE(check_wellposed(bad, ones1).wellposed);
}

TEST_CASE("unit-weight measure accepts everything the norm test accepts") {
  Rng rng(23);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 2 + trial % 6;
    Matrix w(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
    // Scale to a norm strictly below one.
    w *= rng.uniform(0.05, 0.99) / std::max(inf_operator_norm(w), 1e-9);
    if (inf_operator_norm(w) < 1.0)
      CHECK(check_wellposed(w, PositiveWeights::ones(n)).wellposed);
  }
}

TEST_CASE("suggest_eta degenerate and symmetric cases fall back to ones") {
  CHECK(suggest_eta(Matrix::Zero(3, 3)).eta() == Vector::Ones(3));
  CHECK(suggest_eta(0.7 * Matrix::Identity(4, 4)).eta() == Vector::Ones(4));
  CHECK(suggest_eta(-2.0 * Matrix::Identity(2, 2)).eta() == Vector::Ones(2));
}

TEST_CASE("suggest_eta never loses to unit weights") {
  Rng rng(24);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix w(5, 5);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
    const PositiveWeights sug = suggest_eta(w);
    CHECK(weighted_inf_measure(w, sug) <=
          weighted_inf_measure(w, PositiveWeights::ones(5)) + 1e-9);
  }
}

TEST_CASE("suggest_eta can strictly improve an asymmetric matrix") {
  // Unbalanced couplings: the Perron scaling equalizes the row expressions
  // at 0.5 while unit weights give 1.1.
  const Matrix w = mat2(0.2, 0.9, 0.1, 0.2);
  const PositiveWeights sug = suggest_eta(w);
  CHECK(weighted_inf_measure(w, sug) ==
        doctest::Approx(0.5).epsilon(1e-6));
  CHECK(weighted_inf_measure(w, sug) <
        weighted_inf_measure(w, PositiveWeights::ones(2)) - 0.5);
}

TEST_CASE("network validation rejects inconsistent dimensions") {
  ImplicitNetwork net = scalar_net(0.5, 1.0, 0.0, 1.0, Activation::relu());
  net.b = Vector::Zero(2);
  CHECK_THROWS_AS(net.validate(), InvalidInput);
}
