#include <doctest.h>

#include <cmath>

#include "cinn/rng.hpp"
#include "cinn/solver.hpp"
#include "support/test_helpers.hpp"

using namespace cinn;
using namespace cinn::testsupport;

TEST_CASE("W = 0 converges within two iterations to act(Ux + b)") {
  ImplicitNetwork net;
  net.W = Matrix::Zero(3, 3);
  net.U = Matrix::Identity(3, 3);
  net.b = vec({0.1, -0.2, 0.3});
  net.C = Matrix::Identity(3, 3);
  net.c = Vector::Zero(3);
  net.activation = Activation::tanh();
  const Vector x = vec({0.5, -1.0, 0.25});
  SolveConfig cfg;
  const SolveReport rep = solve_fixed_point(net, x, cfg);
  REQUIRE(rep.converged);
  CHECK(rep.iterations <= 2);
  CHECK((rep.z_star - activation_apply(net.activation, x + net.b))
            .cwiseAbs()
            .maxCoeff() <= 1e-14);
}

TEST_CASE("scalar relu fixed point matches the bisection oracle") {
  const ImplicitNetwork net = scalar_net(0.5, 1.0, 0.0, 1.0, Activation::relu());
  SolveConfig cfg;
  const SolveReport rep = solve_fixed_point(net, vec({1}), cfg);
  REQUIRE(rep.converged);
  // Analytically z = relu(0.5 z + 1) has the unique solution z = 2.
  CHECK(rep.z_star[0] == doctest::Approx(2.0).epsilon(1e-9));
  const double oracle = bisect_scalar_fixed_point(0.5, 1.0, 0.0, 1.0,
                                                  Activation::relu(), -1.0, 10.0);
  CHECK(rep.z_star[0] == doctest::Approx(oracle).epsilon(1e-9));
}

TEST_CASE("odd symmetry pins the tanh fixed point at zero") {
  const ImplicitNetwork net = scalar_net(-0.5, 1.0, 0.0, 1.0, Activation::tanh());
  SolveConfig cfg;
  const SolveReport rep = solve_fixed_point(net, vec({0}), cfg);
  REQUIRE(rep.converged);
  CHECK(std::abs(rep.z_star[0]) <= cfg.tol);
}

TEST_CASE("solver refuses a model without a certificate") {
  const ImplicitNetwork net = scalar_net(1.2, 1.0, 0.0, 1.0, Activation::relu());
  SolveConfig cfg;
  CHECK_THROWS_AS(solve_fixed_point(net, vec({1}), cfg), NotContractive);
}

TEST_CASE("max_iter exhaustion reports non-convergence instead of throwing") {
  const ImplicitNetwork net =
      scalar_net(0.999, 1.0, 0.0, 1.0, Activation::identity());
  SolveConfig cfg;
  cfg.max_iter = 5;
  const SolveReport rep = solve_fixed_point(net, vec({1}), cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.iterations == 5);
  CHECK(rep.residual > cfg.tol);
}

TEST_CASE("alpha outside the admissible range is rejected") {
  const ImplicitNetwork net = scalar_net(-3.0, 1.0, 0.0, 1.0, Activation::relu());
  SolveConfig cfg;
  cfg.alpha = 0.3;  // alpha_max is 0.25 here
  CHECK_THROWS_AS(solve_fixed_point(net, vec({1}), cfg), InvalidInput);
}

TEST_CASE("contraction_factor formula and refusals") {
  ContractionCertificate cert{PositiveWeights::ones(1), 0.5, 1.0, true};
  CHECK(contraction_factor(cert, 1.0) == doctest::Approx(0.5));

  cert.mu = 0.0;
  CHECK(contraction_factor(cert, 1.0) == doctest::Approx(0.0));

  cert.mu = -3.0;
  cert.alpha_max = 0.25;
  CHECK(contraction_factor(cert, 0.25) == doctest::Approx(0.0));

  cert.mu = 1.5;
  cert.alpha_max = 1.0;
  CHECK_THROWS_AS(contraction_factor(cert, 1.0), NotContractive);
  cert.mu = 0.5;
  CHECK_THROWS_AS(contraction_factor(cert, 1.5), InvalidInput);
  CHECK_THROWS_AS(contraction_factor(cert, 0.0), InvalidInput);
}

TEST_CASE("observed step ratios respect the contraction factor") {
  Rng rng(31);
  const Activation acts[3] = {Activation::relu(), Activation::tanh(),
                              Activation::sigmoid()};
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 2 + trial % 10;
    const double gamma = rng.uniform(0.0, 0.9);
    const ImplicitNetwork net =
        random_wellposed_net(rng, n, 2, 2, gamma, acts[trial % 3]);
    const Vector x = random_vector(rng, 2);
    SolveConfig cfg;
    const PositiveWeights w = PositiveWeights::ones(n);
    const ContractionCertificate cert = check_wellposed(net, w);
    const double factor = contraction_factor(cert, cert.alpha_max);
    const SolveReport rep = solve_fixed_point(net, x, cfg);
    REQUIRE(rep.converged);
    CHECK(rep.residual <= cfg.tol);
    CHECK(rep.contraction_estimate <= factor + 1e-6);
  }
}

TEST_CASE("uniqueness: an independent iteration from a random start agrees") {
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const ImplicitNetwork net =
        random_wellposed_net(rng, 6, 3, 2, 0.5, Activation::tanh());
    const Vector x = random_vector(rng, 3);
    SolveConfig cfg;
    const SolveReport rep = solve_fixed_point(net, x, cfg);
    REQUIRE(rep.converged);

    // Same alpha-average map, run in the test from a random initial state.
    Vector z = random_vector(rng, 6, -5.0, 5.0);
    const PositiveWeights w = PositiveWeights::ones(6);
    const double alpha = check_wellposed(net, w).alpha_max;
    for (int it = 0; it < 100000; ++it) {
      const Vector nz = net.forward_map(z, x);
      if (weighted_inf_norm(z - nz, w) <= cfg.tol) break;
      z = (1.0 - alpha) * z + alpha * nz;
    }
    CHECK(weighted_inf_norm(z - rep.z_star, w) <= 10 * cfg.tol);
  }
}

TEST_CASE("feedforward collapse: block upper-triangular nets finish in k+1") {
  Rng rng(33);
  const Index block = 3, k = 4, n = block * k;
  Matrix w = Matrix::Zero(n, n);
  // Strictly block upper-triangular: block i feeds from blocks j > i.
  for (Index bi = 0; bi + 1 < k; ++bi)
    for (Index i = bi * block; i < (bi + 1) * block; ++i)
      for (Index j = (bi + 1) * block; j < n; ++j)
        w(i, j) = rng.uniform(-2.0, 2.0);
  ImplicitNetwork net;
  net.W = w;
  net.U = Matrix::Zero(n, 2);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < 2; ++j) net.U(i, j) = rng.uniform(-1.0, 1.0);
  net.b = random_vector(rng, n, -0.5, 0.5);
  net.C = Matrix::Identity(1, n);
  net.c = Vector::Zero(1);
  net.activation = Activation::relu();

  // Nilpotent coupling: geometric weights certify mu < 1 (rows only couple
  // to later blocks, whose weights are 100x larger), and with alpha = 1 the
  // iteration settles block by block.
  Vector eta(n);
  for (Index bi = 0; bi < k; ++bi)
    for (Index i = bi * block; i < (bi + 1) * block; ++i)
      eta[i] = std::pow(100.0, static_cast<double>(bi));
  SolveConfig cfg;
  cfg.eta = eta;
  cfg.alpha = 1.0;
  REQUIRE(check_wellposed(net, PositiveWeights(eta)).wellposed);
  const SolveReport rep = solve_fixed_point(net, random_vector(rng, 2), cfg);
  REQUIRE(rep.converged);
  CHECK(rep.iterations <= k + 1);
  CHECK(rep.residual == 0.0);
}

TEST_CASE("degenerate box collapses the embedded solve onto the plain one") {
  Rng rng(34);
  for (int trial = 0; trial < 10; ++trial) {
    const ImplicitNetwork net =
        random_wellposed_net(rng, 5, 3, 2, 0.4, Activation::relu());
    const Vector x = random_vector(rng, 3);
    SolveConfig cfg;
    const SolveReport rep = solve_fixed_point(net, x, cfg);
    const EmbeddedFixedPoint efp =
        solve_embedded(net, IntervalVector::degenerate(x), cfg);
    REQUIRE(rep.converged);
    REQUIRE(efp.converged);
    CHECK((efp.z_lower - efp.z_upper).cwiseAbs().maxCoeff() == 0.0);
    CHECK((efp.z_lower - rep.z_star).cwiseAbs().maxCoeff() <= 2 * cfg.tol);
  }
}

TEST_CASE("scalar embedded examples with known endpoints") {
  SolveConfig cfg;
  {
    // W >= 0 decouples the two rows: z = relu(0.5 z + x) at x = 0 and 1.
    const ImplicitNetwork net =
        scalar_net(0.5, 1.0, 0.0, 1.0, Activation::relu());
    const EmbeddedFixedPoint efp =
        solve_embedded(net, IntervalVector(vec({0}), vec({1})), cfg);
    REQUIRE(efp.converged);
    CHECK(efp.z_lower[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(efp.z_upper[0] == doctest::Approx(2.0).epsilon(1e-9));
  }
  {
    // Negative input weight routes the upper input into the lower row.
    const ImplicitNetwork net =
        scalar_net(0.0, -1.0, 0.0, 1.0, Activation::identity());
    const EmbeddedFixedPoint efp =
        solve_embedded(net, IntervalVector(vec({0}), vec({1})), cfg);
    REQUIRE(efp.converged);
    CHECK(efp.z_lower[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(efp.z_upper[0] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("the plain fixed point is sandwiched by the embedded pair") {
  Rng rng(35);
  const Activation acts[2] = {Activation::relu(), Activation::sigmoid()};
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 8;
    const ImplicitNetwork net =
        random_wellposed_net(rng, n, 3, 2, rng.uniform(-0.5, 0.8), acts[trial % 2]);
    const Vector center = random_vector(rng, 3);
    const double eps = rng.uniform(0.0, 0.5);
    SolveConfig cfg;
    const EmbeddedFixedPoint efp =
        solve_embedded(net, IntervalVector::ball(center, eps), cfg);
    REQUIRE(efp.converged);
    CHECK((efp.z_lower.array() <= efp.z_upper.array() + 1e-8).all());
    for (int inner = 0; inner < 5; ++inner) {
      Vector x = center;
      for (Index j = 0; j < 3; ++j) x[j] += eps * rng.uniform(-1.0, 1.0);
      const SolveReport rep = solve_fixed_point(net, x, cfg);
      REQUIRE(rep.converged);
      CHECK((rep.z_star.array() >= efp.z_lower.array() - 1e-8).all());
      CHECK((rep.z_star.array() <= efp.z_upper.array() + 1e-8).all());
    }
  }
}
