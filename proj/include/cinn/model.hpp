#pragma once

#include <string>

#include "cinn/measures.hpp"
#include "cinn/types.hpp"

namespace cinn {

enum class ActivationKind { relu, leaky_relu, tanh, sigmoid, identity };

/// Componentwise activation. Every supported kind is weakly increasing and
/// non-expansive (slope in [0, 1] wherever differentiable), which is what the
/// contraction certificates rely on.
struct Activation {
  ActivationKind kind = ActivationKind::relu;
  double slope = 0.01;  // leaky_relu only, must lie in (0, 1)

  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double a = 0.01) {
    return {ActivationKind::leaky_relu, a};
  }
  static Activation tanh() { return {ActivationKind::tanh, 0.0}; }
  static Activation sigmoid() { return {ActivationKind::sigmoid, 0.0}; }
  static Activation identity() { return {ActivationKind::identity, 0.0}; }

  void validate() const;
  std::string name() const;
};

Activation activation_from_name(const std::string& name, double slope = 0.01);

double activation_scalar(const Activation& act, double v);
/// Slope (subderivative at kinks). relu uses 0 at the origin; leaky_relu uses
/// its negative-side slope there.
double activation_slope(const Activation& act, double v);

Vector activation_apply(const Activation& act, const Vector& v);
Vector activation_derivative(const Activation& act, const Vector& v);

/// Equilibrium network: hidden state solves z = Phi(W z + U x + b), readout
/// y = C z + c.
struct ImplicitNetwork {
  Matrix W;  // n x n
  Matrix U;  // n x r
  Vector b;  // n
  Matrix C;  // q x n
  Vector c;  // q
  Activation activation;

  Index n() const { return W.rows(); }
  Index r() const { return U.cols(); }
  Index q() const { return C.rows(); }

  void validate() const;

  /// One application of the state map N(z, x) = Phi(W z + U x + b).
  Vector forward_map(const Vector& z, const Vector& x) const;
  /// Readout y = C z + c.
  Vector output_map(const Vector& z) const;
};

/// Result of the well-posedness check: mu is the weighted infinity measure of
/// W, alpha_max the largest admissible averaging step
/// (1 - min_i min(W_ii, 0))^{-1}. mu < 1 guarantees a unique fixed point for
/// every input and convergence of the alpha-average iteration for every
/// alpha in (0, alpha_max].
struct ContractionCertificate {
  PositiveWeights eta;
  double mu = 0.0;
  double alpha_max = 1.0;
  bool wellposed = false;
};

ContractionCertificate check_wellposed(const ImplicitNetwork& net,
                                       const PositiveWeights& w);
ContractionCertificate check_wellposed(const Matrix& W,
                                       const PositiveWeights& w);

/// Heuristic weight selection: power iteration on the Metzlerized matrix
/// (diagonal kept, off-diagonal absolute values) returns the Perron vector v
/// and eta = 1/v, which minimizes the weighted measure for irreducible
/// matrices. Falls back to ones whenever the iteration stagnates or the
/// candidate does not beat unit weights.
PositiveWeights suggest_eta(const Matrix& W);

}  // namespace cinn
