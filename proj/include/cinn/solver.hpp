#pragma once

#include "cinn/model.hpp"
#include "cinn/types.hpp"

namespace cinn {

struct SolveConfig {
  double alpha = 0.0;    // 0 means "use the certificate's alpha_max"
  double tol = 1e-10;    // residual threshold in the weighted infinity norm
  long max_iter = 100000;
  Vector eta;            // empty means unit weights

  PositiveWeights weights(Index n) const;
};

struct SolveReport {
  Vector z_star;
  long iterations = 0;
  double residual = 0.0;  // weighted norm of z - N(z, x) at the last iterate
  double contraction_estimate = 0.0;  // largest observed per-step ratio
  bool converged = false;
};

/// Fixed point of the coupled two-row system bracketing all hidden states the
/// network can reach over an input box.
struct EmbeddedFixedPoint {
  Vector z_lower;
  Vector z_upper;
  long iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Per-iteration Lipschitz factor bound 1 - alpha (1 - mu) of the
/// alpha-average map. Used for a-posteriori error bounds
/// ||z^k - z*|| <= c/(1-c) ||z^k - z^{k-1}||.
double contraction_factor(const ContractionCertificate& cert, double alpha);

/// Validates cfg.alpha against the certificate (0 resolves to alpha_max).
double resolve_alpha(const ContractionCertificate& cert,
                     const SolveConfig& cfg);

/// Alpha-average iteration z <- (1-alpha) z + alpha N(z, x) from z = 0 until
/// the weighted residual drops below cfg.tol. Refuses if the well-posedness
/// check fails; reaching max_iter yields converged = false, not an error.
SolveReport solve_fixed_point(const ImplicitNetwork& net, const Vector& x,
                              const SolveConfig& cfg);

/// Alpha-average iteration on the embedded two-row system built from the
/// Metzler split of W and the sign split of U. Stopping uses the stacked
/// norm (max of the two weighted component norms).
EmbeddedFixedPoint solve_embedded(const ImplicitNetwork& net,
                                  const IntervalVector& box,
                                  const SolveConfig& cfg);

namespace detail {

/// Shared core of the coupled two-row iteration. diag_block multiplies the
/// own row's state, cross_block the opposite row's. detect_divergence enables
/// the 100-iteration residual-growth bailout used by the sign-split variant,
/// whose iteration is not guaranteed to contract.
EmbeddedFixedPoint coupled_fixed_point(const ImplicitNetwork& net,
                                       const Matrix& diag_block,
                                       const Matrix& cross_block,
                                       const IntervalVector& box,
                                       const PositiveWeights& w, double alpha,
                                       double tol, long max_iter,
                                       bool detect_divergence);

}  // namespace detail

}  // namespace cinn
