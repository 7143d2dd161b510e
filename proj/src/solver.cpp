#include "cinn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cinn {

PositiveWeights SolveConfig::weights(Index n) const {
  if (eta.size() == 0) return PositiveWeights::ones(n);
  if (eta.size() != n)
    throw InvalidInput("SolveConfig: eta dimension mismatch");
  return PositiveWeights(eta);
}

double contraction_factor(const ContractionCertificate& cert, double alpha) {
  if (!(alpha > 0.0) || alpha > cert.alpha_max)
    throw InvalidInput("contraction_factor: alpha outside (0, alpha_max]");
  const double c = 1.0 - alpha * (1.0 - cert.mu);
  if (c >= 1.0)
    throw NotContractive("contraction_factor: map is not contracting (mu >= 1)");
  return c;
}

double resolve_alpha(const ContractionCertificate& cert,
                     const SolveConfig& cfg) {
  if (cfg.alpha == 0.0) return cert.alpha_max;
  if (!(cfg.alpha > 0.0) || cfg.alpha > cert.alpha_max)
    throw InvalidInput("SolveConfig: alpha outside (0, alpha_max]");
  return cfg.alpha;
}

SolveReport solve_fixed_point(const ImplicitNetwork& net, const Vector& x,
                              const SolveConfig& cfg) {
  net.validate();
  if (x.size() != net.r())
    throw InvalidInput("solve_fixed_point: input length != r");
  if (!(cfg.tol > 0.0)) throw InvalidInput("SolveConfig: tol must be > 0");
  const PositiveWeights w = cfg.weights(net.n());
  const ContractionCertificate cert = check_wellposed(net, w);
  if (!cert.wellposed)
    throw NotContractive("solve_fixed_point: mu = " + std::to_string(cert.mu) +
                         " >= 1, no contraction certificate");
  const double alpha = resolve_alpha(cert, cfg);

  const Vector input_part = net.U * x + net.b;
  Vector z = Vector::Zero(net.n());

  SolveReport report;
  double prev_res = -1.0;
  for (long it = 0; it <= cfg.max_iter; ++it) {
    const Vector nz = activation_apply(net.activation, net.W * z + input_part);
    const double res = weighted_inf_norm(z - nz, w);
    report.residual = res;
    report.iterations = it;
    if (res <= cfg.tol) {
      report.z_star = z;
      report.converged = true;
      return report;
    }
    if (it == cfg.max_iter) break;
    // Successive steps are alpha (N(z) - z), so the per-step ratio equals the
    // residual ratio. Skip ratios once the denominator nears rounding noise.
    const double floor = 1e-7 * std::max(1.0, weighted_inf_norm(z, w));
    if (prev_res > floor)
      report.contraction_estimate =
          std::max(report.contraction_estimate, res / prev_res);
    prev_res = res;
    z = (1.0 - alpha) * z + alpha * nz;
  }
  report.z_star = z;
  report.converged = false;
  return report;
}

namespace detail {

EmbeddedFixedPoint coupled_fixed_point(const ImplicitNetwork& net,
                                       const Matrix& diag_block,
                                       const Matrix& cross_block,
                                       const IntervalVector& box,
                                       const PositiveWeights& w, double alpha,
                                       double tol, long max_iter,
                                       bool detect_divergence) {
  const SplitPair u_split = sign_split(net.U);
  const Vector in_lower =
      u_split.plus * box.lower + u_split.minus * box.upper + net.b;
  const Vector in_upper =
      u_split.plus * box.upper + u_split.minus * box.lower + net.b;

  Vector zl = Vector::Zero(net.n());
  Vector zu = Vector::Zero(net.n());

  EmbeddedFixedPoint out;
  double window_res = std::numeric_limits<double>::infinity();
  for (long it = 0; it <= max_iter; ++it) {
    const Vector nl = activation_apply(
        net.activation, diag_block * zl + cross_block * zu + in_lower);
    const Vector nu = activation_apply(
        net.activation, diag_block * zu + cross_block * zl + in_upper);
    const double res = std::max(weighted_inf_norm(zl - nl, w),
                                weighted_inf_norm(zu - nu, w));
    out.residual = res;
    out.iterations = it;
    if (res <= tol) {
      out.z_lower = zl;
      out.z_upper = zu;
      out.converged = true;
      return out;
    }
    if (it == max_iter) break;
    if (detect_divergence) {
      if (!std::isfinite(res) || res > 1e15) break;
      if (it > 0 && it % 100 == 0) {
        if (res >= window_res) break;  // no progress over the last window
        window_res = res;
      }
    }
    zl = (1.0 - alpha) * zl + alpha * nl;
    zu = (1.0 - alpha) * zu + alpha * nu;
  }
  out.z_lower = zl;
  out.z_upper = zu;
  out.converged = false;
  return out;
}

}  // namespace detail

EmbeddedFixedPoint solve_embedded(const ImplicitNetwork& net,
                                  const IntervalVector& box,
                                  const SolveConfig& cfg) {
  net.validate();
  if (box.size() != net.r())
    throw InvalidInput("solve_embedded: box dimension != r");
  if (!(cfg.tol > 0.0)) throw InvalidInput("SolveConfig: tol must be > 0");
  const PositiveWeights w = cfg.weights(net.n());
  const ContractionCertificate cert = check_wellposed(net, w);
  if (!cert.wellposed)
    throw NotContractive("solve_embedded: mu = " + std::to_string(cert.mu) +
                         " >= 1, no contraction certificate");
  const double alpha = resolve_alpha(cert, cfg);
  // The coupled matrix [[M, P], [P, M]] has the same row expressions and the
  // same diagonal as W, so the certificate transfers verbatim.
  const MetzlerPair split = metzler_split(net.W);
  return detail::coupled_fixed_point(net, split.metzler, split.nonmetzler, box,
                                     w, alpha, cfg.tol, cfg.max_iter, false);
}

}  // namespace cinn
