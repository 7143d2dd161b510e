#include "cinn/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cinn/rng.hpp"
#include "cinn/training.hpp"

namespace cinn {

ParameterGradients ParameterGradients::zeros(Index n, Index r, Index q) {
  ParameterGradients g;
  g.d_W = Matrix::Zero(n, n);
  g.d_U = Matrix::Zero(n, r);
  g.d_b = Vector::Zero(n);
  g.d_C = Matrix::Zero(q, n);
  g.d_c = Vector::Zero(q);
  g.d_x = Vector::Zero(r);
  return g;
}

ParameterGradients& ParameterGradients::operator+=(
    const ParameterGradients& other) {
  d_W += other.d_W;
  d_U += other.d_U;
  d_b += other.d_b;
  d_C += other.d_C;
  d_c += other.d_c;
  d_x += other.d_x;
  return *this;
}

ParameterGradients& ParameterGradients::operator*=(double s) {
  d_W *= s;
  d_U *= s;
  d_b *= s;
  d_C *= s;
  d_c *= s;
  d_x *= s;
  return *this;
}

Vector stable_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

namespace {

double weighted_l1_norm(const Vector& x, const PositiveWeights& w) {
  double s = 0.0;
  for (Index i = 0; i < x.size(); ++i) s += w.eta()[i] * std::abs(x[i]);
  return s;
}

// Solves w = v + W^T (d .* w) by the alpha-averaged iteration. The iteration
// matrix is the transpose of the forward one, so it contracts in the dual
// (weighted l1) norm with the same factor.
Vector adjoint_solve(const Matrix& W, const Vector& d, const Vector& v,
                     const PositiveWeights& w, double alpha, double tol,
                     long max_iter) {
  Vector wv = Vector::Zero(v.size());
  for (long it = 0; it <= max_iter; ++it) {
    const Vector next = v + W.transpose() * d.cwiseProduct(wv);
    if (weighted_l1_norm(wv - next, w) <= tol) return wv;
    if (it == max_iter) break;
    wv = (1.0 - alpha) * wv + alpha * next;
  }
  throw SolveFailure("adjoint iteration did not converge");
}

}  // namespace

ParameterGradients fixed_point_vjp(const ImplicitNetwork& net, const Vector& x,
                                   const Vector& z_star, const Vector& v,
                                   const SolveConfig& cfg) {
  net.validate();
  if (x.size() != net.r()) throw InvalidInput("fixed_point_vjp: x length != r");
  if (z_star.size() != net.n() || v.size() != net.n())
    throw InvalidInput("fixed_point_vjp: z_star/v length != n");
  const PositiveWeights w = cfg.weights(net.n());
  const ContractionCertificate cert = check_wellposed(net, w);
  if (!cert.wellposed)
    throw NotContractive("fixed_point_vjp: mu >= 1, adjoint not contracting");
  const double alpha = resolve_alpha(cert, cfg);

  const Vector u = net.W * z_star + net.U * x + net.b;
  const double res =
      weighted_inf_norm(z_star - activation_apply(net.activation, u), w);
  if (res > cfg.tol * (1.0 + 1e-9))
    throw SolveFailure("fixed_point_vjp: z_star is not a converged fixed point");

  const Vector d = activation_derivative(net.activation, u);
  const Vector wv =
      adjoint_solve(net.W, d, v, w, alpha, cfg.tol, cfg.max_iter);
  const Vector g = d.cwiseProduct(wv);

  ParameterGradients out = ParameterGradients::zeros(net.n(), net.r(), net.q());
  out.d_x = net.U.transpose() * g;
  out.d_W = g * z_star.transpose();
  out.d_U = g * x.transpose();
  out.d_b = g;
  return out;
}

ParameterGradients embedded_vjp(const ImplicitNetwork& net,
                                const IntervalVector& box,
                                const EmbeddedFixedPoint& efp,
                                const Vector& v_lower, const Vector& v_upper,
                                const SolveConfig& cfg) {
  net.validate();
  if (box.size() != net.r()) throw InvalidInput("embedded_vjp: box size != r");
  if (!efp.converged)
    throw SolveFailure("embedded_vjp: embedded fixed point did not converge");
  if (v_lower.size() != net.n() || v_upper.size() != net.n())
    throw InvalidInput("embedded_vjp: cotangent length != n");
  const PositiveWeights w = cfg.weights(net.n());
  const ContractionCertificate cert = check_wellposed(net, w);
  if (!cert.wellposed)
    throw NotContractive("embedded_vjp: mu >= 1, adjoint not contracting");
  const double alpha = resolve_alpha(cert, cfg);

  const MetzlerPair ws = metzler_split(net.W);
  const SplitPair us = sign_split(net.U);
  const Matrix& M = ws.metzler;
  const Matrix& P = ws.nonmetzler;
  const Vector& zl = efp.z_lower;
  const Vector& zu = efp.z_upper;

  const Vector al = M * zl + P * zu + us.plus * box.lower +
                    us.minus * box.upper + net.b;
  const Vector au = M * zu + P * zl + us.plus * box.upper +
                    us.minus * box.lower + net.b;
  const Vector dl = activation_derivative(net.activation, al);
  const Vector du = activation_derivative(net.activation, au);

  // Stacked adjoint: the coupled matrix is symmetric in its blocks, so the
  // transpose swaps only the roles of M^T and P^T across rows.
  Vector wl = Vector::Zero(net.n());
  Vector wu = Vector::Zero(net.n());
  bool converged = false;
  for (long it = 0; it <= cfg.max_iter; ++it) {
    const Vector gl = dl.cwiseProduct(wl);
    const Vector gu = du.cwiseProduct(wu);
    const Vector nl = v_lower + M.transpose() * gl + P.transpose() * gu;
    const Vector nu = v_upper + P.transpose() * gl + M.transpose() * gu;
    const double res =
        weighted_l1_norm(wl - nl, w) + weighted_l1_norm(wu - nu, w);
    if (res <= cfg.tol) {
      converged = true;
      break;
    }
    if (it == cfg.max_iter) break;
    wl = (1.0 - alpha) * wl + alpha * nl;
    wu = (1.0 - alpha) * wu + alpha * nu;
  }
  if (!converged)
    throw SolveFailure("embedded_vjp: adjoint iteration did not converge");

  const Vector gl = dl.cwiseProduct(wl);
  const Vector gu = du.cwiseProduct(wu);

  ParameterGradients out = ParameterGradients::zeros(net.n(), net.r(), net.q());
  for (Index i = 0; i < net.n(); ++i)
    for (Index j = 0; j < net.n(); ++j) {
      const bool keep = net.W(i, j) >= 0.0 || i == j;  // forward split mask
      out.d_W(i, j) = keep ? gl[i] * zl[j] + gu[i] * zu[j]
                           : gl[i] * zu[j] + gu[i] * zl[j];
    }
  for (Index i = 0; i < net.n(); ++i)
    for (Index j = 0; j < net.r(); ++j) {
      const bool plus = net.U(i, j) >= 0.0;
      out.d_U(i, j) = plus ? gl[i] * box.lower[j] + gu[i] * box.upper[j]
                           : gl[i] * box.upper[j] + gu[i] * box.lower[j];
    }
  out.d_b = gl + gu;
  out.d_x = net.U.transpose() * (gl + gu);
  return out;
}

LossGradients cross_entropy_loss_gradients(const ImplicitNetwork& net,
                                           const Vector& x, int label,
                                           const SolveConfig& cfg) {
  const SolveReport sr = solve_fixed_point(net, x, cfg);
  if (!sr.converged)
    throw SolveFailure("cross_entropy_loss_gradients: solve did not converge");
  const Vector f = net.output_map(sr.z_star);
  LossGradients out;
  out.loss = cross_entropy(f, label);
  Vector df = stable_softmax(f);
  df[label] -= 1.0;
  const Vector v = net.C.transpose() * df;
  out.grads = fixed_point_vjp(net, x, sr.z_star, v, cfg);
  out.grads.d_C = df * sr.z_star.transpose();
  out.grads.d_c = df;
  return out;
}

Vector loss_input_gradient(const ImplicitNetwork& net, const Vector& x,
                           int label, const SolveConfig& cfg, LossKind kind) {
  (void)kind;  // cross-entropy is the only supported loss
  return cross_entropy_loss_gradients(net, x, label, cfg).grads.d_x;
}

namespace {

double ce_loss_value(const ImplicitNetwork& net, const Vector& x, int label,
                     const SolveConfig& cfg) {
  const SolveReport sr = solve_fixed_point(net, x, cfg);
  if (!sr.converged) throw SolveFailure("loss evaluation: solve diverged");
  return cross_entropy(net.output_map(sr.z_star), label);
}

double rel_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

}  // namespace

FdReport finite_difference_check(const ImplicitNetwork& net, const Vector& x,
                                 int label, double step) {
  if (!(step > 0.0))
    throw InvalidInput("finite_difference_check: step must be > 0");
  SolveConfig cfg;
  cfg.tol = 1e-13;  // headroom: solver noise enters the quotient divided by 2h

  const LossGradients lg = cross_entropy_loss_gradients(net, x, label, cfg);

  FdReport report;
  const SolveReport sr = solve_fixed_point(net, x, cfg);
  const Vector u = net.W * sr.z_star + net.U * x + net.b;
  if (net.activation.kind == ActivationKind::relu ||
      net.activation.kind == ActivationKind::leaky_relu) {
    for (Index i = 0; i < u.size(); ++i)
      if (std::abs(u[i]) < 100.0 * step) report.kink_flagged = true;
  }

  ImplicitNetwork pert = net;
  Vector px = x;
  auto probe = [&](double* slot, double analytic) {
    const double saved = *slot;
    *slot = saved + step;
    const double up = ce_loss_value(pert, px, label, cfg);
    *slot = saved - step;
    const double down = ce_loss_value(pert, px, label, cfg);
    *slot = saved;
    const double fd = (up - down) / (2.0 * step);
    report.max_rel_error =
        std::max(report.max_rel_error, rel_error(analytic, fd));
  };

  for (Index i = 0; i < net.n(); ++i)
    for (Index j = 0; j < net.n(); ++j)
      probe(&pert.W(i, j), lg.grads.d_W(i, j));
  for (Index i = 0; i < net.n(); ++i)
    for (Index j = 0; j < net.r(); ++j)
      probe(&pert.U(i, j), lg.grads.d_U(i, j));
  for (Index i = 0; i < net.n(); ++i) probe(&pert.b[i], lg.grads.d_b[i]);
  for (Index i = 0; i < net.q(); ++i)
    for (Index j = 0; j < net.n(); ++j)
      probe(&pert.C(i, j), lg.grads.d_C(i, j));
  for (Index i = 0; i < net.q(); ++i) probe(&pert.c[i], lg.grads.d_c[i]);
  for (Index j = 0; j < net.r(); ++j) probe(&px[j], lg.grads.d_x[j]);
  return report;
}

const std::vector<BatteryNet>& gradient_check_battery() {
  static const std::vector<BatteryNet> battery = [] {
    std::vector<BatteryNet> out;
    Rng rng(0x51a7e5ULL);
    const Activation acts[4] = {Activation::relu(), Activation::leaky_relu(0.05),
                                Activation::tanh(), Activation::sigmoid()};
    const double gammas[3] = {-0.4, 0.3, 0.6};

    // Entries are drawn with magnitudes bounded away from zero so the
    // sign/Metzler masks and norm argmax rows stay stable under the
    // finite-difference step.
    auto draw = [&rng](double scale) {
      const double mag = rng.uniform(0.08, 1.0) * scale;
      return rng.uniform() < 0.5 ? -mag : mag;
    };

    int guard = 0;
    while (out.size() < 20 && ++guard < 20000) {
      const std::size_t k = out.size();
      const Index n = 2 + static_cast<Index>(k % 3);
      const Index r = 1 + static_cast<Index>(k % 3);
      const Index q = 2 + static_cast<Index>(k % 2);
      const double scale = 1.0 / std::sqrt(static_cast<double>(n));

      BatteryNet bn;
      bn.gamma = gammas[k % 3];
      bn.t_raw = Matrix::Zero(n, n);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) bn.t_raw(i, j) = draw(scale);
      bn.net.W = parametrize_weight(bn.t_raw, PositiveWeights::ones(n), bn.gamma);
      bn.net.U = Matrix::Zero(n, r);
      for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < r; ++j) bn.net.U(i, j) = draw(scale);
      bn.net.C = Matrix::Zero(q, n);
      for (Index i = 0; i < q; ++i)
        for (Index j = 0; j < n; ++j) bn.net.C(i, j) = draw(scale);
      bn.net.b = Vector::Zero(n);
      for (Index i = 0; i < n; ++i) bn.net.b[i] = rng.uniform(-0.5, 0.5);
      bn.net.c = Vector::Zero(q);
      for (Index i = 0; i < q; ++i) bn.net.c[i] = rng.uniform(-0.5, 0.5);
      bn.net.activation = acts[k % 4];
      bn.input = Vector::Zero(r);
      for (Index j = 0; j < r; ++j) bn.input[j] = rng.uniform(-1.0, 1.0);
      bn.label = static_cast<int>(k % q);

      // Unique argmax rows for the infinity norms of U and C.
      auto argmax_gap_ok = [](const Matrix& m, double gap) {
        if (m.rows() < 2) return true;
        Vector sums(m.rows());
        for (Index i = 0; i < m.rows(); ++i) sums[i] = m.row(i).cwiseAbs().sum();
        double best = -1.0, second = -1.0;
        for (Index i = 0; i < m.rows(); ++i) {
          if (sums[i] > best) {
            second = best;
            best = sums[i];
          } else if (sums[i] > second) {
            second = sums[i];
          }
        }
        return best - second >= gap;
      };
      if (!argmax_gap_ok(bn.net.U, 1e-2 * scale)) continue;
      if (!argmax_gap_ok(bn.net.C, 1e-2 * scale)) continue;

      // Stable specification masks: |C(label,k) - C(j,k)| bounded away from 0.
      bool tc_ok = true;
      for (Index j = 0; j < q && tc_ok; ++j) {
        if (j == bn.label) continue;
        for (Index kk = 0; kk < n; ++kk)
          if (std::abs(bn.net.C(bn.label, kk) - bn.net.C(j, kk)) < 1e-3)
            tc_ok = false;
      }
      if (!tc_ok) continue;

      SolveConfig cfg;
      cfg.tol = 1e-13;
      const SolveReport sr = solve_fixed_point(bn.net, bn.input, cfg);
      if (!sr.converged) continue;
      const bool kinky = bn.net.activation.kind == ActivationKind::relu ||
                         bn.net.activation.kind == ActivationKind::leaky_relu;
      const Vector u = bn.net.W * sr.z_star + bn.net.U * bn.input + bn.net.b;
      if (kinky && u.cwiseAbs().minCoeff() < 1e-2) continue;
      bool z_ok = true;
      for (Index i = 0; i < n; ++i)
        if (sr.z_star[i] != 0.0 && std::abs(sr.z_star[i]) < 1e-3) z_ok = false;
      if (!z_ok) continue;

      const IntervalVector box = IntervalVector::ball(bn.input, 0.05);
      const EmbeddedFixedPoint efp = solve_embedded(bn.net, box, cfg);
      if (!efp.converged) continue;
      if (kinky) {
        const MetzlerPair ws = metzler_split(bn.net.W);
        const SplitPair us = sign_split(bn.net.U);
        const Vector al = ws.metzler * efp.z_lower + ws.nonmetzler * efp.z_upper +
                          us.plus * box.lower + us.minus * box.upper + bn.net.b;
        const Vector au = ws.metzler * efp.z_upper + ws.nonmetzler * efp.z_lower +
                          us.plus * box.upper + us.minus * box.lower + bn.net.b;
        if (al.cwiseAbs().minCoeff() < 1e-2) continue;
        if (au.cwiseAbs().minCoeff() < 1e-2) continue;
      }

      out.push_back(std::move(bn));
    }
    if (out.size() < 20)
      throw std::logic_error("gradient_check_battery: could not assemble battery");
    return out;
  }();
  return battery;
}

bool gradient_gate_passes() {
  static const bool ok = [] {
    for (const BatteryNet& bn : gradient_check_battery()) {
      const FdReport rep =
          finite_difference_check(bn.net, bn.input, bn.label, 1e-6);
      if (rep.kink_flagged) continue;  // unreliable point, not a failure
      if (rep.max_rel_error > 1e-4) return false;
    }
    return true;
  }();
  return ok;
}

}  // namespace cinn
