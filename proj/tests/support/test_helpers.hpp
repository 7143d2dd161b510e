#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "cinn/gradients.hpp"
#include "cinn/measures.hpp"
#include "cinn/model.hpp"
#include "cinn/rng.hpp"
#include "cinn/solver.hpp"
#include "cinn/training.hpp"
#include "cinn/types.hpp"

namespace cinn::testsupport {

inline Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline Vector vec(std::initializer_list<double> values) {
  Vector v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

/// Scalar net z = act(w z + u x + b), y = c z.
inline ImplicitNetwork scalar_net(double w, double u, double b, double c,
                                  Activation act) {
  ImplicitNetwork net;
  net.W = Matrix::Constant(1, 1, w);
  net.U = Matrix::Constant(1, 1, u);
  net.b = Vector::Constant(1, b);
  net.C = Matrix::Constant(1, 1, c);
  net.c = Vector::Zero(1);
  net.activation = act;
  return net;
}

/// The two-logit passthrough net f(x) = (x, -x): W = 0, U = 1, C = (1; -1).
inline ImplicitNetwork mirror_net() {
  ImplicitNetwork net;
  net.W = Matrix::Zero(1, 1);
  net.U = Matrix::Constant(1, 1, 1.0);
  net.b = Vector::Zero(1);
  net.C = Matrix(2, 1);
  net.C << 1.0, -1.0;
  net.c = Vector::Zero(2);
  net.activation = Activation::identity();
  return net;
}

/// Random network with a contraction certificate by construction:
/// W = parametrize_weight(T, eta, gamma) so mu(W, eta) <= gamma.
inline ImplicitNetwork random_wellposed_net(Rng& rng, Index n, Index r, Index q,
                                            double gamma, Activation act,
                                            const Vector& eta = Vector()) {
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix t(n, n), u(n, r), c(q, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) t(i, j) = rng.uniform(-s, s);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < r; ++j) u(i, j) = rng.uniform(-1.0, 1.0);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < n; ++j) c(i, j) = rng.uniform(-1.0, 1.0);
  const PositiveWeights w =
      eta.size() ? PositiveWeights(eta) : PositiveWeights::ones(n);
  ImplicitNetwork net;
  net.W = parametrize_weight(t, w, gamma);
  net.U = u;
  net.C = c;
  net.b = Vector::Zero(n);
  for (Index i = 0; i < n; ++i) net.b[i] = rng.uniform(-0.5, 0.5);
  net.c = Vector::Zero(q);
  for (Index i = 0; i < q; ++i) net.c[i] = rng.uniform(-0.5, 0.5);
  net.activation = act;
  return net;
}

inline Vector random_vector(Rng& rng, Index n, double lo = -1.0,
                            double hi = 1.0) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

/// Independent scalar fixed-point oracle: bisection on g(z) = z - act(wz+ux+b)
/// over [lo, hi]. Assumes g is increasing (w < 1 for the supported
/// activations).
inline double bisect_scalar_fixed_point(double w, double u, double b, double x,
                                        const Activation& act, double lo,
                                        double hi) {
  auto g = [&](double z) { return z - activation_scalar(act, w * z + u * x + b); };
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// Central finite difference of a scalar function.
inline double central_diff(const std::function<double(double)>& f, double x0,
                           double step) {
  return (f(x0 + step) - f(x0 - step)) / (2.0 * step);
}

inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Finite-difference check of a whole training objective in trainable
/// coordinates. Returns the max relative error over every scalar parameter.
inline double objective_fd_max_rel_error(
    const TrainableModel& model0, const std::vector<Vector>& inputs,
    const std::vector<int>& labels, const TrainingConfig& cfg, double step) {
  TrainableModel model = model0;
  auto eval = [&](const TrainableModel& m) {
    return cfg.algo == TrainAlgo::lipschitz
               ? lipschitz_objective(m, inputs, labels, cfg.lambda, cfg).loss
               : inclusion_objective(m, inputs, labels, cfg.kappa_nom,
                                     cfg.eps_test, cfg)
                     .loss;
  };
  const ObjectiveResult res =
      cfg.algo == TrainAlgo::lipschitz
          ? lipschitz_objective(model, inputs, labels, cfg.lambda, cfg)
          : inclusion_objective(model, inputs, labels, cfg.kappa_nom,
                                cfg.eps_test, cfg);

  double worst = 0.0;
  auto probe = [&](double* slot, double analytic) {
    const double saved = *slot;
    *slot = saved + step;
    model.refresh_eta();
    const double up = eval(model);
    *slot = saved - step;
    model.refresh_eta();
    const double down = eval(model);
    *slot = saved;
    model.refresh_eta();
    const double fd = (up - down) / (2.0 * step);
    worst = std::max(worst, rel_err(analytic, fd));
  };

  for (Index i = 0; i < model.n(); ++i)
    for (Index j = 0; j < model.n(); ++j)
      probe(&model.T_raw(i, j), res.d_T(i, j));
  for (Index i = 0; i < model.n(); ++i)
    for (Index j = 0; j < model.r(); ++j) probe(&model.U(i, j), res.d_U(i, j));
  for (Index i = 0; i < model.n(); ++i) probe(&model.b[i], res.d_b[i]);
  for (Index i = 0; i < model.q(); ++i)
    for (Index j = 0; j < model.n(); ++j) probe(&model.C(i, j), res.d_C(i, j));
  for (Index i = 0; i < model.q(); ++i) probe(&model.c[i], res.d_c[i]);
  if (cfg.eta_trainable)
    for (Index i = 0; i < model.n(); ++i)
      probe(&model.log_eta[i], res.d_log_eta[i]);
  return worst;
}

/// Deterministic trainable model whose entries stay away from the split and
/// argmax kinks, suitable for objective finite-difference checks.
inline TrainableModel clean_trainable(Index n, Index r, Index q, Activation act,
                                      double gamma, std::uint64_t seed) {
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  auto draw = [&] {
    const double mag = rng.uniform(0.15, 1.0) * s;
    return rng.uniform() < 0.5 ? -mag : mag;
  };
  TrainableModel m;
  m.gamma = gamma;
  m.activation = act;
  m.T_raw = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m.T_raw(i, j) = draw();
  m.U = Matrix::Zero(n, r);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < r; ++j) m.U(i, j) = draw();
  m.C = Matrix::Zero(q, n);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < n; ++j) m.C(i, j) = 3.0 * draw();
  m.b = random_vector(rng, n, 0.2, 0.7);
  m.c = random_vector(rng, q, -0.5, 0.5);
  m.log_eta = Vector::Zero(n);
  m.refresh_eta();
  return m;
}

}  // namespace cinn::testsupport
