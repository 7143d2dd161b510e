#include "cinn/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <omp.h>

#include "cinn/certification.hpp"
#include "cinn/rng.hpp"

namespace cinn {

double cross_entropy(const Vector& logits, int label) {
  require_finite(logits, "cross_entropy logits");
  if (label < 0 || label >= logits.size())
    throw InvalidInput("cross_entropy: label out of range");
  const double m = logits.maxCoeff();
  const double lse = std::log((logits.array() - m).exp().sum());
  return lse - (logits[label] - m);
}

TrainableModel TrainableModel::init(Index n, Index r, Index q, Activation act,
                                    double gamma, std::uint64_t seed) {
  if (n < 1 || r < 1 || q < 1) throw InvalidInput("TrainableModel: bad dims");
  if (!(gamma < 1.0))
    throw NotContractive("TrainableModel: gamma must be < 1");
  Rng rng(seed);
  const double s = 1.0 / std::sqrt(static_cast<double>(n));
  TrainableModel m;
  m.gamma = gamma;
  m.activation = act;
  m.T_raw = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m.T_raw(i, j) = rng.uniform(-s, s);
  m.U = Matrix::Zero(n, r);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < r; ++j) m.U(i, j) = rng.uniform(-s, s);
  m.C = Matrix::Zero(q, n);
  for (Index i = 0; i < q; ++i)
    for (Index j = 0; j < n; ++j) m.C(i, j) = rng.uniform(-s, s);
  m.b = Vector::Zero(n);
  m.c = Vector::Zero(q);
  m.log_eta = Vector::Zero(n);
  m.refresh_eta();
  return m;
}

void TrainableModel::refresh_eta() { eta_cached = log_eta.array().exp(); }

PositiveWeights TrainableModel::weights() const {
  return PositiveWeights(eta_cached);
}

ImplicitNetwork TrainableModel::materialize() const {
  ImplicitNetwork net;
  net.W = parametrize_weight(T_raw, weights(), gamma);
  net.U = U;
  net.b = b;
  net.C = C;
  net.c = c;
  net.activation = activation;
  return net;
}

void TrainableModel::validate() const {
  activation.validate();
  if (T_raw.rows() < 1 || T_raw.rows() != T_raw.cols())
    throw InvalidInput("TrainableModel: T_raw must be square");
  if (!(gamma < 1.0))
    throw NotContractive("TrainableModel: gamma must be < 1");
  if (log_eta.size() != n() || eta_cached.size() != n())
    throw InvalidInput("TrainableModel: eta length != n");
  if (U.rows() != n() || b.size() != n() || C.cols() != n() ||
      c.size() != C.rows())
    throw InvalidInput("TrainableModel: inconsistent dimensions");
  require_finite(T_raw, "T_raw");
  require_finite(log_eta, "log_eta");
  require_finite(U, "U");
  require_finite(b, "b");
  require_finite(C, "C");
  require_finite(c, "c");
}

void TrainingConfig::validate() const {
  if (epochs < 1 || batch_size < 1)
    throw InvalidInput("TrainingConfig: epochs and batch_size must be >= 1");
  if (!(learning_rate > 0.0))
    throw InvalidInput("TrainingConfig: learning_rate must be > 0");
  if (!(lambda >= 0.0)) throw InvalidInput("TrainingConfig: lambda must be >= 0");
  if (!(kappa_nom >= 0.0 && kappa_nom <= 1.0))
    throw InvalidInput("TrainingConfig: kappa_nom must lie in [0, 1]");
  if (!(eps_test >= 0.0))
    throw InvalidInput("TrainingConfig: eps_test must be >= 0");
  if (ramp_start > ramp_end)
    throw InvalidInput("TrainingConfig: ramp must be well ordered");
  if (!(solve_tol > 0.0))
    throw InvalidInput("TrainingConfig: solve_tol must be > 0");
  if (lr_drop_epoch > 0 && !(lr_drop_rate > 0.0))
    throw InvalidInput("TrainingConfig: lr_drop_rate must be > 0");
}

RampPoint ramp_schedule(const TrainingConfig& cfg, int epoch) {
  if (epoch < 1) throw InvalidInput("ramp_schedule: epoch must be >= 1");
  if (epoch < cfg.ramp_start) return {0.0, 0.0};
  if (epoch >= cfg.ramp_end) return {cfg.eps_test, cfg.kappa_nom};
  const double t = static_cast<double>(epoch - cfg.ramp_start + 1) /
                   static_cast<double>(cfg.ramp_end - cfg.ramp_start + 1);
  return {t * cfg.eps_test, t * cfg.kappa_nom};
}

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Pulls a gradient on the materialized W back to the trainable coordinates
// T (and log_eta when trained). W(i,j) = (eta_j/eta_i) T(i,j) off the
// diagonal and W(i,i) = T(i,i) - sum_j |T(i,j)| + gamma.
void chain_w_gradient(const TrainableModel& model, const Matrix& d_w,
                      Matrix& d_t, Vector& d_log_eta, bool eta_trainable) {
  const Index n = model.n();
  const Vector& eta = model.eta_cached;
  for (Index i = 0; i < n; ++i) {
    const double dii = d_w(i, i);
    for (Index j = 0; j < n; ++j) {
      if (i == j) {
        d_t(i, i) += dii * (1.0 - sign_of(model.T_raw(i, i)));
      } else {
        d_t(i, j) += d_w(i, j) * (eta[j] / eta[i]) -
                     dii * sign_of(model.T_raw(i, j));
      }
    }
  }
  if (eta_trainable) {
    const Matrix w = parametrize_weight(model.T_raw, model.weights(), model.gamma);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double coupling = d_w(i, j) * w(i, j);
        d_log_eta[j] += coupling;
        d_log_eta[i] -= coupling;
      }
  }
}

struct SampleSlot {
  ParameterGradients pg;
  double nominal = 0.0;
  double robust = 0.0;
  int status = 0;  // 0 ok, 1 skipped (embedded solve), 2 fatal
  bool correct = false;
};

// Robust term CE(-m_lower, label) of one sample with gradients in network
// coordinates. Throws SolveFailure when the embedded machinery fails.
double robust_sample_gradients(const ImplicitNetwork& net, const Vector& x,
                               int label, double eps, const SolveConfig& scfg,
                               ParameterGradients& pg) {
  const IntervalVector box = IntervalVector::ball(x, eps);
  const EmbeddedFixedPoint efp = solve_embedded(net, box, scfg);
  if (!efp.converged)
    throw SolveFailure("robust term: embedded solve did not converge");
  const Specification spec = spec_matrix(label, net.q());
  const Matrix tc = spec.matrix * net.C;
  const SplitPair tcs = sign_split(tc);
  const Vector ml = tcs.plus * efp.z_lower + tcs.minus * efp.z_upper +
                    spec.matrix * net.c;
  const double loss = cross_entropy(-ml, label);

  Vector ds = stable_softmax(-ml);
  ds[label] -= 1.0;
  const Vector dm = -ds;  // d loss / d m_lower

  const Vector vl = tcs.plus.transpose() * dm;
  const Vector vu = tcs.minus.transpose() * dm;
  ParameterGradients g = embedded_vjp(net, box, efp, vl, vu, scfg);

  // Readout gradients through [T C]+/- with the forward masks held fixed.
  Matrix a(net.q(), net.n());
  for (Index j = 0; j < net.q(); ++j)
    for (Index k = 0; k < net.n(); ++k)
      a(j, k) = dm[j] * (tc(j, k) >= 0.0 ? efp.z_lower[k] : efp.z_upper[k]);
  g.d_C = spec.matrix.transpose() * a;
  g.d_c = spec.matrix.transpose() * dm;

  pg += g;
  return loss;
}

constexpr long kChunk = 256;

void ensure_gate() {
  if (!gradient_gate_passes())
    throw SolveFailure(
        "training refused: gradient finite-difference gate failed");
}

ObjectiveResult make_result(const TrainableModel& model) {
  ObjectiveResult res;
  res.d_T = Matrix::Zero(model.n(), model.n());
  res.d_log_eta = Vector::Zero(model.n());
  res.d_U = Matrix::Zero(model.n(), model.r());
  res.d_b = Vector::Zero(model.n());
  res.d_C = Matrix::Zero(model.q(), model.n());
  res.d_c = Vector::Zero(model.q());
  return res;
}

// Shared batch loop: fills per-sample slots in fixed-size chunks (parallel
// within a chunk, chunk layout independent of thread count) and reduces them
// serially, so accumulation order is always the same.
template <class PerSample>
void run_batch(long count, ExecMode mode, PerSample&& per_sample,
               ObjectiveResult& res, Matrix& d_w_sum,
               const TrainableModel& model) {
  for (long start = 0; start < count; start += kChunk) {
    const long m = std::min(kChunk, count - start);
    std::vector<SampleSlot> slots(m);
    parallel_for(m, mode, [&](std::int64_t i) {
      slots[i].pg = ParameterGradients::zeros(model.n(), model.r(), model.q());
      try {
        per_sample(start + i, slots[i]);
      } catch (const SolveFailure&) {
        slots[i].status = 1;
      } catch (const std::exception&) {
        slots[i].status = 2;
      }
    });
    for (long i = 0; i < m; ++i) {
      const SampleSlot& s = slots[i];
      if (s.status == 2)
        throw SolveFailure("objective: sample evaluation failed fatally");
      if (s.status == 1) {
        ++res.skipped;
        continue;
      }
      res.nominal_sum += s.nominal;
      res.robust_sum += s.robust;
      if (s.correct) ++res.correct;
      d_w_sum += s.pg.d_W;
      res.d_U += s.pg.d_U;
      res.d_b += s.pg.d_b;
      res.d_C += s.pg.d_C;
      res.d_c += s.pg.d_c;
    }
  }
}

}  // namespace

ObjectiveResult lipschitz_objective(const TrainableModel& model,
                                    const std::vector<Vector>& inputs,
                                    const std::vector<int>& labels,
                                    double lambda, const TrainingConfig& cfg) {
  ensure_gate();
  model.validate();
  if (inputs.size() != labels.size())
    throw InvalidInput("lipschitz_objective: inputs/labels length mismatch");
  const ImplicitNetwork net = model.materialize();
  const PositiveWeights w = model.weights();
  SolveConfig scfg;
  scfg.eta = w.eta();
  scfg.tol = cfg.solve_tol;

  ObjectiveResult res = make_result(model);
  Matrix d_w_sum = Matrix::Zero(model.n(), model.n());
  run_batch(
      static_cast<long>(inputs.size()), cfg.mode,
      [&](long i, SampleSlot& slot) {
        const LossGradients lg =
            cross_entropy_loss_gradients(net, inputs[i], labels[i], scfg);
        slot.nominal = lg.loss;
        slot.pg += lg.grads;
        const SolveReport sr = solve_fixed_point(net, inputs[i], scfg);
        slot.correct = strictly_correct(net.output_map(sr.z_star), labels[i]);
      },
      res, d_w_sum, model);

  // Regularizer (eta_max/eta_min) ||U|| ||C|| / (1 - mu+), subgradients on
  // the first argmax rows; max(mu, 0) uses slope 0 at the kink.
  const Vector& eta = w.eta();
  const Index n = model.n();
  double mu = -std::numeric_limits<double>::infinity();
  Index mu_row = 0;
  for (Index i = 0; i < n; ++i) {
    double row = net.W(i, i);
    for (Index j = 0; j < n; ++j)
      if (j != i) row += eta[i] / eta[j] * std::abs(net.W(i, j));
    if (row > mu) {
      mu = row;
      mu_row = i;
    }
  }
  const double mu_plus = std::max(mu, 0.0);
  const double nu = inf_operator_norm(net.U);
  const double nc = inf_operator_norm(net.C);
  const double inv = 1.0 / (1.0 - mu_plus);
  const double reg = w.ratio() * nu * nc * inv;
  res.robust_sum = lambda * reg;
  res.loss = res.nominal_sum + lambda * reg;

  if (lambda > 0.0) {
    Index u_row = 0, c_row = 0;
    double best = -1.0;
    for (Index i = 0; i < net.U.rows(); ++i) {
      const double s = net.U.row(i).cwiseAbs().sum();
      if (s > best) {
        best = s;
        u_row = i;
      }
    }
    best = -1.0;
    for (Index i = 0; i < net.C.rows(); ++i) {
      const double s = net.C.row(i).cwiseAbs().sum();
      if (s > best) {
        best = s;
        c_row = i;
      }
    }
    for (Index j = 0; j < net.U.cols(); ++j)
      res.d_U(u_row, j) +=
          lambda * w.ratio() * nc * inv * sign_of(net.U(u_row, j));
    for (Index j = 0; j < net.C.cols(); ++j)
      res.d_C(c_row, j) +=
          lambda * w.ratio() * nu * inv * sign_of(net.C(c_row, j));

    if (mu > 0.0) {
      const double coef = lambda * reg * inv;
      d_w_sum(mu_row, mu_row) += coef;
      for (Index j = 0; j < n; ++j)
        if (j != mu_row)
          d_w_sum(mu_row, j) +=
              coef * (eta[mu_row] / eta[j]) * sign_of(net.W(mu_row, j));
      if (cfg.eta_trainable) {
        res.d_log_eta[mu_row] += coef * (mu - net.W(mu_row, mu_row));
        for (Index j = 0; j < n; ++j)
          if (j != mu_row)
            res.d_log_eta[j] -=
                coef * (eta[mu_row] / eta[j]) * std::abs(net.W(mu_row, j));
      }
    }
    if (cfg.eta_trainable && n > 1) {
      Index imax = 0, imin = 0;
      for (Index i = 1; i < n; ++i) {
        if (eta[i] > eta[imax]) imax = i;
        if (eta[i] < eta[imin]) imin = i;
      }
      const double dr = lambda * nu * nc * inv * w.ratio();
      res.d_log_eta[imax] += dr;
      res.d_log_eta[imin] -= dr;
    }
  }

  chain_w_gradient(model, d_w_sum, res.d_T, res.d_log_eta, cfg.eta_trainable);
  return res;
}

ObjectiveResult inclusion_objective(const TrainableModel& model,
                                    const std::vector<Vector>& inputs,
                                    const std::vector<int>& labels,
                                    double kappa, double eps,
                                    const TrainingConfig& cfg) {
  ensure_gate();
  model.validate();
  if (inputs.size() != labels.size())
    throw InvalidInput("inclusion_objective: inputs/labels length mismatch");
  if (!(kappa >= 0.0 && kappa <= 1.0))
    throw InvalidInput("inclusion_objective: kappa must lie in [0, 1]");
  if (!(eps >= 0.0))
    throw InvalidInput("inclusion_objective: eps must be >= 0");
  const ImplicitNetwork net = model.materialize();
  const PositiveWeights w = model.weights();
  SolveConfig scfg;
  scfg.eta = w.eta();
  scfg.tol = cfg.solve_tol;

  ObjectiveResult res = make_result(model);
  Matrix d_w_sum = Matrix::Zero(model.n(), model.n());
  run_batch(
      static_cast<long>(inputs.size()), cfg.mode,
      [&](long i, SampleSlot& slot) {
        const LossGradients lg =
            cross_entropy_loss_gradients(net, inputs[i], labels[i], scfg);
        slot.nominal = lg.loss;
        {
          const SolveReport sr = solve_fixed_point(net, inputs[i], scfg);
          slot.correct =
              strictly_correct(net.output_map(sr.z_star), labels[i]);
        }
        if (kappa > 0.0) {
          ParameterGradients rg =
              ParameterGradients::zeros(net.n(), net.r(), net.q());
          slot.robust = robust_sample_gradients(net, inputs[i], labels[i], eps,
                                                scfg, rg);
          rg *= kappa;
          slot.pg += rg;
        }
        ParameterGradients ng = lg.grads;
        ng *= (1.0 - kappa);
        slot.pg += ng;
      },
      res, d_w_sum, model);

  res.loss = (1.0 - kappa) * res.nominal_sum + kappa * res.robust_sum;
  chain_w_gradient(model, d_w_sum, res.d_T, res.d_log_eta, cfg.eta_trainable);
  return res;
}

namespace {

struct Adam {
  Matrix mT, vT, mU, vU, mC, vC;
  Vector mb, vb, mc, vc, ml, vl;
  long t = 0;

  explicit Adam(const TrainableModel& m) {
    mT = Matrix::Zero(m.n(), m.n());
    vT = mT;
    mU = Matrix::Zero(m.n(), m.r());
    vU = mU;
    mC = Matrix::Zero(m.q(), m.n());
    vC = mC;
    mb = Vector::Zero(m.n());
    vb = mb;
    mc = Vector::Zero(m.q());
    vc = mc;
    ml = Vector::Zero(m.n());
    vl = ml;
  }

  template <class T>
  static void update(T& p, const T& g, T& m, T& v, double lr, long t) {
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g.cwiseProduct(g);
    const double bc1 = 1.0 - std::pow(0.9, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(0.999, static_cast<double>(t));
    p.array() -=
        lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + 1e-8);
  }

  void step(TrainableModel& model, const ObjectiveResult& g, double lr,
            bool eta_trainable) {
    ++t;
    update(model.T_raw, g.d_T, mT, vT, lr, t);
    update(model.U, g.d_U, mU, vU, lr, t);
    update(model.b, g.d_b, mb, vb, lr, t);
    update(model.C, g.d_C, mC, vC, lr, t);
    update(model.c, g.d_c, mc, vc, lr, t);
    if (eta_trainable) update(model.log_eta, g.d_log_eta, ml, vl, lr, t);
    model.refresh_eta();
  }
};

}  // namespace

TrainReport train(TrainableModel model, const std::vector<Vector>& inputs,
                  const std::vector<int>& labels, const TrainingConfig& cfg) {
  cfg.validate();
  model.validate();
  ensure_gate();
  if (inputs.empty()) throw InvalidInput("train: dataset is empty");
  if (inputs.size() != labels.size())
    throw InvalidInput("train: inputs/labels length mismatch");
  for (int y : labels)
    if (y < 0 || y >= model.q())
      throw InvalidInput("train: label out of range");

  const long count = static_cast<long>(inputs.size());
  Rng rng(cfg.seed);
  Adam adam(model);
  TrainReport report;

  std::vector<long> order(count);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double t0 = omp_get_wtime();
    const double lr = (cfg.lr_drop_epoch > 0 && epoch >= cfg.lr_drop_epoch)
                          ? cfg.lr_drop_rate
                          : cfg.learning_rate;
    const RampPoint ramp = ramp_schedule(cfg, epoch);

    for (long i = count - 1; i > 0; --i) {
      const long j = static_cast<long>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[i], order[j]);
    }

    EpochStats stats;
    double objective_sum = 0.0, nominal_sum = 0.0, robust_sum = 0.0;
    long correct = 0, skipped = 0;

    for (long start = 0; start < count; start += cfg.batch_size) {
      const long m = std::min<long>(cfg.batch_size, count - start);
      std::vector<Vector> bx(m);
      std::vector<int> by(m);
      for (long i = 0; i < m; ++i) {
        bx[i] = inputs[order[start + i]];
        by[i] = labels[order[start + i]];
      }
      ObjectiveResult res =
          cfg.algo == TrainAlgo::lipschitz
              ? lipschitz_objective(model, bx, by, cfg.lambda, cfg)
              : inclusion_objective(model, bx, by, ramp.kappa, ramp.eps, cfg);
      if (!std::isfinite(res.loss))
        throw SolveFailure("training aborted: non-finite loss at epoch " +
                           std::to_string(epoch));
      adam.step(model, res, lr, cfg.eta_trainable);
      objective_sum += res.loss;
      nominal_sum += res.nominal_sum;
      robust_sum += cfg.algo == TrainAlgo::lipschitz
                        ? res.robust_sum
                        : ramp.kappa * res.robust_sum;
      correct += res.correct;
      skipped += res.skipped;
    }

    if (skipped > 0 && skipped * 100 > count)
      throw SolveFailure(
          "training aborted: more than 1% of samples skipped in epoch " +
          std::to_string(epoch));

    stats.objective = objective_sum / static_cast<double>(count);
    stats.nominal_loss = nominal_sum / static_cast<double>(count);
    stats.robust_term = robust_sum / static_cast<double>(count);
    stats.clean_accuracy =
        static_cast<double>(correct) / static_cast<double>(count);
    stats.skipped = skipped;
    stats.wall_seconds = omp_get_wtime() - t0;
    report.epochs.push_back(stats);
    report.total_skipped += skipped;
  }

  report.model = std::move(model);
  return report;
}

}  // namespace cinn
