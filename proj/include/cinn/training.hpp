#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cinn/gradients.hpp"
#include "cinn/model.hpp"
#include "cinn/parallel.hpp"
#include "cinn/solver.hpp"

namespace cinn {

/// -log softmax(logits)[label], computed with max subtraction.
double cross_entropy(const Vector& logits, int label);

enum class TrainAlgo { lipschitz, inclusion };

/// Unconstrained trainable parameters. The hidden weight matrix is always
/// materialized through the measure-bounded parametrization, so
/// mu(W, eta) <= gamma holds after every optimizer step with no projection.
/// eta_cached mirrors exp(log_eta) and is the vector the materialization
/// consumes; keeping it explicit makes save/load round trips bit-exact.
struct TrainableModel {
  Matrix T_raw;      // n x n
  Vector log_eta;    // n
  Vector eta_cached; // exp(log_eta), refreshed after every update
  double gamma = 0.0;
  Matrix U;
  Vector b;
  Matrix C;
  Vector c;
  Activation activation;

  Index n() const { return T_raw.rows(); }
  Index r() const { return U.cols(); }
  Index q() const { return C.rows(); }

  static TrainableModel init(Index n, Index r, Index q, Activation act,
                             double gamma, std::uint64_t seed);

  void refresh_eta();
  PositiveWeights weights() const;
  ImplicitNetwork materialize() const;
  void validate() const;
};

struct TrainingConfig {
  TrainAlgo algo = TrainAlgo::lipschitz;
  double lambda = 0.0;      // Lipschitz regularization weight
  double kappa_nom = 0.0;   // inclusion robust-term weight after the ramp
  double eps_test = 0.0;    // inclusion box radius after the ramp
  int ramp_start = 1;       // first epoch of the linear ramp (1-based)
  int ramp_end = 1;         // epoch at which (eps_test, kappa_nom) is reached
  int epochs = 1;
  int batch_size = 100;
  double learning_rate = 5e-4;
  int lr_drop_epoch = 0;    // 0 disables the drop
  double lr_drop_rate = 1e-4;
  std::uint64_t seed = 0;
  bool eta_trainable = false;
  double solve_tol = 1e-8;
  ExecMode mode = ExecMode::openmp;

  void validate() const;
};

struct EpochStats {
  double objective = 0.0;      // per-sample mean of the optimized objective
  double nominal_loss = 0.0;   // per-sample mean cross-entropy
  double robust_term = 0.0;    // per-sample mean of the robust/regularizer part
  double clean_accuracy = 0.0;
  double wall_seconds = 0.0;
  long skipped = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  TrainableModel model;
  long total_skipped = 0;
};

/// Batch objective gradients expressed in trainable coordinates.
struct ObjectiveResult {
  double loss = 0.0;          // full batch objective (summed over samples)
  double nominal_sum = 0.0;   // sum of per-sample cross-entropies
  double robust_sum = 0.0;    // regularizer value resp. summed robust terms
  long correct = 0;
  long skipped = 0;
  Matrix d_T;
  Vector d_log_eta;
  Matrix d_U;
  Vector d_b;
  Matrix d_C;
  Vector d_c;
};

/// sum-of-batch cross-entropy + lambda * (eta_max/eta_min) ||U|| ||C|| /
/// (1 - mu+). Norm and measure subgradients select the first argmax row.
ObjectiveResult lipschitz_objective(const TrainableModel& model,
                                    const std::vector<Vector>& inputs,
                                    const std::vector<int>& labels,
                                    double lambda, const TrainingConfig& cfg);

/// sum over the batch of (1-kappa) CE(f(x), y) + kappa CE(-m_lower, y) with
/// the gap lower bound taken over [x - eps, x + eps]. Samples whose embedded
/// solve fails are skipped and counted.
ObjectiveResult inclusion_objective(const TrainableModel& model,
                                    const std::vector<Vector>& inputs,
                                    const std::vector<int>& labels,
                                    double kappa, double eps,
                                    const TrainingConfig& cfg);

struct RampPoint {
  double eps = 0.0;
  double kappa = 0.0;
};

/// (0,0) before ramp_start, (eps_test, kappa_nom) at and after ramp_end,
/// linear in between with epoch ramp_start already off zero.
RampPoint ramp_schedule(const TrainingConfig& cfg, int epoch);

/// Adam loop over the chosen objective. Deterministic given (seed, config):
/// per-sample gradients are computed in fixed-size chunks whose reduction
/// order never depends on the thread count. Refuses to run if the gradient
/// check gate fails; aborts when the loss turns non-finite or more than 1% of
/// an epoch's samples skip.
TrainReport train(TrainableModel model, const std::vector<Vector>& inputs,
                  const std::vector<int>& labels, const TrainingConfig& cfg);

}  // namespace cinn
