#pragma once

#include <vector>

#include "cinn/model.hpp"
#include "cinn/solver.hpp"
#include "cinn/types.hpp"

namespace cinn {

struct ParameterGradients {
  Matrix d_W;  // n x n
  Matrix d_U;  // n x r
  Vector d_b;  // n
  Matrix d_C;  // q x n
  Vector d_c;  // q
  Vector d_x;  // r

  static ParameterGradients zeros(Index n, Index r, Index q);
  ParameterGradients& operator+=(const ParameterGradients& other);
  ParameterGradients& operator*=(double s);
};

enum class LossKind { cross_entropy };

/// Numerically stable softmax (max subtraction).
Vector stable_softmax(const Vector& logits);

/// Gradients of s = v^T z* through the fixed point z* = Phi(W z* + U x + b).
/// Solves the adjoint equation w = v + (D W)^T w with the alpha-averaged
/// iteration, which contracts in the dual (weighted l1) norm at the same rate
/// as the forward solve. d_C and d_c are zero here; readout gradients attach
/// at the loss layer.
ParameterGradients fixed_point_vjp(const ImplicitNetwork& net, const Vector& x,
                                   const Vector& z_star, const Vector& v,
                                   const SolveConfig& cfg);

/// Gradients of s = v_lower^T zl* + v_upper^T zu* through the embedded
/// two-row fixed point. The Metzler/sign split masks are treated as locally
/// constant; entries exactly at zero follow the forward pass's mask. d_x is
/// the combined box-endpoint gradient (both endpoints moving with the
/// center), which equals U^T (g_lower + g_upper).
ParameterGradients embedded_vjp(const ImplicitNetwork& net,
                                const IntervalVector& box,
                                const EmbeddedFixedPoint& efp,
                                const Vector& v_lower, const Vector& v_upper,
                                const SolveConfig& cfg);

/// Gradient of the cross-entropy loss on f(x) with respect to the input.
Vector loss_input_gradient(const ImplicitNetwork& net, const Vector& x,
                           int label, const SolveConfig& cfg,
                           LossKind kind = LossKind::cross_entropy);

struct LossGradients {
  double loss = 0.0;
  ParameterGradients grads;
};

/// Cross-entropy loss of f(x) against the label, with gradients for every
/// parameter (readout included) and the input.
LossGradients cross_entropy_loss_gradients(const ImplicitNetwork& net,
                                           const Vector& x, int label,
                                           const SolveConfig& cfg);

struct FdReport {
  double max_rel_error = 0.0;
  bool kink_flagged = false;  // an activation input sits near a kink; the
                              // comparison is unreliable there
};

/// Central finite differences of the cross-entropy loss on every scalar
/// parameter (W, U, b, C, c and the input) against the analytic gradients.
/// Relative errors use denominators floored at 1e-8.
FdReport finite_difference_check(const ImplicitNetwork& net, const Vector& x,
                                 int label, double step);

/// Deterministic battery of small nets with clean gradients (entries bounded
/// away from split masks, activations away from kinks, unique norm argmax
/// rows). Training refuses to run unless the whole battery passes the finite
/// difference check at 1e-4.
struct BatteryNet {
  ImplicitNetwork net;
  Matrix t_raw;
  double gamma = 0.0;
  Vector input;
  int label = 0;
};

const std::vector<BatteryNet>& gradient_check_battery();
bool gradient_gate_passes();

}  // namespace cinn
