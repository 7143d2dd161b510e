#pragma once

#include "cinn/model.hpp"
#include "cinn/parallel.hpp"
#include "cinn/solver.hpp"
#include "cinn/types.hpp"

namespace cinn {

enum class ReachMethod { metzler_inclusion, lipschitz_ball, sign_split, brute_force };

const char* reach_method_name(ReachMethod m);

struct ReachResult {
  IntervalVector output_box;  // over the q outputs
  IntervalVector state_box;   // over the n hidden states
  ReachMethod method = ReachMethod::metzler_inclusion;
  long iterations = 0;    // solver iterations spent
  long evaluations = 0;   // forward solves (brute force only)
  bool converged = false;
};

/// Box over-approximation of the reachable outputs via the embedded two-row
/// fixed point: lower = [C]+ zl + [C]- zu + c, upper = [C]+ zu + [C]- zl + c.
ReachResult reach_inclusion(const ImplicitNetwork& net,
                            const IntervalVector& box, const SolveConfig& cfg);

/// Ball bound around f(center): every output within
/// (eta_max/eta_min) ||U||inf ||C||inf / (1 - max(mu,0)) * eps of f(center).
ReachResult reach_lipschitz(const ImplicitNetwork& net, const Vector& center,
                            double eps, const SolveConfig& cfg);

/// Same coupled structure as reach_inclusion but with the entrywise sign
/// split of W instead of the Metzler split. The iteration is not guaranteed
/// to converge; divergence is reported via converged = false, never thrown.
ReachResult reach_sign_split(const ImplicitNetwork& net,
                             const IntervalVector& box,
                             const SolveConfig& cfg);

/// Test oracle: evaluates the network on a full regular grid over the box
/// (all corners included) and returns componentwise min/max. This
/// under-approximates the exact output range. Guarded by
/// r * grid_per_dim^r <= 1e7.
ReachResult brute_force_tight_inclusion(const ImplicitNetwork& net,
                                        const IntervalVector& box,
                                        long grid_per_dim,
                                        const SolveConfig& cfg,
                                        ExecMode mode = ExecMode::openmp);

}  // namespace cinn
