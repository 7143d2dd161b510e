#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cinn/certification.hpp"
#include "cinn/model.hpp"
#include "cinn/parallel.hpp"
#include "cinn/solver.hpp"

namespace cinn {

enum class AttackMethod { fgsm, pgd };

const char* attack_method_name(AttackMethod m);

struct AttackConfig {
  AttackMethod method = AttackMethod::pgd;
  double eps = 0.0;
  int steps = 40;           // pgd
  double step_size = 0.0;   // pgd; 0 means eps / 10
  bool clip_to_unit_box = false;
  std::uint64_t seed = 0;   // pgd random start, mixed with the sample id
  bool random_start = true; // pgd

  void validate() const;
};

/// x + eps * sign(grad loss), sign(0) = 0. Optionally clipped to [0,1]; the
/// result always stays within the eps-ball around x.
Vector fgsm(const ImplicitNetwork& net, const Vector& x, int label,
            const AttackConfig& cfg, const SolveConfig& scfg);

/// Projected gradient descent: random start inside the ball, signed-gradient
/// steps, each followed by the optional [0,1] clip and exact ball projection.
/// Returns the visited iterate with the highest loss. Per-sample randomness
/// is derived from (seed, sample_id) so a parallel schedule never changes
/// results.
Vector pgd(const ImplicitNetwork& net, const Vector& x, int label,
           const AttackConfig& cfg, const SolveConfig& scfg,
           long sample_id = 0);

/// Fraction of samples still (strictly) correctly classified after the attack
/// at each radius. Radii are processed in increasing order and a sample once
/// broken stays broken: the adversarial point found in a smaller ball lies in
/// every larger one, so the curve is monotone by construction.
Curve empirical_robust_fraction(const ImplicitNetwork& net,
                                const std::vector<Vector>& inputs,
                                const std::vector<int>& labels,
                                const std::vector<double>& eps_list,
                                const AttackConfig& cfg,
                                const SolveConfig& scfg,
                                const std::string& model_id = "model",
                                ExecMode mode = ExecMode::openmp);

}  // namespace cinn
