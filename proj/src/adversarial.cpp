#include "cinn/adversarial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cinn/gradients.hpp"
#include "cinn/rng.hpp"
#include "cinn/training.hpp"

namespace cinn {

const char* attack_method_name(AttackMethod m) {
  return m == AttackMethod::fgsm ? "fgsm" : "pgd";
}

void AttackConfig::validate() const {
  if (!(eps >= 0.0)) throw InvalidInput("AttackConfig: eps must be >= 0");
  if (method == AttackMethod::pgd) {
    if (steps < 1) throw InvalidInput("AttackConfig: steps must be >= 1");
    if (step_size < 0.0)
      throw InvalidInput("AttackConfig: step_size must be >= 0");
  }
}

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Clip first (optional), ball-project last: the ball constraint is exact by
// construction, and for x in [0,1] the projection cannot leave the unit box.
Vector project(const Vector& y, const Vector& center, double eps, bool clip) {
  Vector out = y;
  if (clip) out = out.cwiseMax(0.0).cwiseMin(1.0);
  out = out.cwiseMax((center.array() - eps).matrix())
            .cwiseMin((center.array() + eps).matrix());
  return out;
}

double ce_at(const ImplicitNetwork& net, const Vector& x, int label,
             const SolveConfig& scfg) {
  const SolveReport sr = solve_fixed_point(net, x, scfg);
  if (!sr.converged) throw SolveFailure("attack: loss evaluation diverged");
  return cross_entropy(net.output_map(sr.z_star), label);
}

}  // namespace

Vector fgsm(const ImplicitNetwork& net, const Vector& x, int label,
            const AttackConfig& cfg, const SolveConfig& scfg) {
  cfg.validate();
  if (cfg.eps == 0.0) return x;
  const Vector g = loss_input_gradient(net, x, label, scfg);
  Vector adv = x;
  for (Index i = 0; i < x.size(); ++i) adv[i] += cfg.eps * sign_of(g[i]);
  return project(adv, x, cfg.eps, cfg.clip_to_unit_box);
}

Vector pgd(const ImplicitNetwork& net, const Vector& x, int label,
           const AttackConfig& cfg, const SolveConfig& scfg, long sample_id) {
  cfg.validate();
  if (cfg.eps == 0.0) return x;
  const double step = cfg.step_size > 0.0 ? cfg.step_size : cfg.eps / 10.0;

  Vector cur = x;
  if (cfg.random_start) {
    Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(sample_id)));
    for (Index i = 0; i < cur.size(); ++i)
      cur[i] += cfg.eps * rng.uniform(-1.0, 1.0);
    cur = project(cur, x, cfg.eps, cfg.clip_to_unit_box);
  }

  Vector best = cur;
  double best_loss = -std::numeric_limits<double>::infinity();
  for (int s = 1; s <= cfg.steps; ++s) {
    const LossGradients lg = cross_entropy_loss_gradients(net, cur, label, scfg);
    if (s > 1 && lg.loss > best_loss) {
      best_loss = lg.loss;
      best = cur;
    }
    Vector next = cur;
    for (Index i = 0; i < cur.size(); ++i)
      next[i] += step * sign_of(lg.grads.d_x[i]);
    cur = project(next, x, cfg.eps, cfg.clip_to_unit_box);
  }
  const double final_loss = ce_at(net, cur, label, scfg);
  if (final_loss > best_loss) best = cur;
  return best;
}

Curve empirical_robust_fraction(const ImplicitNetwork& net,
                                const std::vector<Vector>& inputs,
                                const std::vector<int>& labels,
                                const std::vector<double>& eps_list,
                                const AttackConfig& cfg,
                                const SolveConfig& scfg,
                                const std::string& model_id, ExecMode mode) {
  if (inputs.size() != labels.size())
    throw InvalidInput("empirical_robust_fraction: inputs/labels mismatch");
  Curve curve;
  curve.method = attack_method_name(cfg.method);
  curve.model_id = model_id;
  if (inputs.empty()) return curve;

  std::vector<double> eps_sorted = eps_list;
  std::sort(eps_sorted.begin(), eps_sorted.end());

  const long count = static_cast<long>(inputs.size());
  std::vector<char> broken(count, 0);
  for (double eps : eps_sorted) {
    AttackConfig acfg = cfg;
    acfg.eps = eps;
    parallel_for(count, mode, [&](std::int64_t i) {
      if (broken[i]) return;
      try {
        const Vector adv = acfg.method == AttackMethod::fgsm
                               ? fgsm(net, inputs[i], labels[i], acfg, scfg)
                               : pgd(net, inputs[i], labels[i], acfg, scfg, i);
        const SolveReport sr = solve_fixed_point(net, adv, scfg);
        if (!sr.converged ||
            !strictly_correct(net.output_map(sr.z_star), labels[i]))
          broken[i] = 1;
      } catch (const std::exception&) {
        broken[i] = 1;
      }
    });
    long robust = 0;
    for (long i = 0; i < count; ++i) robust += broken[i] ? 0 : 1;
    curve.points.push_back(
        {eps, static_cast<double>(robust) / static_cast<double>(count)});
  }
  return curve;
}

}  // namespace cinn
