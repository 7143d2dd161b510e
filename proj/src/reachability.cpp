#include "cinn/reachability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace cinn {

const char* reach_method_name(ReachMethod m) {
  switch (m) {
    case ReachMethod::metzler_inclusion: return "metzler_inclusion";
    case ReachMethod::lipschitz_ball: return "lipschitz_ball";
    case ReachMethod::sign_split: return "sign_split";
    case ReachMethod::brute_force: return "brute_force";
  }
  return "unknown";
}

namespace {

ReachResult output_box_from_state(const ImplicitNetwork& net,
                                  const EmbeddedFixedPoint& efp,
                                  ReachMethod method) {
  ReachResult out;
  out.method = method;
  out.iterations = efp.iterations;
  out.converged = efp.converged;
  if (!efp.converged) return out;
  const SplitPair cs = sign_split(net.C);
  Vector lo = cs.plus * efp.z_lower + cs.minus * efp.z_upper + net.c;
  Vector hi = cs.plus * efp.z_upper + cs.minus * efp.z_lower + net.c;
  out.output_box = IntervalVector(std::move(lo), std::move(hi));
  out.state_box = IntervalVector(efp.z_lower.cwiseMin(efp.z_upper),
                                 efp.z_upper.cwiseMax(efp.z_lower));
  return out;
}

}  // namespace

ReachResult reach_inclusion(const ImplicitNetwork& net,
                            const IntervalVector& box,
                            const SolveConfig& cfg) {
  const EmbeddedFixedPoint efp = solve_embedded(net, box, cfg);
  return output_box_from_state(net, efp, ReachMethod::metzler_inclusion);
}

ReachResult reach_lipschitz(const ImplicitNetwork& net, const Vector& center,
                            double eps, const SolveConfig& cfg) {
  if (!(eps >= 0.0)) throw InvalidInput("reach_lipschitz: eps must be >= 0");
  const PositiveWeights w = cfg.weights(net.n());
  const ContractionCertificate cert = check_wellposed(net, w);
  if (!cert.wellposed)
    throw NotContractive("reach_lipschitz: mu >= 1, no Lipschitz bound");
  const double mu_plus = std::max(cert.mu, 0.0);
  const SolveReport sr = solve_fixed_point(net, center, cfg);
  if (!sr.converged) {
    ReachResult out;
    out.method = ReachMethod::lipschitz_ball;
    out.iterations = sr.iterations;
    return out;
  }
  const double xi = w.ratio() * inf_operator_norm(net.U) *
                    inf_operator_norm(net.C) / (1.0 - mu_plus) * eps;
  const Vector f = net.output_map(sr.z_star);
  ReachResult out;
  out.method = ReachMethod::lipschitz_ball;
  out.iterations = sr.iterations;
  out.converged = true;
  out.output_box = IntervalVector(f.array() - xi, f.array() + xi);
  // Hidden-state deviation bound: ||dz||_{inf,eta} <= ||[eta]^{-1} U||_inf
  // / (1 - mu+) * ||dx||_inf, scaled back per component by eta_i.
  double lam = 0.0;
  for (Index i = 0; i < net.n(); ++i)
    lam = std::max(lam, net.U.row(i).cwiseAbs().sum() / w.eta()[i]);
  const double state_radius = lam / (1.0 - mu_plus) * eps;
  out.state_box =
      IntervalVector(sr.z_star - state_radius * w.eta(),
                     sr.z_star + state_radius * w.eta());
  return out;
}

ReachResult reach_sign_split(const ImplicitNetwork& net,
                             const IntervalVector& box,
                             const SolveConfig& cfg) {
  net.validate();
  if (box.size() != net.r())
    throw InvalidInput("reach_sign_split: box dimension != r");
  const PositiveWeights w = cfg.weights(net.n());
  // The averaging step is capped by the coupled system's own diagonal, which
  // is [W]+ and hence nonnegative: any alpha in (0, 1] is admissible.
  double alpha = cfg.alpha == 0.0 ? 1.0 : cfg.alpha;
  if (!(alpha > 0.0) || alpha > 1.0)
    throw InvalidInput("reach_sign_split: alpha outside (0, 1]");
  const SplitPair ws = sign_split(net.W);
  const EmbeddedFixedPoint efp = detail::coupled_fixed_point(
      net, ws.plus, ws.minus, box, w, alpha, cfg.tol, cfg.max_iter, true);
  return output_box_from_state(net, efp, ReachMethod::sign_split);
}

ReachResult brute_force_tight_inclusion(const ImplicitNetwork& net,
                                        const IntervalVector& box,
                                        long grid_per_dim,
                                        const SolveConfig& cfg,
                                        ExecMode mode) {
  net.validate();
  if (box.size() != net.r())
    throw InvalidInput("brute_force_tight_inclusion: box dimension != r");
  const Index r = net.r();
  const long g = std::max<long>(grid_per_dim, 2);  // corners always included

  double budget = static_cast<double>(r);
  for (Index k = 0; k < r; ++k) budget *= static_cast<double>(g);
  if (budget > 1e7)
    throw InvalidInput("brute_force_tight_inclusion: grid budget exceeded");

  long total = 1;
  for (Index k = 0; k < r; ++k) total *= g;

  const PositiveWeights w = cfg.weights(net.n());
  if (!check_wellposed(net, w).wellposed)
    throw NotContractive("brute_force_tight_inclusion: mu >= 1");

  const Index q = net.q();
  // Block-wise min/max accumulation: block layout is fixed, so results do not
  // depend on the parallel schedule (min/max is order-independent anyway).
  constexpr long kBlock = 4096;
  const long nblocks = (total + kBlock - 1) / kBlock;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Vector> blk_out_lo(nblocks, Vector::Constant(q, inf));
  std::vector<Vector> blk_out_hi(nblocks, Vector::Constant(q, -inf));
  std::vector<Vector> blk_st_lo(nblocks, Vector::Constant(net.n(), inf));
  std::vector<Vector> blk_st_hi(nblocks, Vector::Constant(net.n(), -inf));
  std::vector<char> blk_ok(nblocks, 1);

  parallel_for(nblocks, mode, [&](std::int64_t blk) {
    Vector x(r);
    const long lo = blk * kBlock;
    const long hi = std::min(total, lo + kBlock);
    for (long idx = lo; idx < hi; ++idx) {
      long rem = idx;
      for (Index k = 0; k < r; ++k) {
        const long step = rem % g;
        rem /= g;
        x[k] = box.lower[k] +
               (box.upper[k] - box.lower[k]) * static_cast<double>(step) /
                   static_cast<double>(g - 1);
      }
      const SolveReport sr = solve_fixed_point(net, x, cfg);
      if (!sr.converged) {
        blk_ok[blk] = 0;
        continue;
      }
      const Vector y = net.output_map(sr.z_star);
      blk_out_lo[blk] = blk_out_lo[blk].cwiseMin(y);
      blk_out_hi[blk] = blk_out_hi[blk].cwiseMax(y);
      blk_st_lo[blk] = blk_st_lo[blk].cwiseMin(sr.z_star);
      blk_st_hi[blk] = blk_st_hi[blk].cwiseMax(sr.z_star);
    }
  });

  ReachResult out;
  out.method = ReachMethod::brute_force;
  out.evaluations = total;
  Vector out_lo = Vector::Constant(q, inf);
  Vector out_hi = Vector::Constant(q, -inf);
  Vector st_lo = Vector::Constant(net.n(), inf);
  Vector st_hi = Vector::Constant(net.n(), -inf);
  bool all_ok = true;
  for (long blk = 0; blk < nblocks; ++blk) {
    if (!blk_ok[blk]) all_ok = false;
    out_lo = out_lo.cwiseMin(blk_out_lo[blk]);
    out_hi = out_hi.cwiseMax(blk_out_hi[blk]);
    st_lo = st_lo.cwiseMin(blk_st_lo[blk]);
    st_hi = st_hi.cwiseMax(blk_st_hi[blk]);
  }
  out.converged = all_ok;
  if (all_ok) {
    out.output_box = IntervalVector(std::move(out_lo), std::move(out_hi));
    out.state_box = IntervalVector(std::move(st_lo), std::move(st_hi));
  }
  return out;
}

}  // namespace cinn
