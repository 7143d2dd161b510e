#include "cinn/certification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cinn {

const char* cert_method_name(CertMethod m) {
  return m == CertMethod::lipschitz ? "lipschitz" : "inclusion";
}

int predict_label(const Vector& logits) {
  int best = 0;
  for (Index j = 1; j < logits.size(); ++j)
    if (logits[j] > logits[best]) best = static_cast<int>(j);
  return best;
}

bool strictly_correct(const Vector& logits, int label) {
  if (label < 0 || label >= logits.size()) return false;
  for (Index j = 0; j < logits.size(); ++j)
    if (j != label && !(logits[label] > logits[j])) return false;
  return true;
}

LipschitzBound lipschitz_bound(const ImplicitNetwork& net,
                               const PositiveWeights& w) {
  net.validate();
  const ContractionCertificate cert = check_wellposed(net, w);
  if (!cert.wellposed)
    throw NotContractive("lipschitz_bound: mu >= 1, bound undefined");
  LipschitzBound out;
  out.eta_ratio = w.ratio();
  out.u_norm = inf_operator_norm(net.U);
  out.c_norm = inf_operator_norm(net.C);
  out.mu_plus = std::max(cert.mu, 0.0);
  out.value = out.eta_ratio * out.u_norm * out.c_norm / (1.0 - out.mu_plus);
  return out;
}

Specification spec_matrix(int label, Index q) {
  if (label < 0 || label >= q)
    throw InvalidInput("spec_matrix: label out of range");
  Specification spec;
  spec.true_label = label;
  spec.matrix = -Matrix::Identity(q, q);
  spec.matrix.col(label).array() += 1.0;
  return spec;
}

Vector m_lower(const ImplicitNetwork& net, const Specification& spec,
               const EmbeddedFixedPoint& efp) {
  if (!efp.converged)
    throw SolveFailure("m_lower: embedded fixed point did not converge");
  const Matrix tc = spec.matrix * net.C;
  const SplitPair s = sign_split(tc);
  return s.plus * efp.z_lower + s.minus * efp.z_upper + spec.matrix * net.c;
}

Certificate certify_lipschitz(const ImplicitNetwork& net,
                              const PositiveWeights& w, const Vector& x,
                              int label, double eps, const SolveConfig& cfg) {
  if (label < 0 || label >= net.q())
    throw InvalidInput("certify_lipschitz: label out of range");
  if (!(eps >= 0.0)) throw InvalidInput("certify_lipschitz: eps must be >= 0");
  const LipschitzBound bound = lipschitz_bound(net, w);
  SolveConfig scfg = cfg;
  scfg.eta = w.eta();
  const SolveReport sr = solve_fixed_point(net, x, scfg);
  if (!sr.converged)
    throw SolveFailure("certify_lipschitz: fixed-point solve did not converge");
  const Vector f = net.output_map(sr.z_star);

  double best_other = -std::numeric_limits<double>::infinity();
  for (Index j = 0; j < f.size(); ++j)
    if (j != label) best_other = std::max(best_other, f[j]);

  Certificate cert;
  cert.method = CertMethod::lipschitz;
  cert.eps = eps;
  cert.predicted_label = predict_label(f);
  cert.margin = f[label] - best_other - 2.0 * bound.value * eps;
  cert.certified = strictly_correct(f, label) && cert.margin >= 0.0;
  return cert;
}

Certificate certify_inclusion(const ImplicitNetwork& net,
                              const PositiveWeights& w, const Vector& x,
                              int label, double eps, const SolveConfig& cfg,
                              bool clip_box_to_unit) {
  if (label < 0 || label >= net.q())
    throw InvalidInput("certify_inclusion: label out of range");
  if (!(eps >= 0.0)) throw InvalidInput("certify_inclusion: eps must be >= 0");
  SolveConfig scfg = cfg;
  scfg.eta = w.eta();

  const SolveReport sr = solve_fixed_point(net, x, scfg);
  if (!sr.converged)
    throw SolveFailure("certify_inclusion: fixed-point solve did not converge");
  const Vector f = net.output_map(sr.z_star);

  IntervalVector box = IntervalVector::ball(x, eps);
  if (clip_box_to_unit) {
    Vector lo = box.lower.cwiseMax(0.0).cwiseMin(1.0);
    Vector hi = box.upper.cwiseMax(0.0).cwiseMin(1.0);
    box = IntervalVector(std::move(lo), std::move(hi));
  }
  const EmbeddedFixedPoint efp = solve_embedded(net, box, scfg);
  if (!efp.converged)
    throw SolveFailure("certify_inclusion: embedded solve did not converge");
  const Specification spec = spec_matrix(label, net.q());
  const Vector ml = m_lower(net, spec, efp);

  double margin = std::numeric_limits<double>::infinity();
  for (Index j = 0; j < ml.size(); ++j)
    if (j != label) margin = std::min(margin, ml[j]);

  Certificate cert;
  cert.method = CertMethod::inclusion;
  cert.eps = eps;
  cert.predicted_label = predict_label(f);
  cert.margin = margin;
  cert.certified = strictly_correct(f, label) && cert.margin >= 0.0;
  return cert;
}

Curve certified_fraction_curve(const ImplicitNetwork& net,
                               const PositiveWeights& w,
                               const std::vector<Vector>& inputs,
                               const std::vector<int>& labels,
                               const std::vector<double>& eps_list,
                               CertMethod method, const SolveConfig& cfg,
                               const std::string& model_id, ExecMode mode,
                               bool clip_box_to_unit) {
  if (inputs.size() != labels.size())
    throw InvalidInput("certified_fraction_curve: inputs/labels length mismatch");
  Curve curve;
  curve.method = cert_method_name(method);
  curve.model_id = model_id;
  if (inputs.empty()) return curve;

  std::vector<double> eps_sorted = eps_list;
  std::sort(eps_sorted.begin(), eps_sorted.end());

  const long count = static_cast<long>(inputs.size());
  for (double eps : eps_sorted) {
    std::vector<char> certified(count, 0);
    parallel_for(count, mode, [&](std::int64_t i) {
      try {
        const Certificate c =
            method == CertMethod::lipschitz
                ? certify_lipschitz(net, w, inputs[i], labels[i], eps, cfg)
                : certify_inclusion(net, w, inputs[i], labels[i], eps, cfg,
                                    clip_box_to_unit);
        certified[i] = c.certified ? 1 : 0;
      } catch (const std::exception&) {
        certified[i] = 0;  // per-sample failures count as not certified
      }
    });
    long hits = 0;
    for (long i = 0; i < count; ++i) hits += certified[i];
    curve.points.push_back(
        {eps, static_cast<double>(hits) / static_cast<double>(count)});
  }
  return curve;
}

}  // namespace cinn
