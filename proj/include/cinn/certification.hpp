#pragma once

#include <string>
#include <vector>

#include "cinn/model.hpp"
#include "cinn/parallel.hpp"
#include "cinn/solver.hpp"
#include "cinn/types.hpp"

namespace cinn {

/// Global Lipschitz bound (eta_max/eta_min) ||U||inf ||C||inf / (1 - mu+)
/// on the input-output map, with the four factors kept for inspection.
struct LipschitzBound {
  double value = 0.0;
  double eta_ratio = 0.0;
  double u_norm = 0.0;
  double c_norm = 0.0;
  double mu_plus = 0.0;
};

/// Specification matrix T = 1 e_label^T - I: applying it to the logits gives
/// the vector of gaps f_label - f_j (zero at the label's own row).
struct Specification {
  int true_label = 0;  // 0-based
  Matrix matrix;       // q x q, entries in {-1, 0, 1}
};

enum class CertMethod { lipschitz, inclusion };

const char* cert_method_name(CertMethod m);

struct Certificate {
  long sample_id = 0;
  CertMethod method = CertMethod::lipschitz;
  double eps = 0.0;
  double margin = 0.0;
  bool certified = false;
  int predicted_label = 0;  // 0-based
};

struct CurvePoint {
  double eps = 0.0;
  double fraction = 0.0;
};

struct Curve {
  std::string method;
  std::string model_id;
  std::vector<CurvePoint> points;  // sorted by eps ascending
};

LipschitzBound lipschitz_bound(const ImplicitNetwork& net,
                               const PositiveWeights& w);

Specification spec_matrix(int label, Index q);

/// Lower bound on the gap vector over the box backing efp:
/// [T C]+ zl + [T C]- zu + T c. Requires a converged efp.
Vector m_lower(const ImplicitNetwork& net, const Specification& spec,
               const EmbeddedFixedPoint& efp);

/// Certifies via margin = f_label - max_{j != label} f_j - 2 * bound * eps.
/// A sample counts as correctly classified only when the label's logit
/// strictly dominates every other logit; ties are treated as misclassified.
Certificate certify_lipschitz(const ImplicitNetwork& net,
                              const PositiveWeights& w, const Vector& x,
                              int label, double eps, const SolveConfig& cfg);

/// Certifies via margin = min_{j != label} m_lower_j over the box
/// [x - eps, x + eps]. Propagates embedded-solver non-convergence.
/// clip_box_to_unit intersects the box with [0, 1]^r first (off by default;
/// the unclipped test is the conservative one).
Certificate certify_inclusion(const ImplicitNetwork& net,
                              const PositiveWeights& w, const Vector& x,
                              int label, double eps, const SolveConfig& cfg,
                              bool clip_box_to_unit = false);

/// Fraction of samples certified at each radius. Per-sample failures
/// (including solver non-convergence) count as not certified.
Curve certified_fraction_curve(const ImplicitNetwork& net,
                               const PositiveWeights& w,
                               const std::vector<Vector>& inputs,
                               const std::vector<int>& labels,
                               const std::vector<double>& eps_list,
                               CertMethod method, const SolveConfig& cfg,
                               const std::string& model_id = "model",
                               ExecMode mode = ExecMode::openmp,
                               bool clip_box_to_unit = false);

/// Strict-dominance classification: returns the smallest argmax index, and
/// sets correct = true only if logits[label] strictly exceeds all others.
int predict_label(const Vector& logits);
bool strictly_correct(const Vector& logits, int label);

}  // namespace cinn
