#include "cinn/model.hpp"

#include <algorithm>
#include <cmath>

namespace cinn {

void Activation::validate() const {
  if (kind == ActivationKind::leaky_relu && !(slope > 0.0 && slope < 1.0))
    throw InvalidInput("Activation: leaky_relu slope must lie in (0, 1)");
}

std::string Activation::name() const {
  switch (kind) {
    case ActivationKind::relu: return "relu";
    case ActivationKind::leaky_relu: return "leaky_relu";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::identity: return "identity";
  }
  return "unknown";
}

Activation activation_from_name(const std::string& name, double slope) {
  if (name == "relu") return Activation::relu();
  if (name == "leaky_relu") return Activation::leaky_relu(slope);
  if (name == "tanh") return Activation::tanh();
  if (name == "sigmoid") return Activation::sigmoid();
  if (name == "identity") return Activation::identity();
  throw InvalidInput("unknown activation: " + name);
}

double activation_scalar(const Activation& act, double v) {
  switch (act.kind) {
    case ActivationKind::relu: return v > 0.0 ? v : 0.0;
    case ActivationKind::leaky_relu: return v > 0.0 ? v : act.slope * v;
    case ActivationKind::tanh: return std::tanh(v);
    case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-v));
    case ActivationKind::identity: return v;
  }
  return v;
}

double activation_slope(const Activation& act, double v) {
  switch (act.kind) {
    case ActivationKind::relu: return v > 0.0 ? 1.0 : 0.0;
    case ActivationKind::leaky_relu: return v > 0.0 ? 1.0 : act.slope;
    case ActivationKind::tanh: {
      const double t = std::tanh(v);
      return 1.0 - t * t;
    }
    case ActivationKind::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-v));
      return s * (1.0 - s);
    }
    case ActivationKind::identity: return 1.0;
  }
  return 1.0;
}

Vector activation_apply(const Activation& act, const Vector& v) {
  require_finite(v, "activation input");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = activation_scalar(act, v[i]);
  return out;
}

Vector activation_derivative(const Activation& act, const Vector& v) {
  require_finite(v, "activation input");
  Vector out(v.size());
  for (Index i = 0; i < v.size(); ++i) out[i] = activation_slope(act, v[i]);
  return out;
}

void ImplicitNetwork::validate() const {
  activation.validate();
  if (W.rows() < 1 || W.rows() != W.cols())
    throw InvalidInput("ImplicitNetwork: W must be square and non-empty");
  const Index nn = W.rows();
  if (U.rows() != nn) throw InvalidInput("ImplicitNetwork: U row count != n");
  if (U.cols() < 1) throw InvalidInput("ImplicitNetwork: r must be >= 1");
  if (b.size() != nn) throw InvalidInput("ImplicitNetwork: b length != n");
  if (C.cols() != nn) throw InvalidInput("ImplicitNetwork: C col count != n");
  if (C.rows() < 1) throw InvalidInput("ImplicitNetwork: q must be >= 1");
  if (c.size() != C.rows())
    throw InvalidInput("ImplicitNetwork: c length != q");
  require_finite(W, "W");
  require_finite(U, "U");
  require_finite(b, "b");
  require_finite(C, "C");
  require_finite(c, "c");
}

Vector ImplicitNetwork::forward_map(const Vector& z, const Vector& x) const {
  if (z.size() != n()) throw InvalidInput("forward_map: z length != n");
  if (x.size() != r()) throw InvalidInput("forward_map: x length != r");
  return activation_apply(activation, W * z + U * x + b);
}

Vector ImplicitNetwork::output_map(const Vector& z) const {
  if (z.size() != n()) throw InvalidInput("output_map: z length != n");
  return C * z + c;
}

ContractionCertificate check_wellposed(const Matrix& W,
                                       const PositiveWeights& w) {
  ContractionCertificate cert{w, 0.0, 1.0, false};
  cert.mu = weighted_inf_measure(W, w);
  cert.wellposed = cert.mu < 1.0;
  double min_neg_diag = 0.0;
  for (Index i = 0; i < W.rows(); ++i)
    min_neg_diag = std::min(min_neg_diag, W(i, i));
  cert.alpha_max = 1.0 / (1.0 - min_neg_diag);
  return cert;
}

ContractionCertificate check_wellposed(const ImplicitNetwork& net,
                                       const PositiveWeights& w) {
  if (w.size() != net.n())
    throw InvalidInput("check_wellposed: eta dimension mismatch");
  return check_wellposed(net.W, w);
}

PositiveWeights suggest_eta(const Matrix& W) {
  if (W.rows() != W.cols()) throw InvalidInput("suggest_eta: W must be square");
  require_finite(W, "suggest_eta input");
  const Index n = W.rows();
  const PositiveWeights ones = PositiveWeights::ones(n);
  if (n == 1) return ones;

  // Metzlerized matrix, shifted so all entries are nonnegative.
  Matrix m = W.cwiseAbs();
  for (Index i = 0; i < n; ++i) m(i, i) = W(i, i);
  const double shift = std::max(0.0, -m.diagonal().minCoeff());
  m.diagonal().array() += shift;

  Vector v = Vector::Ones(n);
  bool converged = false;
  for (int it = 0; it < 1000; ++it) {
    Vector next = m * v;
    const double nrm = next.cwiseAbs().maxCoeff();
    if (!(nrm > 1e-300)) return ones;  // stagnated on a degenerate spectrum
    next /= nrm;
    if ((next - v).cwiseAbs().maxCoeff() < 1e-13) {
      v = next;
      converged = true;
      break;
    }
    v = next;
  }
  if (!converged) return ones;

  Vector eta(n);
  for (Index i = 0; i < n; ++i)
    eta[i] = std::clamp(1.0 / std::max(v[i], 1e-300), 1e-6, 1e6);
  const PositiveWeights candidate{eta};
  if (weighted_inf_measure(W, candidate) <= weighted_inf_measure(W, ones))
    return candidate;
  return ones;
}

}  // namespace cinn
