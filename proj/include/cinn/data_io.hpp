#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cinn/certification.hpp"
#include "cinn/model.hpp"
#include "cinn/training.hpp"
#include "cinn/types.hpp"

namespace cinn {

/// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(const std::string& s);

struct Dataset {
  std::vector<Vector> inputs;
  std::vector<int> labels;  // 0-based
  std::string name;

  long size() const { return static_cast<long>(inputs.size()); }
  Index dim() const { return inputs.empty() ? 0 : inputs.front().size(); }
  void validate() const;
};

enum class ModelForm { raw, materialized };

/// On-disk model: structured text, one value block per parameter, floats
/// written with round-trip precision. Raw files carry the unconstrained T
/// plus eta and rebuild W through the bounded parametrization; materialized
/// files carry W directly. The eta block is optional for materialized files.
struct ModelFile {
  int schema_version = 1;
  Index n = 0, r = 0, q = 0;
  Activation activation;
  double gamma = 0.0;
  ModelForm form = ModelForm::materialized;
  Vector eta;    // empty when absent
  Matrix T_raw;  // raw form only
  Matrix W;      // materialized form only
  Matrix U;
  Vector b;
  Matrix C;
  Vector c;

  ImplicitNetwork as_network() const;
  TrainableModel as_trainable() const;  // refuses for materialized files
  bool has_eta() const { return eta.size() > 0; }
};

void save_model(const std::string& path, const TrainableModel& model);
void save_model(const std::string& path, const ImplicitNetwork& net,
                const Vector& eta = Vector(), double gamma = 0.0);
ModelFile load_model(const std::string& path);

/// Big-endian IDX pair (images magic 2051, labels magic 2049); pixels are
/// divided by 255 and images flattened row-major.
Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path);

enum class SyntheticKind { two_moons_like, gaussian_blobs };

/// Deterministic 2-d two-class set; sample i belongs to class i % 2.
Dataset synthetic_dataset(SyntheticKind kind, long count, std::uint64_t seed);

/// CSV with header eps,fraction,method,model_id; rows sorted by
/// (eps, method, model_id).
void write_curves_csv(const std::string& path,
                      const std::vector<Curve>& curves);

/// CSV with header sample_id,eps,method,predicted_label,margin,certified;
/// rows sorted by (eps, sample_id).
void write_certificates_csv(const std::string& path,
                            const std::vector<Certificate>& certs);

/// Training run description: model hyperparameters plus the optimizer
/// configuration, parsed from "key = value" lines ('#' starts a comment).
struct TrainFileConfig {
  TrainingConfig train;
  Index n = 16;
  double gamma = 0.0;
  Activation activation = Activation::relu();
  std::string dataset;  // dataset spec string, may be overridden by the CLI
};

TrainFileConfig load_training_config(const std::string& path);

/// Dataset specs: "idx:<images>:<labels>" or
/// "synthetic:<two_moons_like|gaussian_blobs>:<count>:<seed>".
Dataset load_dataset_spec(const std::string& spec);

}  // namespace cinn
