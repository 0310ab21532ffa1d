#pragma once

#include <functional>
#include <optional>
#include <string>

#include "seriate/seqmodel.hpp"

namespace seriate {

struct TrainConfig {
  double lambda = 0.0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_instances = 32;
  std::size_t serializations_per_instance = 2;
  std::size_t max_steps = 1000;
  // Wall-clock budget in seconds; 0 means unlimited.  A run stopped by the
  // clock is not step-reproducible, unlike one stopped by max_steps.
  double max_wall_seconds = 0.0;
  double clip = 5.0;  // elementwise gradient clip range [-clip, clip]

  enum class Objective { Generative, Discriminative };
  Objective objective = Objective::Generative;

  // Discriminative target space: class labels, or labels parsed as reals.
  enum class TargetKind { Classification, Regression };
  TargetKind target_kind = TargetKind::Classification;

  std::size_t hidden_dim = 32;
  std::size_t mixture_components = 1;
  CellKind cell = CellKind::Sigmoid;
  std::size_t eval_interval = 50;
  std::uint64_t seed = 0;
  SamplerConfig sampler;

  void validate() const;
};

struct StepMetrics {
  std::size_t step = 0;
  double train_nll = 0.0;   // batch mean per-serialization NLL / loss term
  double valid_nll = 0.0;   // NaN until the first evaluation or without a set
  double reg_value = 0.0;   // unweighted regularizer
  double wall_seconds = 0.0;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::size_t step = 0;

  static AdamState zero(std::size_t n);
};

struct TrainerSnapshot {
  ModelParams params;
  AdamState opt;
};

struct TrainResult {
  ModelParams params;
  AdamState opt;
  std::vector<StepMetrics> metrics;
};

// Adam on the regularized objective with elementwise gradient clipping.
// Serializations are sampled fresh at every step from split generator
// streams keyed by (seed, step), so a resumed run replays the exact stream
// of an uninterrupted one.  Aborts with diagnostics after ten consecutive
// non-finite steps.
TrainResult train(const StructureBackend& backend, const Dataset& data,
                  const Dataset* validation, const TrainConfig& cfg,
                  std::optional<TrainerSnapshot> resume_from = std::nullopt,
                  const std::function<void(const StepMetrics&)>& on_step = {});

// Dataset-wide value standardization (mean/std over every real value fed to
// the embedding); identity for value-free structures.
ValueAffine fit_value_affine(const StructureBackend& backend, const Dataset& data);

// Mean per-serialization NLL over `data` with one sampled serialization per
// instance, drawn from a dedicated stream; deterministic for fixed inputs.
double dataset_nll(const StructureBackend& backend, const ModelParams& params,
                   const Dataset& data, const SamplerConfig& sampler,
                   const TrainConfig& cfg, std::uint64_t stream_index);

// Class labels sorted lexicographically define the class-index mapping.
std::vector<std::string> collect_class_labels(const Dataset& data);

// Serialization used for the discriminative objective: for propositional
// records the label pair is stripped (the label is the prediction target).
StructureInstance discriminative_view(const StructureBackend& backend,
                                      const StructureInstance& x);

}  // namespace seriate
