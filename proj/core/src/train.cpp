#include "seriate/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

namespace seriate {

namespace {

// Disjoint split-stream indices derived from the config seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kStepStreamBase = 1;                    // + step
constexpr std::uint64_t kEvalStreamBase = 1ull << 40;           // + stream_index

std::size_t label_index(const std::vector<std::string>& classes, const std::string& label) {
  const auto it = std::lower_bound(classes.begin(), classes.end(), label);
  if (it == classes.end() || *it != label)
    throw Error("label not present in the training class set: " + label);
  return static_cast<std::size_t>(it - classes.begin());
}

}  // namespace

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw Error("learning_rate must be positive");
  if (batch_instances < 1) throw Error("batch_instances must be >= 1");
  if (serializations_per_instance < 1)
    throw Error("serializations_per_instance must be >= 1");
  if (lambda < 0.0) throw Error("lambda must be >= 0");
  if (lambda > 0.0 && serializations_per_instance < 2)
    throw Error("the regularizer needs serializations_per_instance >= 2");
  if (clip <= 0.0) throw Error("gradient clip range must be positive");
  if (hidden_dim < 1) throw Error("hidden_dim must be >= 1");
  if (mixture_components < 1) throw Error("mixture_components must be >= 1");
}

AdamState AdamState::zero(std::size_t n) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  return s;
}

ValueAffine fit_value_affine(const StructureBackend& backend, const Dataset& data) {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  const auto feed = [&](double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  };
  for (const auto& entry : data) {
    if (const auto* series = std::get_if<SeriesInstance>(&entry.instance)) {
      for (const auto& [name, v] : series->input_features) feed(v);
      for (const auto& row : series->values)
        for (double v : row) feed(v);
    } else if (const auto* record = std::get_if<PropositionalInstance>(&entry.instance)) {
      for (const auto& [name, v] : record->numeric_features) feed(v);
    }
  }
  (void)backend;
  if (n == 0) return {};
  const double mean = sum / static_cast<double>(n);
  const double var = std::max(sum_sq / static_cast<double>(n) - mean * mean, 0.0);
  const double stddev = std::sqrt(var);
  return {mean, stddev > 1e-12 ? stddev : 1.0};
}

std::vector<std::string> collect_class_labels(const Dataset& data) {
  std::set<std::string> classes;
  for (const auto& entry : data) {
    if (entry.label) classes.insert(*entry.label);
    if (const auto* record = std::get_if<PropositionalInstance>(&entry.instance))
      if (record->label) classes.insert(*record->label);
  }
  return {classes.begin(), classes.end()};
}

StructureInstance discriminative_view(const StructureBackend& backend,
                                      const StructureInstance& x) {
  (void)backend;
  if (const auto* record = std::get_if<PropositionalInstance>(&x)) {
    PropositionalInstance stripped = *record;
    stripped.label.reset();
    return stripped;
  }
  return x;
}

namespace {

std::optional<std::string> entry_target(const DatasetEntry& entry) {
  if (entry.label) return entry.label;
  if (const auto* record = std::get_if<PropositionalInstance>(&entry.instance))
    return record->label;
  return std::nullopt;
}

Target make_target(const TrainConfig& cfg, const std::vector<std::string>& classes,
                   const std::string& label) {
  Target target;
  if (cfg.target_kind == TrainConfig::TargetKind::Classification) {
    target.class_index = label_index(classes, label);
  } else {
    try {
      target.real_value = std::stod(label);
    } catch (const std::exception&) {
      throw Error("regression target is not numeric: " + label);
    }
  }
  return target;
}

struct Batch {
  std::vector<Serialization> serializations;
  std::vector<Target> targets;  // discriminative only
};

Batch draw_batch(const StructureBackend& backend, const Dataset& data,
                 const TrainConfig& cfg, const std::vector<std::string>& classes,
                 Philox& stream) {
  Batch batch;
  batch.serializations.reserve(cfg.batch_instances * cfg.serializations_per_instance);
  for (std::size_t b = 0; b < cfg.batch_instances; ++b) {
    const std::size_t idx = static_cast<std::size_t>(stream.below(data.size()));
    const DatasetEntry& entry = data[idx];

    Target target;
    if (cfg.objective == TrainConfig::Objective::Discriminative) {
      const auto label = entry_target(entry);
      if (!label) throw Error("discriminative training needs labeled instances");
      target = make_target(cfg, classes, *label);
    }
    const StructureInstance view =
        cfg.objective == TrainConfig::Objective::Discriminative
            ? discriminative_view(backend, entry.instance)
            : entry.instance;

    for (std::size_t s = 0; s < cfg.serializations_per_instance; ++s) {
      batch.serializations.push_back(sample_serialization(backend, view, cfg.sampler, stream));
      if (cfg.objective == TrainConfig::Objective::Discriminative)
        batch.targets.push_back(target);
    }
  }
  return batch;
}

void clip_elementwise(Gradients& g, double clip) {
  const auto clamp = [clip](auto& m) {
    if (m.size() > 0) m = m.cwiseMax(-clip).cwiseMin(clip);
  };
  clamp(g.w_in);
  clamp(g.w_rec);
  clamp(g.w_in_z);
  clamp(g.w_rec_z);
  clamp(g.w_in_r);
  clamp(g.w_rec_r);
  clamp(g.w_sym);
  clamp(g.b_sym);
  clamp(g.w_mix);
  clamp(g.b_mix);
  if (g.w_head.size() > 0) {
    clamp(g.w_head);
    clamp(g.b_head);
  }
}

}  // namespace

double dataset_nll(const StructureBackend& backend, const ModelParams& params,
                   const Dataset& data, const SamplerConfig& sampler,
                   const TrainConfig& cfg, std::uint64_t stream_index) {
  if (data.empty()) return std::numeric_limits<double>::quiet_NaN();
  Philox root(cfg.seed);
  Philox stream = root.split(kEvalStreamBase + stream_index);
  const std::vector<std::string> classes = collect_class_labels(data);

  double total = 0.0;
  for (const auto& entry : data) {
    if (cfg.objective == TrainConfig::Objective::Discriminative) {
      const auto label = entry_target(entry);
      if (!label) throw Error("discriminative evaluation needs labeled instances");
      const StructureInstance view = discriminative_view(backend, entry.instance);
      const Serialization a = sample_serialization(backend, view, sampler, stream);
      total += discriminative_loss(params, backend.alphabet(), a,
                                   make_target(cfg, classes, *label));
    } else {
      const Serialization a =
          sample_serialization(backend, entry.instance, sampler, stream);
      total += sequence_nll(params, backend.alphabet(), a);
    }
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(const StructureBackend& backend, const Dataset& data,
                  const Dataset* validation, const TrainConfig& cfg,
                  std::optional<TrainerSnapshot> resume_from,
                  const std::function<void(const StepMetrics&)>& on_step) {
  cfg.validate();
  if (data.empty()) throw Error("training dataset is empty");

  Philox root(cfg.seed);
  const std::vector<std::string> classes = collect_class_labels(data);

  ModelParams params;
  AdamState opt;
  if (resume_from) {
    params = std::move(resume_from->params);
    opt = std::move(resume_from->opt);
  } else {
    Philox init_stream = root.split(kInitStream);
    params = ModelParams::init(cfg.hidden_dim, backend.alphabet().size(),
                               cfg.mixture_components, init_stream, cfg.cell);
    if (cfg.objective == TrainConfig::Objective::Discriminative) {
      if (cfg.target_kind == TrainConfig::TargetKind::Classification) {
        if (classes.empty())
          throw Error("discriminative training needs labeled instances");
        params.add_classification_head(classes.size(), init_stream);
      } else {
        params.add_regression_head(init_stream);
      }
    }
    params.value_affine = fit_value_affine(backend, data);
    opt = AdamState::zero(params.flat_size());
  }

  TrainResult result;
  result.metrics.reserve(cfg.max_steps);

  double last_valid = std::numeric_limits<double>::quiet_NaN();
  const auto t_start = std::chrono::steady_clock::now();
  int consecutive_bad = 0;

  for (std::size_t step = opt.step + 1; step <= cfg.max_steps; ++step) {
    Philox stream = root.split(kStepStreamBase + step);
    const Batch batch = draw_batch(backend, data, cfg, classes, stream);

    Gradients grads = Gradients::zero_like(params);
    double nll_sum = 0.0;
    double reg_value = 0.0;
    bool finite = true;
    try {
      ConstraintMatrix constraints;
      constraints.batch_size = batch.serializations.size();
      if (cfg.lambda > 0.0)
        constraints = build_constraint_matrix(backend, batch.serializations);

      if (cfg.objective == TrainConfig::Objective::Generative) {
        const LossBreakdown breakdown =
            loss_grad(params, backend.alphabet(), batch.serializations, constraints,
                      cfg.lambda, grads);
        nll_sum = breakdown.nll;
        reg_value = breakdown.reg_value;
      } else {
        for (std::size_t i = 0; i < batch.serializations.size(); ++i)
          nll_sum += discriminative_loss_grad(params, backend.alphabet(),
                                              batch.serializations[i], batch.targets[i],
                                              grads);
        if (cfg.lambda > 0.0)
          reg_value = regularizer_grad(params, backend.alphabet(), batch.serializations,
                                       constraints, cfg.lambda, grads);
      }
    } catch (const NonFiniteActivation&) {
      finite = false;
    }

    if (!finite) {
      if (++consecutive_bad >= 10)
        throw NonFiniteActivation("training diverged: 10 consecutive non-finite steps, "
                                  "last finite step " +
                                  std::to_string(opt.step));
      continue;
    }
    consecutive_bad = 0;

    clip_elementwise(grads, cfg.clip);
    const Eigen::VectorXd g = grads.to_flat(params);
    opt.step = step;
    const double b1t = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double b2t = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    opt.m = cfg.beta1 * opt.m + (1.0 - cfg.beta1) * g;
    opt.v = cfg.beta2 * opt.v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    Eigen::VectorXd flat = params.to_flat();
    flat.array() -= cfg.learning_rate * (opt.m.array() / b1t) /
                    ((opt.v.array() / b2t).sqrt() + cfg.epsilon);
    params.from_flat(flat);

    StepMetrics metrics;
    metrics.step = step;
    metrics.train_nll = nll_sum / static_cast<double>(batch.serializations.size());
    metrics.reg_value = reg_value;
    if (validation && (step == 1 || step % cfg.eval_interval == 0 || step == cfg.max_steps))
      last_valid = dataset_nll(backend, params, *validation, cfg.sampler, cfg, step);
    metrics.valid_nll = last_valid;
    metrics.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    if (on_step) on_step(metrics);
    result.metrics.push_back(metrics);

    if (cfg.max_wall_seconds > 0.0 && metrics.wall_seconds >= cfg.max_wall_seconds)
      break;
  }

  result.params = std::move(params);
  result.opt = std::move(opt);
  return result;
}

}  // namespace seriate
