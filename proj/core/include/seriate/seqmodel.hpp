#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "seriate/constraints.hpp"
#include "seriate/rng.hpp"
#include "seriate/sampler.hpp"

namespace seriate {

// Minimal recurrent sequence density model over serializations:
//
//   h^0 = 0,   h^t = sigmoid(W_rec h^{t-1} + W_in x^t)
//   P(a^1..a^T) = prod_t P(a^t | h^{t-1})
//
// The input embedding is a one-hot categorical block plus one real value
// channel (zero for value-free symbols).  Each step predicts a categorical
// distribution over the alphabet and, conditionally on a value-carrying
// symbol, an m-component Gaussian mixture over its value.  The recurrence is
// bias-free; the output heads carry biases (with h^0 = 0 the first-step
// distribution would otherwise be frozen at uniform).
//
// Values are standardized by a stored affine transform; reported densities
// are in original units via change of variables.

struct ValueAffine {
  double mean = 0.0;
  double stddev = 1.0;
};

enum class HeadKind { None, Classification, Regression };

// The contractual reference cell is the sigmoid recurrence above; a gated
// cell is available as a drop-in:
//
//   z = sigmoid(Wz x + Uz h), r = sigmoid(Wr x + Ur h),
//   c = tanh(W_in x + W_rec (r .* h)), h' = (1-z) .* h + z .* c
enum class CellKind { Sigmoid, Gru };

struct ModelParams {
  std::size_t hidden_dim = 0;           // H
  std::size_t alphabet_size = 0;        // V
  std::size_t mixture_components = 1;   // m
  CellKind cell_kind = CellKind::Sigmoid;

  Eigen::MatrixXd w_in;    // H x (V+1); Gru: candidate input weights
  Eigen::MatrixXd w_rec;   // H x H;     Gru: candidate recurrent weights
  Eigen::MatrixXd w_in_z, w_rec_z;  // Gru update gate (empty for Sigmoid)
  Eigen::MatrixXd w_in_r, w_rec_r;  // Gru reset gate (empty for Sigmoid)
  Eigen::MatrixXd w_sym;   // V x H
  Eigen::VectorXd b_sym;   // V
  Eigen::MatrixXd w_mix;   // 3m x H  (means, log-variances, weight logits)
  Eigen::VectorXd b_mix;   // 3m

  HeadKind head_kind = HeadKind::None;
  std::size_t target_dim = 0;  // classes (classification) or m (regression)
  Eigen::MatrixXd w_head;      // target rows x H (3m x H for regression)
  Eigen::VectorXd b_head;

  ValueAffine value_affine;

  static ModelParams init(std::size_t hidden_dim, std::size_t alphabet_size,
                          std::size_t mixture_components, Philox& rng,
                          CellKind cell = CellKind::Sigmoid);
  void add_classification_head(std::size_t classes, Philox& rng);
  void add_regression_head(Philox& rng);

  std::size_t flat_size() const;
  Eigen::VectorXd to_flat() const;
  void from_flat(const Eigen::VectorXd& flat);
};

// Gradient container with the exact parameter shapes.
struct Gradients {
  Eigen::MatrixXd w_in, w_rec, w_in_z, w_rec_z, w_in_r, w_rec_r, w_sym, w_mix, w_head;
  Eigen::VectorXd b_sym, b_mix, b_head;

  static Gradients zero_like(const ModelParams& params);
  Eigen::VectorXd to_flat(const ModelParams& params) const;
  void axpy(double scale, const Gradients& other);
};

struct MixtureDistribution {
  Eigen::VectorXd mean;        // m
  Eigen::VectorXd log_var;     // m, clamped to [-10, 10]
  Eigen::VectorXd log_weight;  // m, log-softmax normalized
};

struct StepPrediction {
  Eigen::VectorXd sym_log_probs;  // V
  MixtureDistribution mixture;
};

struct ForwardResult {
  Eigen::MatrixXd hidden;               // H x (T+1); column t is h^t
  Eigen::MatrixXd inputs;               // (V+1) x T; embedded a^1..a^T
  Eigen::MatrixXd gate_z, gate_r, candidate;  // H x T, Gru cells only
  std::vector<StepPrediction> steps;    // steps[t] predicts a^{t+1} from h^t
};

// Runs the recurrence and per-step predictive heads.  Throws
// NonFiniteActivation if any hidden state leaves the finite range.
ForwardResult forward(const ModelParams& params, const Alphabet& alphabet,
                      const Serialization& a);

// -sum_t [log P(symbol of a^t | h^{t-1}) + log p(value of a^t | h^{t-1})],
// the value term present only for value-carrying symbols and reported in
// original units.  Finite but not necessarily nonnegative (densities).
double sequence_nll(const ModelParams& params, const Alphabet& alphabet,
                    const Serialization& a);
double sequence_nll(const ModelParams& params, const Alphabet& alphabet,
                    const Serialization& a, const ForwardResult& fwd);

// sum over constraint entries (j,k,t) of || h_j^t/||h_j^t|| - h_k^t/||h_k^t|| ||.
// Zero-norm states divide by max(norm, 1e-12) instead.
double regularizer(std::span<const Eigen::MatrixXd> hidden_per_serialization,
                   const ConstraintMatrix& constraints);

struct LossBreakdown {
  double total = 0.0;
  double nll = 0.0;        // summed over the batch
  double reg_value = 0.0;  // unweighted regularizer
};

// loss = sum_j sequence_nll(a_j) + lambda * regularizer; exact reverse-mode
// gradient through the full recurrence, the heads and the regularizer.
LossBreakdown loss(const ModelParams& params, const Alphabet& alphabet,
                   std::span<const Serialization> batch,
                   const ConstraintMatrix& constraints, double lambda);
LossBreakdown loss_grad(const ModelParams& params, const Alphabet& alphabet,
                        std::span<const Serialization> batch,
                        const ConstraintMatrix& constraints, double lambda,
                        Gradients& grads);

// Regularizer value and lambda-weighted gradient alone (no likelihood term);
// used by the discriminative objective.
double regularizer_grad(const ModelParams& params, const Alphabet& alphabet,
                        std::span<const Serialization> batch,
                        const ConstraintMatrix& constraints, double lambda,
                        Gradients& grads);

// Discriminative target: a class index or a real value.
struct Target {
  std::optional<std::size_t> class_index;
  std::optional<double> real_value;
};

// -log P(y | h^T): cross-entropy for classification, Gaussian-mixture NLL
// for regression.  Throws MissingHead when no head is attached.
double discriminative_loss(const ModelParams& params, const Alphabet& alphabet,
                           const Serialization& a, const Target& y);
double discriminative_loss_grad(const ModelParams& params, const Alphabet& alphabet,
                                const Serialization& a, const Target& y,
                                Gradients& grads);

// P(y = c | h^T) over all classes, averaged externally for resampled
// serializations.
Eigen::VectorXd class_probabilities(const ModelParams& params, const Alphabet& alphabet,
                                    const Serialization& a);

// Log mixture density under (mean, log_var, log_weight) at value v.
double mixture_log_density(const MixtureDistribution& mix, double v);

}  // namespace seriate
