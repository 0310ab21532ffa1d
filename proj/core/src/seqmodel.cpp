#include "seriate/seqmodel.hpp"

#include <cmath>

namespace seriate {

namespace {

constexpr double kLogVarMin = -10.0;
constexpr double kLogVarMax = 10.0;
constexpr double kNormFloor = 1e-12;
constexpr double kHalfLog2Pi = 0.9189385332046727;  // log(2*pi)/2

Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols, double radius,
                               Philox& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = (2.0 * rng.uniform() - 1.0) * radius;
  return m;
}

Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

}  // namespace

ModelParams ModelParams::init(std::size_t hidden_dim, std::size_t alphabet_size,
                              std::size_t mixture_components, Philox& rng,
                              CellKind cell) {
  if (hidden_dim < 1 || mixture_components < 1)
    throw Error("hidden_dim and mixture_components must be >= 1");
  ModelParams p;
  p.hidden_dim = hidden_dim;
  p.alphabet_size = alphabet_size;
  p.mixture_components = mixture_components;
  p.cell_kind = cell;
  const auto H = static_cast<Eigen::Index>(hidden_dim);
  const auto V = static_cast<Eigen::Index>(alphabet_size);
  const auto M3 = static_cast<Eigen::Index>(3 * mixture_components);
  const double rh = 0.5 / std::sqrt(static_cast<double>(hidden_dim));
  const double rin = 0.5 / std::sqrt(static_cast<double>(V + 1));
  p.w_in = uniform_matrix(H, V + 1, rin, rng);
  p.w_rec = uniform_matrix(H, H, rh, rng);
  if (cell == CellKind::Gru) {
    p.w_in_z = uniform_matrix(H, V + 1, rin, rng);
    p.w_rec_z = uniform_matrix(H, H, rh, rng);
    p.w_in_r = uniform_matrix(H, V + 1, rin, rng);
    p.w_rec_r = uniform_matrix(H, H, rh, rng);
  }
  p.w_sym = uniform_matrix(V, H, rh, rng);
  p.b_sym = Eigen::VectorXd::Zero(V);
  p.w_mix = uniform_matrix(M3, H, rh, rng);
  p.b_mix = Eigen::VectorXd::Zero(M3);
  return p;
}

void ModelParams::add_classification_head(std::size_t classes, Philox& rng) {
  head_kind = HeadKind::Classification;
  target_dim = classes;
  const double rh = 0.5 / std::sqrt(static_cast<double>(hidden_dim));
  w_head = uniform_matrix(static_cast<Eigen::Index>(classes),
                          static_cast<Eigen::Index>(hidden_dim), rh, rng);
  b_head = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
}

void ModelParams::add_regression_head(Philox& rng) {
  head_kind = HeadKind::Regression;
  target_dim = mixture_components;
  const double rh = 0.5 / std::sqrt(static_cast<double>(hidden_dim));
  w_head = uniform_matrix(static_cast<Eigen::Index>(3 * mixture_components),
                          static_cast<Eigen::Index>(hidden_dim), rh, rng);
  b_head = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(3 * mixture_components));
}

std::size_t ModelParams::flat_size() const {
  std::size_t n = static_cast<std::size_t>(w_in.size() + w_rec.size() + w_sym.size() +
                                           b_sym.size() + w_mix.size() + b_mix.size());
  if (cell_kind == CellKind::Gru)
    n += static_cast<std::size_t>(w_in_z.size() + w_rec_z.size() + w_in_r.size() +
                                  w_rec_r.size());
  if (head_kind != HeadKind::None)
    n += static_cast<std::size_t>(w_head.size() + b_head.size());
  return n;
}

namespace {

void append_flat(Eigen::VectorXd& out, Eigen::Index& pos, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) out(pos++) = m(r, c);
}

void read_flat(const Eigen::VectorXd& in, Eigen::Index& pos, Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = in(pos++);
}

void read_flat(const Eigen::VectorXd& in, Eigen::Index& pos, Eigen::VectorXd& v) {
  for (Eigen::Index r = 0; r < v.rows(); ++r) v(r) = in(pos++);
}

void append_flat(Eigen::VectorXd& out, Eigen::Index& pos, const Eigen::VectorXd& v) {
  for (Eigen::Index r = 0; r < v.rows(); ++r) out(pos++) = v(r);
}

}  // namespace

Eigen::VectorXd ModelParams::to_flat() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(flat_size()));
  Eigen::Index pos = 0;
  append_flat(flat, pos, w_in);
  append_flat(flat, pos, w_rec);
  if (cell_kind == CellKind::Gru) {
    append_flat(flat, pos, w_in_z);
    append_flat(flat, pos, w_rec_z);
    append_flat(flat, pos, w_in_r);
    append_flat(flat, pos, w_rec_r);
  }
  append_flat(flat, pos, w_sym);
  append_flat(flat, pos, b_sym);
  append_flat(flat, pos, w_mix);
  append_flat(flat, pos, b_mix);
  if (head_kind != HeadKind::None) {
    append_flat(flat, pos, w_head);
    append_flat(flat, pos, b_head);
  }
  return flat;
}

void ModelParams::from_flat(const Eigen::VectorXd& flat) {
  Eigen::Index pos = 0;
  read_flat(flat, pos, w_in);
  read_flat(flat, pos, w_rec);
  if (cell_kind == CellKind::Gru) {
    read_flat(flat, pos, w_in_z);
    read_flat(flat, pos, w_rec_z);
    read_flat(flat, pos, w_in_r);
    read_flat(flat, pos, w_rec_r);
  }
  read_flat(flat, pos, w_sym);
  read_flat(flat, pos, b_sym);
  read_flat(flat, pos, w_mix);
  read_flat(flat, pos, b_mix);
  if (head_kind != HeadKind::None) {
    read_flat(flat, pos, w_head);
    read_flat(flat, pos, b_head);
  }
}

Gradients Gradients::zero_like(const ModelParams& p) {
  Gradients g;
  const auto zero = [](const Eigen::MatrixXd& like) {
    return Eigen::MatrixXd::Zero(like.rows(), like.cols());
  };
  g.w_in = zero(p.w_in);
  g.w_rec = zero(p.w_rec);
  g.w_in_z = zero(p.w_in_z);
  g.w_rec_z = zero(p.w_rec_z);
  g.w_in_r = zero(p.w_in_r);
  g.w_rec_r = zero(p.w_rec_r);
  g.w_sym = zero(p.w_sym);
  g.b_sym = Eigen::VectorXd::Zero(p.b_sym.rows());
  g.w_mix = zero(p.w_mix);
  g.b_mix = Eigen::VectorXd::Zero(p.b_mix.rows());
  g.w_head = zero(p.w_head);
  g.b_head = Eigen::VectorXd::Zero(p.b_head.rows());
  return g;
}

Eigen::VectorXd Gradients::to_flat(const ModelParams& p) const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(p.flat_size()));
  Eigen::Index pos = 0;
  append_flat(flat, pos, w_in);
  append_flat(flat, pos, w_rec);
  if (p.cell_kind == CellKind::Gru) {
    append_flat(flat, pos, w_in_z);
    append_flat(flat, pos, w_rec_z);
    append_flat(flat, pos, w_in_r);
    append_flat(flat, pos, w_rec_r);
  }
  append_flat(flat, pos, w_sym);
  append_flat(flat, pos, b_sym);
  append_flat(flat, pos, w_mix);
  append_flat(flat, pos, b_mix);
  if (p.head_kind != HeadKind::None) {
    append_flat(flat, pos, w_head);
    append_flat(flat, pos, b_head);
  }
  return flat;
}

void Gradients::axpy(double scale, const Gradients& other) {
  const auto add = [scale](Eigen::MatrixXd& dst, const Eigen::MatrixXd& src) {
    if (dst.size() > 0) dst += scale * src;
  };
  add(w_in, other.w_in);
  add(w_rec, other.w_rec);
  add(w_in_z, other.w_in_z);
  add(w_rec_z, other.w_rec_z);
  add(w_in_r, other.w_in_r);
  add(w_rec_r, other.w_rec_r);
  add(w_sym, other.w_sym);
  add(w_mix, other.w_mix);
  b_sym += scale * other.b_sym;
  b_mix += scale * other.b_mix;
  if (w_head.size() > 0) {
    w_head += scale * other.w_head;
    b_head += scale * other.b_head;
  }
}

namespace {

Eigen::VectorXd embed(const ModelParams& p, const Alphabet& alphabet,
                      const LexiconElement& e) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p.alphabet_size) + 1);
  x(static_cast<Eigen::Index>(e.symbol)) = 1.0;
  if (alphabet.value_carrying(e.symbol))
    x(x.size() - 1) = (*e.value - p.value_affine.mean) / p.value_affine.stddev;
  return x;
}

MixtureDistribution mixture_from_raw(const Eigen::VectorXd& raw, std::size_t m) {
  const auto mm = static_cast<Eigen::Index>(m);
  MixtureDistribution mix;
  mix.mean = raw.segment(0, mm);
  mix.log_var = raw.segment(mm, mm).cwiseMax(kLogVarMin).cwiseMin(kLogVarMax);
  mix.log_weight = log_softmax(raw.segment(2 * mm, mm));
  return mix;
}

}  // namespace

double mixture_log_density(const MixtureDistribution& mix, double v) {
  const Eigen::ArrayXd var = mix.log_var.array().exp();
  const Eigen::ArrayXd log_comp = mix.log_weight.array() - kHalfLog2Pi -
                                  0.5 * mix.log_var.array() -
                                  (v - mix.mean.array()).square() / (2.0 * var);
  const double m = log_comp.maxCoeff();
  return m + std::log((log_comp - m).exp().sum());
}

namespace {

Eigen::VectorXd sigmoid_of(const Eigen::VectorXd& v) {
  return (1.0 / (1.0 + (-v.array()).exp())).matrix();
}

}  // namespace

ForwardResult forward(const ModelParams& p, const Alphabet& alphabet,
                      const Serialization& a) {
  const auto H = static_cast<Eigen::Index>(p.hidden_dim);
  const auto T = static_cast<Eigen::Index>(a.elements.size());
  const bool gated = p.cell_kind == CellKind::Gru;

  ForwardResult fwd;
  fwd.hidden = Eigen::MatrixXd::Zero(H, T + 1);
  fwd.inputs.resize(static_cast<Eigen::Index>(p.alphabet_size) + 1, T);
  if (gated) {
    fwd.gate_z.resize(H, T);
    fwd.gate_r.resize(H, T);
    fwd.candidate.resize(H, T);
  }
  fwd.steps.reserve(static_cast<std::size_t>(T));

  for (Eigen::Index t = 0; t < T; ++t) {
    const auto& h_prev = fwd.hidden.col(t);

    StepPrediction step;
    step.sym_log_probs = log_softmax(p.w_sym * h_prev + p.b_sym);
    step.mixture = mixture_from_raw(p.w_mix * h_prev + p.b_mix, p.mixture_components);
    fwd.steps.push_back(std::move(step));

    fwd.inputs.col(t) = embed(p, alphabet, a.elements[static_cast<std::size_t>(t)]);
    const auto& x = fwd.inputs.col(t);
    if (gated) {
      const Eigen::VectorXd z = sigmoid_of(p.w_in_z * x + p.w_rec_z * h_prev);
      const Eigen::VectorXd r = sigmoid_of(p.w_in_r * x + p.w_rec_r * h_prev);
      const Eigen::VectorXd c =
          (p.w_in * x + p.w_rec * r.cwiseProduct(h_prev)).array().tanh();
      fwd.gate_z.col(t) = z;
      fwd.gate_r.col(t) = r;
      fwd.candidate.col(t) = c;
      fwd.hidden.col(t + 1) =
          (Eigen::VectorXd::Ones(H) - z).cwiseProduct(h_prev) + z.cwiseProduct(c);
    } else {
      fwd.hidden.col(t + 1) = sigmoid_of(p.w_rec * h_prev + p.w_in * x);
    }
    if (!fwd.hidden.col(t + 1).allFinite())
      throw NonFiniteActivation("hidden state diverged at step " + std::to_string(t + 1));
  }
  return fwd;
}

double sequence_nll(const ModelParams& p, const Alphabet& alphabet,
                    const Serialization& a, const ForwardResult& fwd) {
  double nll = 0.0;
  for (std::size_t t = 0; t < a.elements.size(); ++t) {
    const auto& e = a.elements[t];
    const auto& step = fwd.steps[t];
    nll -= step.sym_log_probs(static_cast<Eigen::Index>(e.symbol));
    if (alphabet.value_carrying(e.symbol)) {
      const double v = (*e.value - p.value_affine.mean) / p.value_affine.stddev;
      nll -= mixture_log_density(step.mixture, v);
      nll += std::log(p.value_affine.stddev);  // change of variables
    }
  }
  if (!std::isfinite(nll)) throw NonFiniteActivation("non-finite sequence NLL");
  return nll;
}

double sequence_nll(const ModelParams& p, const Alphabet& alphabet,
                    const Serialization& a) {
  return sequence_nll(p, alphabet, a, forward(p, alphabet, a));
}

namespace {

Eigen::VectorXd normalized_hidden(const Eigen::VectorXd& h) {
  return h / std::max(h.norm(), kNormFloor);
}

}  // namespace

double regularizer(std::span<const Eigen::MatrixXd> hidden, const ConstraintMatrix& c) {
  double total = 0.0;
  for (const auto& entry : c.entries) {
    const auto& hj = hidden[entry.j];
    const auto& hk = hidden[entry.k];
    total += (normalized_hidden(hj.col(entry.t)) - normalized_hidden(hk.col(entry.t)))
                 .norm();
  }
  return total;
}

namespace {

// d/dv of -log P(symbol) wrt the categorical logits.
Eigen::VectorXd dlogits_categorical(const Eigen::VectorXd& sym_log_probs, SymbolId sym) {
  Eigen::VectorXd d = sym_log_probs.array().exp();
  d(static_cast<Eigen::Index>(sym)) -= 1.0;
  return d;
}

// d/draw of -log p(value) wrt the raw 3m mixture outputs, honoring the
// log-variance clamp (zero gradient outside the clamp range).
Eigen::VectorXd dmix_raw(const MixtureDistribution& mix, const Eigen::VectorXd& raw,
                         double v, std::size_t m) {
  const auto mm = static_cast<Eigen::Index>(m);
  const Eigen::ArrayXd var = mix.log_var.array().exp();
  const Eigen::ArrayXd diff = v - mix.mean.array();
  Eigen::ArrayXd log_comp = mix.log_weight.array() - kHalfLog2Pi -
                            0.5 * mix.log_var.array() - diff.square() / (2.0 * var);
  const double lse = [&] {
    const double mx = log_comp.maxCoeff();
    return mx + std::log((log_comp - mx).exp().sum());
  }();
  const Eigen::ArrayXd post = (log_comp - lse).exp();  // responsibilities

  Eigen::VectorXd d(3 * mm);
  // means: dL/dmu_i = -post_i * (v - mu_i) / var_i
  d.segment(0, mm) = (-post * diff / var).matrix();
  // log-variances (pre-clamp): dL/dlv_i = -post_i * (diff^2/(2 var) - 1/2)
  for (Eigen::Index i = 0; i < mm; ++i) {
    const double raw_lv = raw(mm + i);
    const bool clamped = raw_lv < kLogVarMin || raw_lv > kLogVarMax;
    d(mm + i) = clamped ? 0.0
                        : -post(i) * (diff(i) * diff(i) / (2.0 * var(i)) - 0.5);
  }
  // weight logits: dL/dw_i = softmax(w)_i - post_i
  const Eigen::ArrayXd w_soft = (log_softmax(raw.segment(2 * mm, mm))).array().exp();
  d.segment(2 * mm, mm) = (w_soft - post).matrix();
  return d;
}

struct SequenceBackward {
  // dH accumulates dLoss/dh^t; recurrent backward folds it into grads.
  Eigen::MatrixXd dH;
};

void backward_recurrence(const ModelParams& p, const ForwardResult& fwd,
                         Eigen::MatrixXd& dH, Gradients& g) {
  const Eigen::Index T = fwd.inputs.cols();
  if (p.cell_kind == CellKind::Sigmoid) {
    for (Eigen::Index t = T; t >= 1; --t) {
      const auto h = fwd.hidden.col(t);
      const Eigen::VectorXd dz =
          dH.col(t).cwiseProduct(h.cwiseProduct(Eigen::VectorXd::Ones(h.size()) - h));
      g.w_rec.noalias() += dz * fwd.hidden.col(t - 1).transpose();
      g.w_in.noalias() += dz * fwd.inputs.col(t - 1).transpose();
      dH.col(t - 1).noalias() += p.w_rec.transpose() * dz;
    }
    return;
  }

  // Gated cell: h = (1-z) .* h_prev + z .* c.
  const Eigen::Index H = fwd.hidden.rows();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(H);
  for (Eigen::Index t = T; t >= 1; --t) {
    const Eigen::VectorXd dh = dH.col(t);
    const auto h_prev = fwd.hidden.col(t - 1);
    const auto x = fwd.inputs.col(t - 1);
    const Eigen::VectorXd z = fwd.gate_z.col(t - 1);
    const Eigen::VectorXd r = fwd.gate_r.col(t - 1);
    const Eigen::VectorXd c = fwd.candidate.col(t - 1);

    const Eigen::VectorXd dz = dh.cwiseProduct(c - h_prev);
    const Eigen::VectorXd dc = dh.cwiseProduct(z);
    Eigen::VectorXd dh_prev = dh.cwiseProduct(ones - z);

    // Candidate path: c = tanh(w_in x + w_rec (r .* h_prev)).
    const Eigen::VectorXd dc_pre = dc.cwiseProduct(ones - c.cwiseProduct(c));
    g.w_in.noalias() += dc_pre * x.transpose();
    g.w_rec.noalias() += dc_pre * r.cwiseProduct(h_prev).transpose();
    const Eigen::VectorXd d_rh = p.w_rec.transpose() * dc_pre;
    const Eigen::VectorXd dr = d_rh.cwiseProduct(h_prev);
    dh_prev += d_rh.cwiseProduct(r);

    // Update gate.
    const Eigen::VectorXd dz_pre = dz.cwiseProduct(z.cwiseProduct(ones - z));
    g.w_in_z.noalias() += dz_pre * x.transpose();
    g.w_rec_z.noalias() += dz_pre * h_prev.transpose();
    dh_prev.noalias() += p.w_rec_z.transpose() * dz_pre;

    // Reset gate.
    const Eigen::VectorXd dr_pre = dr.cwiseProduct(r.cwiseProduct(ones - r));
    g.w_in_r.noalias() += dr_pre * x.transpose();
    g.w_rec_r.noalias() += dr_pre * h_prev.transpose();
    dh_prev.noalias() += p.w_rec_r.transpose() * dr_pre;

    dH.col(t - 1) += dh_prev;
  }
}

}  // namespace

LossBreakdown loss(const ModelParams& p, const Alphabet& alphabet,
                   std::span<const Serialization> batch,
                   const ConstraintMatrix& constraints, double lambda) {
  LossBreakdown out;
  std::vector<Eigen::MatrixXd> hiddens;
  hiddens.reserve(batch.size());
  for (const auto& a : batch) {
    const ForwardResult fwd = forward(p, alphabet, a);
    out.nll += sequence_nll(p, alphabet, a, fwd);
    hiddens.push_back(fwd.hidden);
  }
  out.reg_value = regularizer(hiddens, constraints);
  out.total = out.nll + lambda * out.reg_value;
  return out;
}

namespace {

// Regularizer value; scales its gradient by lambda into the per-sequence dH
// accumulators.
double regularizer_into_dH(const std::vector<ForwardResult>& fwds,
                           const ConstraintMatrix& constraints, double lambda,
                           std::vector<Eigen::MatrixXd>& dHs) {
  double reg_value = 0.0;
  for (const auto& entry : constraints.entries) {
    const Eigen::VectorXd hj = fwds[entry.j].hidden.col(entry.t);
    const Eigen::VectorXd hk = fwds[entry.k].hidden.col(entry.t);
    const Eigen::VectorXd nj = normalized_hidden(hj);
    const Eigen::VectorXd nk = normalized_hidden(hk);
    const Eigen::VectorXd diff = nj - nk;
    const double dist = diff.norm();
    reg_value += dist;
    if (dist <= 0.0 || lambda == 0.0) continue;
    const Eigen::VectorXd ddist = diff / dist;  // dR/dn_j; negated for n_k
    const auto through_norm = [](const Eigen::VectorXd& h, const Eigen::VectorXd& n,
                                 const Eigen::VectorXd& upstream) -> Eigen::VectorXd {
      const double norm = h.norm();
      if (norm <= kNormFloor) return upstream / kNormFloor;
      return (upstream - n * n.dot(upstream)) / norm;
    };
    dHs[entry.j].col(entry.t) += lambda * through_norm(hj, nj, ddist);
    dHs[entry.k].col(entry.t) -= lambda * through_norm(hk, nk, ddist);
  }
  return reg_value;
}

}  // namespace

LossBreakdown loss_grad(const ModelParams& p, const Alphabet& alphabet,
                        std::span<const Serialization> batch,
                        const ConstraintMatrix& constraints, double lambda,
                        Gradients& g) {
  LossBreakdown out;
  std::vector<ForwardResult> fwds;
  fwds.reserve(batch.size());
  std::vector<Eigen::MatrixXd> dHs(batch.size());

  for (std::size_t j = 0; j < batch.size(); ++j) {
    fwds.push_back(forward(p, alphabet, batch[j]));
    out.nll += sequence_nll(p, alphabet, batch[j], fwds.back());
    dHs[j] = Eigen::MatrixXd::Zero(fwds[j].hidden.rows(), fwds[j].hidden.cols());
  }

  out.reg_value = regularizer_into_dH(fwds, constraints, lambda, dHs);

  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto& a = batch[j];
    const auto& fwd = fwds[j];
    for (std::size_t t = 0; t < a.elements.size(); ++t) {
      const auto& e = a.elements[t];
      const auto h = fwd.hidden.col(static_cast<Eigen::Index>(t));
      const Eigen::VectorXd dlog = dlogits_categorical(fwd.steps[t].sym_log_probs, e.symbol);
      g.w_sym.noalias() += dlog * h.transpose();
      g.b_sym += dlog;
      dHs[j].col(static_cast<Eigen::Index>(t)).noalias() += p.w_sym.transpose() * dlog;
      if (alphabet.value_carrying(e.symbol)) {
        const double v = (*e.value - p.value_affine.mean) / p.value_affine.stddev;
        const Eigen::VectorXd raw = p.w_mix * h + p.b_mix;
        const Eigen::VectorXd dmix = dmix_raw(fwd.steps[t].mixture, raw, v,
                                              p.mixture_components);
        g.w_mix.noalias() += dmix * h.transpose();
        g.b_mix += dmix;
        dHs[j].col(static_cast<Eigen::Index>(t)).noalias() += p.w_mix.transpose() * dmix;
      }
    }
    backward_recurrence(p, fwd, dHs[j], g);
  }

  out.total = out.nll + lambda * out.reg_value;
  if (!std::isfinite(out.total)) throw NonFiniteActivation("non-finite loss");
  return out;
}

double regularizer_grad(const ModelParams& p, const Alphabet& alphabet,
                        std::span<const Serialization> batch,
                        const ConstraintMatrix& constraints, double lambda,
                        Gradients& g) {
  std::vector<ForwardResult> fwds;
  fwds.reserve(batch.size());
  std::vector<Eigen::MatrixXd> dHs(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    fwds.push_back(forward(p, alphabet, batch[j]));
    dHs[j] = Eigen::MatrixXd::Zero(fwds[j].hidden.rows(), fwds[j].hidden.cols());
  }
  const double reg_value = regularizer_into_dH(fwds, constraints, lambda, dHs);
  for (std::size_t j = 0; j < batch.size(); ++j)
    backward_recurrence(p, fwds[j], dHs[j], g);
  return reg_value;
}

namespace {

void require_head(const ModelParams& p) {
  if (p.head_kind == HeadKind::None) throw MissingHead();
}

}  // namespace

double discriminative_loss(const ModelParams& p, const Alphabet& alphabet,
                           const Serialization& a, const Target& y) {
  require_head(p);
  const ForwardResult fwd = forward(p, alphabet, a);
  const Eigen::VectorXd h_last = fwd.hidden.col(fwd.hidden.cols() - 1);
  const Eigen::VectorXd raw = p.w_head * h_last + p.b_head;
  if (p.head_kind == HeadKind::Classification) {
    if (!y.class_index) throw Error("classification head needs a class target");
    return -log_softmax(raw)(static_cast<Eigen::Index>(*y.class_index));
  }
  if (!y.real_value) throw Error("regression head needs a real target");
  return -mixture_log_density(mixture_from_raw(raw, p.mixture_components), *y.real_value);
}

double discriminative_loss_grad(const ModelParams& p, const Alphabet& alphabet,
                                const Serialization& a, const Target& y,
                                Gradients& g) {
  require_head(p);
  ForwardResult fwd = forward(p, alphabet, a);
  const Eigen::Index last = fwd.hidden.cols() - 1;
  const Eigen::VectorXd h_last = fwd.hidden.col(last);
  const Eigen::VectorXd raw = p.w_head * h_last + p.b_head;

  double value = 0.0;
  Eigen::VectorXd draw;
  if (p.head_kind == HeadKind::Classification) {
    if (!y.class_index) throw Error("classification head needs a class target");
    const Eigen::VectorXd lp = log_softmax(raw);
    value = -lp(static_cast<Eigen::Index>(*y.class_index));
    draw = lp.array().exp();
    draw(static_cast<Eigen::Index>(*y.class_index)) -= 1.0;
  } else {
    if (!y.real_value) throw Error("regression head needs a real target");
    const MixtureDistribution mix = mixture_from_raw(raw, p.mixture_components);
    value = -mixture_log_density(mix, *y.real_value);
    draw = dmix_raw(mix, raw, *y.real_value, p.mixture_components);
  }

  g.w_head.noalias() += draw * h_last.transpose();
  g.b_head += draw;
  Eigen::MatrixXd dH = Eigen::MatrixXd::Zero(fwd.hidden.rows(), fwd.hidden.cols());
  dH.col(last) = p.w_head.transpose() * draw;
  backward_recurrence(p, fwd, dH, g);
  if (!std::isfinite(value)) throw NonFiniteActivation("non-finite discriminative loss");
  return value;
}

Eigen::VectorXd class_probabilities(const ModelParams& p, const Alphabet& alphabet,
                                    const Serialization& a) {
  require_head(p);
  if (p.head_kind != HeadKind::Classification)
    throw Error("class_probabilities needs a classification head");
  const ForwardResult fwd = forward(p, alphabet, a);
  const Eigen::VectorXd raw =
      p.w_head * fwd.hidden.col(fwd.hidden.cols() - 1) + p.b_head;
  return log_softmax(raw).array().exp();
}

}  // namespace seriate
