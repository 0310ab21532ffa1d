#include "seriate/datagen.hpp"

#include <algorithm>
#include <cmath>

#include "seriate/tree_backend.hpp"

namespace seriate {

namespace {

using State6 = std::array<double, 6>;

State6 vdp_rhs(const VdpParams& p, const State6& u) {
  const double kp = std::max(p.k, 0.0);
  const double mu2 = std::max(p.mu_y2, 0.0);
  const double mu3 = std::max(p.mu_y3, 0.0);
  const double y1 = u[0], y2 = u[1], y3 = u[2];
  const double v1 = u[3], v2 = u[4], v3 = u[5];
  return {v1,
          v2,
          v3,
          -kp * y1,
          mu2 * (1.0 - y2 * y2) * v2 - y2 - y1,
          mu3 * (1.0 - y3 * y3) * v3 - y3 - y2};
}

State6 axpy(const State6& a, double h, const State6& b) {
  State6 out;
  for (int i = 0; i < 6; ++i) out[i] = a[i] + h * b[i];
  return out;
}

State6 rk4_step(const VdpParams& p, const State6& u, double h) {
  const State6 k1 = vdp_rhs(p, u);
  const State6 k2 = vdp_rhs(p, axpy(u, h / 2.0, k1));
  const State6 k3 = vdp_rhs(p, axpy(u, h / 2.0, k2));
  const State6 k4 = vdp_rhs(p, axpy(u, h, k3));
  State6 out;
  for (int i = 0; i < 6; ++i)
    out[i] = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace

void VdpParams::validate() const {
  if (length < 2) throw Error("vdp horizon must be at least 2 steps");
  if (!(step_size > 0.0)) throw Error("vdp step size must be positive");
  for (double v : {y1_0, y2_0, y3_0, dy1_0, dy2_0, dy3_0, k, mu_y2, mu_y3, step_size})
    if (!std::isfinite(v)) throw Error("vdp parameters must be finite");
}

VdpTrajectory integrate_vdp(const VdpParams& params) {
  params.validate();
  VdpTrajectory traj;
  traj.states.reserve(params.length);
  State6 u{params.y1_0, params.y2_0, params.y3_0,
           params.dy1_0, params.dy2_0, params.dy3_0};
  traj.states.push_back(u);
  for (std::size_t i = 1; i < params.length; ++i) {
    u = rk4_step(params, u, params.step_size);
    for (double v : u)
      if (!std::isfinite(v))
        throw NonFiniteTrajectory("integration diverged at sample " + std::to_string(i));
    traj.states.push_back(u);
  }
  return traj;
}

SeriesInstance generate_vdp(const VdpParams& params) {
  const VdpTrajectory traj = integrate_vdp(params);
  SeriesInstance out;
  out.variables = {"y1", "y2", "y3"};
  out.values.assign(3, std::vector<double>(params.length));
  for (std::size_t i = 0; i < params.length; ++i)
    for (std::size_t v = 0; v < 3; ++v) out.values[v][i] = traj.states[i][v];
  out.input_features = {
      {"y1_0", params.y1_0},   {"y2_0", params.y2_0},   {"y3_0", params.y3_0},
      {"dy1_0", params.dy1_0}, {"dy2_0", params.dy2_0}, {"dy3_0", params.dy3_0},
      {"k", params.k - 3.0},
      {"mu_y2", params.mu_y2 - 3.0},
      {"mu_y3", params.mu_y3 - 3.0},
  };
  return out;
}

std::vector<SeriesInstance> generate_vdp_dataset(const VdpDatasetConfig& cfg,
                                                 Philox& rng) {
  const auto unit = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform(); };
  std::vector<SeriesInstance> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    VdpParams p;
    p.y1_0 = unit(-1.0, 1.0);
    p.y2_0 = unit(-1.0, 1.0);
    p.y3_0 = unit(-1.0, 1.0);
    p.dy1_0 = unit(-1.0, 1.0);
    p.dy2_0 = unit(-1.0, 1.0);
    p.dy3_0 = unit(-1.0, 1.0);
    p.k = unit(2.0, 4.0);
    p.mu_y2 = unit(2.0, 4.0);
    p.mu_y3 = unit(2.0, 4.0);
    p.length = cfg.length;
    p.step_size = cfg.step_size;
    out.push_back(generate_vdp(p));
  }
  return out;
}

std::vector<TreeInstance> generate_random_trees(const std::vector<std::string>& labels,
                                                std::size_t count, std::size_t max_nodes,
                                                Philox& rng, bool ordered) {
  if (max_nodes < 1) throw Error("max_nodes must be >= 1");
  if (labels.empty()) throw Error("tree generation needs a label set");

  // Canonicalization reuses the backend's subtree encoding so generated
  // unordered trees compare equal to their round-tripped forms.
  const TreeBackend canon(labels, /*ordered=*/false);
  std::vector<TreeInstance> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.below(max_nodes));
    std::vector<std::string> node_labels(n);
    for (auto& l : node_labels)
      l = labels[static_cast<std::size_t>(rng.below(labels.size()))];
    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t i = 1; i < n; ++i)
      children[static_cast<std::size_t>(rng.below(i))].push_back(i);

    const auto build = [&](std::size_t idx, const auto& self) -> TreeNode {
      TreeNode node{node_labels[idx], {}};
      for (std::size_t child : children[idx]) node.children.push_back(self(child, self));
      return node;
    };
    TreeInstance tree{build(0, build), ordered};
    if (!ordered) {
      // Deserialize of any serialization yields the canonical child order;
      // normalize the generated instance the same way.
      const auto sort_rec = [&](TreeNode& node, const auto& self) -> void {
        for (auto& ch : node.children) self(ch, self);
        std::stable_sort(node.children.begin(), node.children.end(),
                         [&](const TreeNode& a, const TreeNode& b) {
                           return canon.encode_subtree(a) < canon.encode_subtree(b);
                         });
      };
      sort_rec(tree.root, sort_rec);
    }
    out.push_back(std::move(tree));
  }
  return out;
}

}  // namespace seriate
