#pragma once

#include <array>
#include <cstdint>

#include "seriate/instances.hpp"
#include "seriate/rng.hpp"

namespace seriate {

// Coupled Van der Pol pair driven by a harmonic oscillator:
//
//   y1'' = -|k|+ y1
//   y2'' = |mu_y2|+ (1 - y2^2) y2' - y2 - y1
//   y3'' = |mu_y3|+ (1 - y3^2) y3' - y3 - y2
//
// with |.|+ the positive-part clamp.  Integrated as a 6-dimensional
// first-order system with fixed-step classical RK4 (fixed step keeps corpora
// reproducible), sampled at t = i * step_size for i = 0..length-1.
struct VdpParams {
  double y1_0 = 0.0, y2_0 = 0.0, y3_0 = 0.0;
  double dy1_0 = 0.0, dy2_0 = 0.0, dy3_0 = 0.0;
  double k = 3.0;
  double mu_y2 = 3.0;
  double mu_y3 = 3.0;
  std::size_t length = 21;
  double step_size = 0.1;

  void validate() const;
};

// Positions and velocities at the sample times; states[i] =
// (y1, y2, y3, y1', y2', y3') at t = i * step_size.
struct VdpTrajectory {
  std::vector<std::array<double, 6>> states;
};

VdpTrajectory integrate_vdp(const VdpParams& params);

// SeriesInstance with variables y1, y2, y3 (3 x length output matrix) and the
// nine input features: initial positions, initial velocities, and the offset
// parameters k-3, mu_y2-3, mu_y3-3.
SeriesInstance generate_vdp(const VdpParams& params);

struct VdpDatasetConfig {
  std::size_t count = 0;
  std::size_t length = 21;
  double step_size = 0.1;
  // Positions and velocities uniform in [-1, 1]; k and the mu parameters
  // uniform in [2, 4] so the -3 offsets are centered.
};

std::vector<SeriesInstance> generate_vdp_dataset(const VdpDatasetConfig& cfg, Philox& rng);

// Random labeled trees: node count uniform in [1, max_nodes], uniform random
// labels, topology by sequential random-parent attachment.
std::vector<TreeInstance> generate_random_trees(const std::vector<std::string>& labels,
                                                std::size_t count, std::size_t max_nodes,
                                                Philox& rng, bool ordered = false);

}  // namespace seriate
