#pragma once

#include <filesystem>
#include <optional>

#include "seriate/dataio.hpp"
#include "seriate/train.hpp"

namespace seriate {

// Flat binary checkpoint, little-endian throughout:
//
//   bytes 0..7   magic "SERMODL1"
//   u32          version (currently 1; unknown versions are rejected)
//   u32          flags (bit 0: optimizer state present)
//   u64          hidden_dim, alphabet_size, mixture_components
//   u32          cell kind (0 sigmoid, 1 gru)
//   u32          head kind (0 none, 1 classification, 2 regression)
//   u64          target_dim
//   f64          value mean, value stddev
//   u64 + bytes  backend schema JSON (length-prefixed)
//   f64 blocks   w_in, w_rec, [gru: w_in_z, w_rec_z, w_in_r, w_rec_r,]
//                w_sym, b_sym, w_mix, b_mix, [w_head, b_head], each row-major
//   optimizer    u64 step, then f64 blocks m and v (flat parameter order)
struct Checkpoint {
  ModelParams params;
  BackendSchema schema;
  std::optional<AdamState> opt;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace seriate
