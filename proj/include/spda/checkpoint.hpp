#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spda/optim.hpp"
#include "spda/tensor.hpp"

namespace spda {

/// Full training snapshot. Tensor blocks are stored flat in registry order
/// (trainables, then buffers); shapes come from rebuilding the model out of
/// the config whose hash is embedded here.
struct Checkpoint {
  std::array<uint8_t, 32> config_hash{};
  std::vector<Tensor> tensors;
  OptimizerState opt;
  long epoch = 0;
  uint8_t phase = 1;  // 1 = main run, 2 = sparsity-retention phase
  std::vector<std::vector<uint8_t>> masks;  // one byte per coordinate, empty if unused
};

/// Binary format, little-endian throughout:
///   "SPDA1" | hash[32] | u64 n_tensors | { u64 count, f64*count } ...
///   | u8 opt_kind | u64 t | f64 alpha | f64 lambda | u8 lr_mode | f64 eta
///   | u64 n_gbar | { u64 count, f64*count } ...
///   | u64 epoch | u8 phase | u64 n_masks | { u64 nbits, packed bits } ...
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

/// Throws FormatError on bad magic, truncation, or trailing bytes.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace spda
