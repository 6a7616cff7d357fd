#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spda/tensor.hpp"

namespace spda {

/// Raw IDX payload: big-endian magic, big-endian dim sizes, uint8 data.
struct IdxData {
  uint32_t magic = 0;
  std::vector<long> dims;
  std::vector<uint8_t> bytes;
};

/// Reads an IDX file, gzip-compressed or plain (detected transparently).
IdxData read_idx(const std::string& path);

/// Writes gzip-compressed IDX. Round-trips bit-exactly through read_idx.
void write_idx(const std::string& path, const IdxData& data);

/// Image files (rank >= 2) come back scaled to [0,1]; label files raw.
Tensor load_idx(const std::string& path);

struct LabeledDataset {
  Tensor inputs;            // [N,1,H,W]
  std::vector<int> labels;  // [N]
  long size() const { return static_cast<long>(labels.size()); }
};

/// Loads the four canonical MNIST files from dir (with or without .gz).
LabeledDataset load_mnist(const std::string& dir, bool train);

/// Keeps the first n samples; n < 0 keeps everything.
LabeledDataset truncate_dataset(const LabeledDataset& ds, long n);

/// Seeded shuffled index batches; the trailing short batch is kept.
class MinibatchIterator {
 public:
  MinibatchIterator(long n, long batch_size, uint64_t epoch_seed);
  /// Fills the next batch; false once the epoch is exhausted.
  bool next(std::vector<long>& indices);
  long num_batches() const;
  void reset(uint64_t epoch_seed);

 private:
  std::vector<long> perm_;
  long batch_;
  long pos_ = 0;
};

}  // namespace spda
