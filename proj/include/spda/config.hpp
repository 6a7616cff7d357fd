#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spda/optim.hpp"

namespace spda {

struct DatasetConfig {
  std::string kind;  // "mnist" | "lasso"
  // mnist
  std::string path;
  long limit_train = -1;  // keep first n train samples; -1 keeps all
  long limit_val = -1;
  // lasso
  long n = 1000;
  long d = 200;
  double support_fraction = 0.1;
  double noise_sd = 0.0;
};

struct ModelConfig {
  std::string kind;  // "mlp" | "cnn"
  std::vector<long> dims;       // mlp widths, input through classes
  std::vector<long> channels;   // cnn conv channels
  long kernel = 3;
  std::vector<long> fc_dims;    // cnn fc widths plus class count
  bool batchnorm = false;
  bool with_relu = true;
  std::string init = "scaled_uniform";  // or "zero"
};

struct OptimizerConfig {
  std::string kind = "rda";
  double alpha = 0.1;
  double lambda = 0.0;
  double sqrt_s = 1.0;  // weight init scale; the uniform bound is sqrt_s / sqrt(fan_in)
  std::string lr_mode = "inv_sqrt";  // or "constant"
  double eta = 0.0;                  // rate used by constant mode
  std::vector<ScheduleStage> schedule;
  std::string name;  // row label in compare output; defaults to kind
};

struct TrainConfig {
  long batch_size = 128;
  long epochs = 30;
  long asr_epochs = 10;
  uint64_t seed = 1;
};

/// Settings for the convergence study and lasso-based comparisons.
struct StudyConfig {
  long batch_size = 10;
  long steps = 100000;
  long window_lo = 100;
  long window_hi = 100000;
  double oracle_tol = 1e-10;
  double w1_scale = 1.0;
  int samples_per_decade = 20;
};

struct Config {
  DatasetConfig dataset;
  ModelConfig model;
  OptimizerConfig optimizer;
  std::vector<OptimizerConfig> compare;
  TrainConfig train;
  StudyConfig study;
  std::string output_dir = "runs/out";
};

/// Parses and validates a JSON config file. Unknown keys, wrong types, and
/// out-of-range values all raise ConfigError.
Config parse_config_file(const std::string& path);
Config parse_config_text(const std::string& text);

/// Canonical resolved form: every field present, keys sorted. Equal configs
/// serialize to equal strings.
std::string canonical_config(const Config& cfg);

/// SHA-256 of the canonical form, minus output_dir (the run trajectory does
/// not depend on where results are written).
std::array<uint8_t, 32> config_hash(const Config& cfg);
std::string hex_digest(const std::array<uint8_t, 32>& digest);

}  // namespace spda
