#pragma once

#include <string>
#include <vector>

#include "spda/config.hpp"

namespace spda {

/// One evaluation/epoch row. `loss` is the training loss for epoch rows and
/// the split loss for standalone evaluations; accuracies are percents over
/// the validation split; sparsity is the exact-zero fraction of regularized
/// weights and sparsity_all the same over every trainable.
struct MetricsRecord {
  long epoch = 0;
  double loss = 0.0;
  double top1 = 0.0;
  double top5 = 0.0;
  double sparsity = 0.0;
  double alpha = 0.0;
  double lambda = 0.0;
  double sparsity_all = 0.0;
};

struct RunResult {
  std::vector<MetricsRecord> records;  // epoch 0 through epochs + asr_epochs
  long params_total = 0;
  long params_regularized = 0;
  long phase1_epochs = 0;
  long asr_epochs = 0;
};

/// Full training run driven by the config: phase 1 for train.epochs, then an
/// optional sparsity-retention phase (fresh optimizer, zeros frozen) for
/// train.asr_epochs. Writes metrics.jsonl / metrics.csv / timings.csv /
/// checkpoint.bin / config.json / summary.json under cfg.output_dir.
/// With resume=true, picks up from checkpoint.bin and reproduces exactly the
/// uninterrupted trajectory. stop_after_epoch >= 0 returns early after that
/// epoch, leaving on-disk state exactly as a killed process would.
RunResult run_experiment(const Config& cfg, bool resume = false,
                         long stop_after_epoch = -1);

struct StudyResult {
  double slope = 0.0;       // log10 gap vs log10 step, fitted inside the window
  double phi_star = 0.0;    // reference optimum objective
  long oracle_iterations = 0;
  double achieved_tol = 0.0;
  double final_sparsity = 0.0;
  std::vector<std::pair<long, double>> samples;  // (step, objective gap)
};

/// Stochastic run on the synthetic problem, tracking the averaged iterate's
/// objective gap against a high-accuracy reference. Writes trace.csv,
/// config.json and summary.json under cfg.output_dir.
StudyResult run_convergence_study(const Config& cfg);

struct CompareRow {
  std::string name;
  std::string kind;
  double alpha = 0.0;
  double lambda = 0.0;
  double sparsity = 0.0;
  // lasso rows
  double true_zero_rate = 0.0;   // zeros among coordinates truly zero
  double false_zero_rate = 0.0;  // zeros among coordinates truly nonzero
  double objective = 0.0;
  // mnist rows
  MetricsRecord final_record;
};

struct CompareResult {
  std::vector<CompareRow> rows;
};

/// Runs each entry of cfg.compare on the shared dataset/seed. On the lasso
/// dataset this is a fixed-step stochastic run per optimizer; on mnist each
/// entry gets a full training run in its own subdirectory.
CompareResult compare_optimizers(const Config& cfg);

struct EvalResult {
  long epoch = 0;
  double val_loss = 0.0;
  double top1 = 0.0;
  double top5 = 0.0;
  double sparsity = 0.0;
  double sparsity_all = 0.0;
};

/// Rebuilds the model from the config next to the checkpoint (or an explicit
/// override), restores weights, evaluates the validation split.
EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& config_path = "");

}  // namespace spda
