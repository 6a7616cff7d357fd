#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "spda/config.hpp"
#include "spda/errors.hpp"
#include "spda/harness.hpp"

namespace {

struct Overrides {
  uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
};

void add_override_options(CLI::App* sub, Overrides& ov) {
  sub->add_option("--seed", ov.seed, "Override train.seed")
      ->each([&ov](const std::string&) { ov.seed_set = true; });
  sub->add_option("--out-dir", ov.out_dir, "Override output_dir");
}

spda::Config load(const std::string& path, const Overrides& ov) {
  spda::Config cfg = spda::parse_config_file(path);
  if (ov.seed_set) cfg.train.seed = ov.seed;
  if (!ov.out_dir.empty()) cfg.output_dir = ov.out_dir;
  return cfg;
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse l1-regularized training driver"};
  app.require_subcommand(1);

  std::string config_path;
  std::string checkpoint_path;
  std::string eval_config_path;
  bool resume = false;
  Overrides ov;

  CLI::App* train = app.add_subcommand("train", "Train a model and write run artifacts");
  train->add_option("--config", config_path, "JSON config file")->required();
  train->add_flag("--resume", resume, "Continue from checkpoint.bin in the output dir");
  add_override_options(train, ov);

  CLI::App* converge =
      app.add_subcommand("converge", "Track the averaged iterate's objective gap");
  converge->add_option("--config", config_path, "JSON config file")->required();
  add_override_options(converge, ov);

  CLI::App* compare =
      app.add_subcommand("compare", "Run every optimizer in the compare list");
  compare->add_option("--config", config_path, "JSON config file")->required();
  add_override_options(compare, ov);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a saved checkpoint");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint.bin path")->required();
  eval->add_option("--config", eval_config_path,
                   "Config override (defaults to config.json beside the checkpoint)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;  // --help/--version stay 0; misuse is a config error
  }

  try {
    if (train->parsed()) {
      spda::Config cfg = load(config_path, ov);
      spda::RunResult rr = spda::run_experiment(cfg, resume);
      const spda::MetricsRecord& f = rr.records.back();
      std::cout << "done epoch=" << f.epoch << " loss=" << g17(f.loss)
                << " top1=" << g17(f.top1) << " sparsity=" << g17(f.sparsity)
                << " out=" << cfg.output_dir << "\n";
    } else if (converge->parsed()) {
      spda::Config cfg = load(config_path, ov);
      spda::StudyResult sr = spda::run_convergence_study(cfg);
      std::cout << "done slope=" << g17(sr.slope) << " phi_star=" << g17(sr.phi_star)
                << " samples=" << sr.samples.size() << " out=" << cfg.output_dir << "\n";
    } else if (compare->parsed()) {
      spda::Config cfg = load(config_path, ov);
      spda::CompareResult cr = spda::compare_optimizers(cfg);
      for (const spda::CompareRow& row : cr.rows)
        std::cout << row.name << " sparsity=" << g17(row.sparsity) << "\n";
      std::cout << "done rows=" << cr.rows.size() << " out=" << cfg.output_dir << "\n";
    } else if (eval->parsed()) {
      spda::EvalResult er = spda::evaluate_checkpoint(checkpoint_path, eval_config_path);
      std::cout << "{\"epoch\":" << er.epoch << ",\"val_loss\":" << g17(er.val_loss)
                << ",\"top1\":" << g17(er.top1) << ",\"top5\":" << g17(er.top5)
                << ",\"sparsity\":" << g17(er.sparsity)
                << ",\"sparsity_all\":" << g17(er.sparsity_all) << "}\n";
    }
  } catch (const spda::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const spda::NumericError& e) {
    std::cerr << "numeric error at epoch " << e.epoch << ": " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
