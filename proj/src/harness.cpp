#include "spda/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spda/asr.hpp"
#include "spda/checkpoint.hpp"
#include "spda/convex.hpp"
#include "spda/data.hpp"
#include "spda/errors.hpp"
#include "spda/metrics.hpp"
#include "spda/model.hpp"
#include "spda/rng.hpp"

namespace spda {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed streams, so independent random decisions never share a sequence.
constexpr uint64_t kStreamShuffle = 0;  // index = epoch (or pass)
constexpr uint64_t kStreamInit = 1;
constexpr uint64_t kStreamProblem = 2;
constexpr uint64_t kStreamStart = 3;

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string jsonl_line(const MetricsRecord& r) {
  std::string s = "{\"epoch\":" + std::to_string(r.epoch);
  s += ",\"loss\":" + fmt_g17(r.loss);
  s += ",\"top1\":" + fmt_g17(r.top1);
  s += ",\"top5\":" + fmt_g17(r.top5);
  s += ",\"sparsity\":" + fmt_g17(r.sparsity);
  s += ",\"alpha\":" + fmt_g17(r.alpha);
  s += ",\"lambda\":" + fmt_g17(r.lambda);
  s += ",\"sparsity_all\":" + fmt_g17(r.sparsity_all);
  s += "}";
  return s;
}

std::string csv_line(const MetricsRecord& r) {
  std::string s = std::to_string(r.epoch);
  s += "," + fmt_g17(r.loss);
  s += "," + fmt_g17(r.top1);
  s += "," + fmt_g17(r.top5);
  s += "," + fmt_g17(r.sparsity);
  s += "," + fmt_g17(r.alpha);
  s += "," + fmt_g17(r.lambda);
  return s;
}

constexpr const char* kCsvHeader = "epoch,loss,top1,top5,sparsity,alpha,lambda";

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

void append_line(std::ofstream& f, const std::string& line) { f << line << "\n"; }

MetricsRecord record_from_json(const std::string& line) {
  json j = json::parse(line);
  MetricsRecord r;
  r.epoch = j.at("epoch").get<long>();
  r.loss = j.at("loss").get<double>();
  r.top1 = j.at("top1").get<double>();
  r.top5 = j.at("top5").get<double>();
  r.sparsity = j.at("sparsity").get<double>();
  r.alpha = j.at("alpha").get<double>();
  r.lambda = j.at("lambda").get<double>();
  r.sparsity_all = j.at("sparsity_all").get<double>();
  return r;
}

// Drops every line belonging to an epoch after `keep_through`. Returns the
// kept JSONL records so a resumed run still reports the full history.
std::vector<MetricsRecord> truncate_run_files(const std::string& dir, long keep_through) {
  std::vector<MetricsRecord> kept;
  std::string jl = dir + "/metrics.jsonl";
  {
    std::ifstream in(jl);
    if (!in) throw ConfigError("resume: missing " + jl);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      MetricsRecord r = record_from_json(line);
      if (r.epoch <= keep_through) kept.push_back(r);
    }
  }
  std::string text;
  for (const MetricsRecord& r : kept) text += jsonl_line(r) + "\n";
  write_text_file(jl, text);

  std::string csv = std::string(kCsvHeader) + "\n";
  for (const MetricsRecord& r : kept) csv += csv_line(r) + "\n";
  write_text_file(dir + "/metrics.csv", csv);

  // Timings are informational; keep rows up to the checkpoint epoch.
  std::string tpath = dir + "/timings.csv";
  std::ifstream tin(tpath);
  std::string tkept = "epoch,seconds\n";
  if (tin) {
    std::string line;
    std::getline(tin, line);  // header
    while (std::getline(tin, line)) {
      if (line.empty()) continue;
      long e = std::strtol(line.c_str(), nullptr, 10);
      if (e <= keep_through) tkept += line + "\n";
    }
  }
  write_text_file(tpath, tkept);
  return kept;
}

Model build_model(const ModelConfig& mc, long in_c, long in_h, long in_w, long classes) {
  if (mc.kind == "mlp") {
    if (mc.dims.front() != in_c * in_h * in_w)
      throw ConfigError("mlp input width does not match the dataset");
    if (mc.dims.back() != classes)
      throw ConfigError("mlp output width does not match the class count");
    return build_mlp(mc.dims, mc.with_relu);
  }
  if (mc.kind == "cnn") {
    if (mc.fc_dims.back() != classes)
      throw ConfigError("cnn output width does not match the class count");
    return build_small_cnn(in_c, in_h, in_w, mc.channels, mc.kernel, mc.fc_dims,
                           mc.batchnorm);
  }
  throw ConfigError("unknown model kind " + mc.kind);
}

void init_model(Model& model, const ModelConfig& mc, const OptimizerConfig& oc,
                uint64_t seed) {
  if (mc.init == "zero") {
    set_all_zero(model);
  } else {
    init_scaled_uniform(model, oc.sqrt_s * oc.sqrt_s, Rng::derive(seed, kStreamInit, 0));
  }
}

std::vector<ParamSlot> make_slots(Model& model) {
  std::vector<ParamSlot> slots;
  for (Param& p : model.params())
    slots.push_back({&p.var->value, &p.var->grad, p.regularized});
  return slots;
}

void gather_batch(const LabeledDataset& ds, const std::vector<long>& idx, Tensor& x,
                  std::vector<int>& y) {
  long per = ds.inputs.size() / ds.inputs.dim(0);
  Shape shape = ds.inputs.shape();
  shape[0] = static_cast<long>(idx.size());
  if (x.shape() != shape) x = Tensor(shape);
  y.resize(idx.size());
  for (size_t r = 0; r < idx.size(); ++r) {
    const double* src = ds.inputs.data() + idx[r] * per;
    std::copy(src, src + per, x.data() + static_cast<long>(r) * per);
    y[r] = ds.labels[static_cast<size_t>(idx[r])];
  }
}

struct EvalStats {
  double loss = 0.0;
  double top1 = 0.0;
  double top5 = 0.0;
};

EvalStats evaluate(Model& model, const LabeledDataset& ds, long batch_size) {
  EvalStats out;
  double loss_sum = 0.0;
  long hits1 = 0, hits5 = 0, seen = 0;
  Tensor x;
  std::vector<int> y;
  std::vector<long> idx;
  for (long start = 0; start < ds.size(); start += batch_size) {
    long m = std::min(batch_size, ds.size() - start);
    idx.resize(static_cast<size_t>(m));
    for (long r = 0; r < m; ++r) idx[static_cast<size_t>(r)] = start + r;
    gather_batch(ds, idx, x, y);
    Var logits = model.forward(x, /*training=*/false);
    Var loss = softmax_cross_entropy(logits, y);
    long classes = logits->value.dim(1);
    loss_sum += loss->value[0] * static_cast<double>(m);
    hits1 += top_k_hits(logits->value, y, 1);
    hits5 += top_k_hits(logits->value, y, std::min<long>(5, classes));
    seen += m;
  }
  out.loss = loss_sum / static_cast<double>(seen);
  out.top1 = 100.0 * static_cast<double>(hits1) / static_cast<double>(seen);
  out.top5 = 100.0 * static_cast<double>(hits5) / static_cast<double>(seen);
  return out;
}

std::vector<Tensor> snapshot_tensors(Model& model) {
  std::vector<Tensor> out;
  for (const Param& p : model.params()) out.push_back(p.var->value);
  for (const BufferRef& b : model.buffers()) out.push_back(*b.second);
  return out;
}

void restore_tensors(Model& model, const std::vector<Tensor>& stored) {
  std::vector<Param>& params = model.params();
  std::vector<BufferRef> buffers = model.buffers();
  if (stored.size() != params.size() + buffers.size())
    throw ConfigError("checkpoint tensor count does not match the model");
  size_t k = 0;
  for (Param& p : params) {
    if (stored[k].size() != p.var->value.size())
      throw ConfigError("checkpoint tensor size mismatch at " + p.name);
    std::copy(stored[k].data(), stored[k].data() + stored[k].size(),
              p.var->value.data());
    ++k;
  }
  for (BufferRef& b : buffers) {
    if (stored[k].size() != b.second->size())
      throw ConfigError("checkpoint tensor size mismatch at " + b.first);
    std::copy(stored[k].data(), stored[k].data() + stored[k].size(), b.second->data());
    ++k;
  }
}

std::unique_ptr<Optimizer> optimizer_from_config(const OptimizerConfig& oc) {
  LrMode mode = (oc.lr_mode == "constant") ? LrMode::Constant : LrMode::InvSqrt;
  return make_optimizer(opt_kind_from_string(oc.kind), oc.alpha, oc.lambda, mode, oc.eta);
}

void check_params_finite(const std::vector<ParamSlot>& slots, long epoch) {
  for (const ParamSlot& s : slots)
    if (!s.w->all_finite()) throw NumericError("non-finite parameter value", epoch);
}

json record_to_json(const MetricsRecord& r) {
  return json::parse(jsonl_line(r));
}

}  // namespace

RunResult run_experiment(const Config& cfg, bool resume, long stop_after_epoch) {
  if (cfg.dataset.kind != "mnist")
    throw ConfigError("training runs need the mnist dataset");
  const std::string& dir = cfg.output_dir;
  fs::create_directories(dir);
  write_text_file(dir + "/config.json", canonical_config(cfg) + "\n");

  LabeledDataset train_ds =
      truncate_dataset(load_mnist(cfg.dataset.path, true), cfg.dataset.limit_train);
  LabeledDataset val_ds =
      truncate_dataset(load_mnist(cfg.dataset.path, false), cfg.dataset.limit_val);

  Model model = build_model(cfg.model, train_ds.inputs.dim(1), train_ds.inputs.dim(2),
                            train_ds.inputs.dim(3), 10);
  std::array<uint8_t, 32> hash = config_hash(cfg);

  const long e1 = cfg.train.epochs;
  const long total = e1 + cfg.train.asr_epochs;
  const long bs = cfg.train.batch_size;
  const uint64_t seed = cfg.train.seed;

  HyperSchedule sched;
  if (!cfg.optimizer.schedule.empty()) {
    sched = HyperSchedule(cfg.optimizer.schedule);
    if (sched.last_epoch() != total)
      throw ConfigError("schedule must cover every epoch of both phases");
  }

  RunResult result;
  result.params_total = model.param_count();
  result.params_regularized = model.regularized_count();
  result.phase1_epochs = e1;
  result.asr_epochs = cfg.train.asr_epochs;

  std::unique_ptr<Optimizer> opt;
  FreezeMask mask;
  uint8_t phase = 1;
  long start_epoch = 1;

  std::vector<ParamSlot> slots;

  if (resume) {
    Checkpoint ck = load_checkpoint(dir + "/checkpoint.bin");
    if (ck.config_hash != hash)
      throw ConfigError("checkpoint.bin was written by a different config");
    restore_tensors(model, ck.tensors);
    opt = make_optimizer(ck.opt);
    phase = ck.phase;
    start_epoch = ck.epoch + 1;
    slots = make_slots(model);
    if (phase == 2) {
      mask.data() = ck.masks;
      mask.attach(slots);  // shape check against the rebuilt model
    }
    result.records = truncate_run_files(dir, ck.epoch);
  } else {
    init_model(model, cfg.model, cfg.optimizer, seed);
    opt = optimizer_from_config(cfg.optimizer);
    slots = make_slots(model);

    double alpha0 = cfg.optimizer.alpha, lambda0 = cfg.optimizer.lambda;
    if (!sched.empty() && total >= 1) {
      alpha0 = sched.at(1).alpha;
      lambda0 = sched.at(1).lambda;
    }
    EvalStats tr = evaluate(model, train_ds, bs);
    EvalStats va = evaluate(model, val_ds, bs);
    MetricsRecord r0;
    r0.epoch = 0;
    r0.loss = tr.loss;
    r0.top1 = va.top1;
    r0.top5 = va.top5;
    r0.sparsity = sparsity_regularized(model).fraction();
    r0.alpha = alpha0;
    r0.lambda = lambda0;
    r0.sparsity_all = sparsity_all(model).fraction();
    result.records.push_back(r0);

    write_text_file(dir + "/metrics.jsonl", jsonl_line(r0) + "\n");
    write_text_file(dir + "/metrics.csv",
                    std::string(kCsvHeader) + "\n" + csv_line(r0) + "\n");
    write_text_file(dir + "/timings.csv", "epoch,seconds\n");
    save_checkpoint(dir + "/checkpoint.bin",
                    {hash, snapshot_tensors(model), opt->export_state(), 0, 1, {}});
  }

  std::ofstream jl(dir + "/metrics.jsonl", std::ios::app);
  std::ofstream cs(dir + "/metrics.csv", std::ios::app);
  std::ofstream tm(dir + "/timings.csv", std::ios::app);

  Tensor x;
  std::vector<int> y;
  std::vector<long> idx;

  for (long epoch = start_epoch; epoch <= total; ++epoch) {
    if (stop_after_epoch >= 0 && epoch > stop_after_epoch) break;
    auto t_start = std::chrono::steady_clock::now();
    if (epoch > e1 && phase == 1) {
      // Retention phase: restart the optimizer from scratch and never let a
      // coordinate that has reached exact zero move away from it again.
      phase = 2;
      opt = optimizer_from_config(cfg.optimizer);
      mask.attach(slots);
      mask.admit_zeros(slots);
    }
    if (!sched.empty()) apply_hyper_schedule(sched, epoch, *opt);
    const double alpha_now = opt->alpha();
    const double lambda_now = opt->lambda();

    MaskedOptimizer masked(*opt, mask);
    Optimizer& stepper = (phase == 2) ? static_cast<Optimizer&>(masked) : *opt;

    MinibatchIterator it(train_ds.size(), bs, Rng::derive(seed, kStreamShuffle, epoch));
    double loss_sum = 0.0;
    long seen = 0;
    while (it.next(idx)) {
      gather_batch(train_ds, idx, x, y);
      model.zero_grad();
      Var loss = model.loss(x, y, /*training=*/true);
      double lval = loss->value[0];
      if (!std::isfinite(lval)) throw NumericError("non-finite training loss", epoch);
      model.backward();
      stepper.step(slots);
      loss_sum += lval * static_cast<double>(idx.size());
      seen += static_cast<long>(idx.size());
    }
    check_params_finite(slots, epoch);

    EvalStats va = evaluate(model, val_ds, bs);
    MetricsRecord r;
    r.epoch = epoch;
    r.loss = loss_sum / static_cast<double>(seen);
    r.top1 = va.top1;
    r.top5 = va.top5;
    r.sparsity = sparsity_regularized(model).fraction();
    r.alpha = alpha_now;
    r.lambda = lambda_now;
    r.sparsity_all = sparsity_all(model).fraction();
    result.records.push_back(r);

    append_line(jl, jsonl_line(r));
    append_line(cs, csv_line(r));
    jl.flush();
    cs.flush();

    save_checkpoint(dir + "/checkpoint.bin",
                    {hash, snapshot_tensors(model), opt->export_state(), epoch, phase,
                     phase == 2 ? mask.data() : std::vector<std::vector<uint8_t>>{}});

    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                      .count();
    char trow[64];
    std::snprintf(trow, sizeof trow, "%ld,%.3f", epoch, secs);
    append_line(tm, trow);
    tm.flush();
  }

  // An interrupted run leaves no summary, exactly like a killed process.
  if (result.records.back().epoch == total) {
    json summary;
    summary["kind"] = "train";
    summary["params_total"] = result.params_total;
    summary["params_regularized"] = result.params_regularized;
    summary["phase1_epochs"] = result.phase1_epochs;
    summary["asr_epochs"] = result.asr_epochs;
    summary["final"] = record_to_json(result.records.back());
    write_text_file(dir + "/summary.json", summary.dump(2) + "\n");
  }
  return result;
}

namespace {

// Shared by the convergence study and lasso comparisons: `steps` stochastic
// minibatch steps of one optimizer on a fixed problem, from a fixed start.
void run_lasso_steps(const ConvexProblem& problem, Optimizer& opt, Tensor& w, long steps,
                     long batch_size, uint64_t seed, ConvergenceTrace* trace,
                     double phi_star) {
  Tensor g({problem.d});
  std::vector<ParamSlot> slots = {{&w, &g, true}};
  MinibatchIterator it(problem.n, batch_size, Rng::derive(seed, kStreamShuffle, 0));
  std::vector<long> rows;
  long pass = 0;
  for (long step = 1; step <= steps; ++step) {
    if (!it.next(rows)) {
      ++pass;
      it.reset(Rng::derive(seed, kStreamShuffle, static_cast<uint64_t>(pass)));
      it.next(rows);
    }
    problem.minibatch_grad(w, rows, g);
    opt.step(slots);
    if (trace != nullptr) {
      trace->add(w);
      if (trace->due()) trace->record_gap(problem.objective(trace->wbar()) - phi_star);
    }
  }
}

Tensor random_start(long d, double scale, uint64_t seed) {
  Rng rng(Rng::derive(seed, kStreamStart, 0));
  Tensor w({d});
  for (long j = 0; j < d; ++j) w[j] = scale * rng.normal();
  return w;
}

}  // namespace

StudyResult run_convergence_study(const Config& cfg) {
  if (cfg.dataset.kind != "lasso")
    throw ConfigError("the convergence study needs the lasso dataset");
  if (!cfg.optimizer.schedule.empty())
    throw ConfigError("schedules are epoch-based and do not apply to the study");
  const std::string& dir = cfg.output_dir;
  fs::create_directories(dir);
  write_text_file(dir + "/config.json", canonical_config(cfg) + "\n");

  const uint64_t seed = cfg.train.seed;
  ConvexProblem problem = make_synthetic_lasso(
      cfg.dataset.n, cfg.dataset.d, cfg.dataset.support_fraction, cfg.dataset.noise_sd,
      Rng::derive(seed, kStreamProblem, 0));
  problem.lambda = cfg.optimizer.lambda;

  OracleSolution ref = convex_oracle(problem, cfg.study.oracle_tol);

  Tensor w = random_start(problem.d, cfg.study.w1_scale, seed);
  std::unique_ptr<Optimizer> opt = optimizer_from_config(cfg.optimizer);
  ConvergenceTrace trace(
      log_spaced_steps(1, cfg.study.steps, cfg.study.samples_per_decade));
  run_lasso_steps(problem, *opt, w, cfg.study.steps, cfg.study.batch_size, seed, &trace,
                  ref.phi);

  StudyResult out;
  out.phi_star = ref.phi;
  out.oracle_iterations = ref.iterations;
  out.achieved_tol = ref.achieved_tol;
  out.samples = trace.samples();
  out.slope = fit_loglog_slope(out.samples, cfg.study.window_lo, cfg.study.window_hi);
  out.final_sparsity = sparsity(w).fraction();

  std::string trace_csv = "step,gap\n";
  for (const auto& [t, gap] : out.samples)
    trace_csv += std::to_string(t) + "," + fmt_g17(gap) + "\n";
  write_text_file(dir + "/trace.csv", trace_csv);

  json summary;
  summary["kind"] = "converge";
  summary["slope"] = out.slope;
  summary["phi_star"] = out.phi_star;
  summary["oracle_iterations"] = out.oracle_iterations;
  summary["oracle_tol_achieved"] = out.achieved_tol;
  summary["steps"] = cfg.study.steps;
  summary["window"] = {cfg.study.window_lo, cfg.study.window_hi};
  summary["alpha"] = cfg.optimizer.alpha;
  summary["lambda"] = cfg.optimizer.lambda;
  summary["final_sparsity"] = out.final_sparsity;
  write_text_file(dir + "/summary.json", summary.dump(2) + "\n");
  return out;
}

CompareResult compare_optimizers(const Config& cfg) {
  if (cfg.compare.empty())
    throw ConfigError("compare runs need a non-empty 'compare' array");
  std::set<std::string> names;
  for (const OptimizerConfig& oc : cfg.compare)
    if (!names.insert(oc.name).second)
      throw ConfigError("compare entries need distinct names: " + oc.name);

  const std::string& dir = cfg.output_dir;
  fs::create_directories(dir);
  write_text_file(dir + "/config.json", canonical_config(cfg) + "\n");

  CompareResult out;
  const uint64_t seed = cfg.train.seed;

  if (cfg.dataset.kind == "lasso") {
    ConvexProblem problem = make_synthetic_lasso(
        cfg.dataset.n, cfg.dataset.d, cfg.dataset.support_fraction, cfg.dataset.noise_sd,
        Rng::derive(seed, kStreamProblem, 0));
    Tensor w_start = random_start(problem.d, cfg.study.w1_scale, seed);

    for (const OptimizerConfig& oc : cfg.compare) {
      if (!oc.schedule.empty())
        throw ConfigError("schedules are epoch-based and do not apply to lasso runs");
      problem.lambda = oc.lambda;
      Tensor w = w_start;
      std::unique_ptr<Optimizer> opt = optimizer_from_config(oc);
      run_lasso_steps(problem, *opt, w, cfg.study.steps, cfg.study.batch_size, seed,
                      nullptr, 0.0);

      CompareRow row;
      row.name = oc.name;
      row.kind = oc.kind;
      row.alpha = oc.alpha;
      row.lambda = oc.lambda;
      row.sparsity = sparsity(w).fraction();
      long true_zeros = 0, zeroed_true_zeros = 0;
      long true_nonzeros = 0, zeroed_true_nonzeros = 0;
      std::set<long> support(problem.true_support.begin(), problem.true_support.end());
      for (long j = 0; j < problem.d; ++j) {
        if (support.count(j)) {
          ++true_nonzeros;
          if (w[j] == 0.0) ++zeroed_true_nonzeros;
        } else {
          ++true_zeros;
          if (w[j] == 0.0) ++zeroed_true_zeros;
        }
      }
      row.true_zero_rate = true_zeros > 0
                               ? static_cast<double>(zeroed_true_zeros) /
                                     static_cast<double>(true_zeros)
                               : 0.0;
      row.false_zero_rate = true_nonzeros > 0
                                ? static_cast<double>(zeroed_true_nonzeros) /
                                      static_cast<double>(true_nonzeros)
                                : 0.0;
      row.objective = problem.objective(w);
      out.rows.push_back(row);
    }
  } else if (cfg.dataset.kind == "mnist") {
    for (const OptimizerConfig& oc : cfg.compare) {
      Config sub = cfg;
      sub.compare.clear();
      sub.optimizer = oc;
      sub.output_dir = dir + "/" + oc.name;
      RunResult rr = run_experiment(sub, /*resume=*/false);

      CompareRow row;
      row.name = oc.name;
      row.kind = oc.kind;
      row.alpha = oc.alpha;
      row.lambda = oc.lambda;
      row.final_record = rr.records.back();
      row.sparsity = row.final_record.sparsity;
      out.rows.push_back(row);
    }
  } else {
    throw ConfigError("compare supports the lasso and mnist datasets");
  }

  json summary;
  summary["kind"] = "compare";
  summary["dataset"] = cfg.dataset.kind;
  summary["rows"] = json::array();
  for (const CompareRow& r : out.rows) {
    json row;
    row["name"] = r.name;
    row["optimizer"] = r.kind;
    row["alpha"] = r.alpha;
    row["lambda"] = r.lambda;
    row["sparsity"] = r.sparsity;
    if (cfg.dataset.kind == "lasso") {
      row["true_zero_rate"] = r.true_zero_rate;
      row["false_zero_rate"] = r.false_zero_rate;
      row["objective"] = r.objective;
    } else {
      row["final"] = record_to_json(r.final_record);
    }
    summary["rows"].push_back(row);
  }
  write_text_file(dir + "/summary.json", summary.dump(2) + "\n");
  return out;
}

EvalResult evaluate_checkpoint(const std::string& checkpoint_path,
                               const std::string& config_path) {
  std::string cfg_path = config_path;
  if (cfg_path.empty())
    cfg_path = (fs::path(checkpoint_path).parent_path() / "config.json").string();
  Config cfg = parse_config_file(cfg_path);
  if (cfg.dataset.kind != "mnist")
    throw ConfigError("eval needs a checkpoint from an mnist run");

  Checkpoint ck = load_checkpoint(checkpoint_path);
  if (ck.config_hash != config_hash(cfg))
    throw ConfigError("checkpoint does not match the config");

  LabeledDataset val_ds =
      truncate_dataset(load_mnist(cfg.dataset.path, false), cfg.dataset.limit_val);
  Model model = build_model(cfg.model, val_ds.inputs.dim(1), val_ds.inputs.dim(2),
                            val_ds.inputs.dim(3), 10);
  restore_tensors(model, ck.tensors);

  EvalStats va = evaluate(model, val_ds, cfg.train.batch_size);
  EvalResult out;
  out.epoch = ck.epoch;
  out.val_loss = va.loss;
  out.top1 = va.top1;
  out.top5 = va.top5;
  out.sparsity = sparsity_regularized(model).fraction();
  out.sparsity_all = sparsity_all(model).fraction();
  return out;
}

}  // namespace spda
