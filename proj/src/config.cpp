#include "spda/config.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "spda/errors.hpp"

namespace spda {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError("config: " + where + ": " + what);
}

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
}

template <class T>
T get_field(const json& j, const std::string& where, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(where, "bad value for '" + key + "'");
  }
}

template <class T>
T need_field(const json& j, const std::string& where, const std::string& key) {
  if (!j.contains(key)) fail(where, "missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail(where, "bad value for '" + key + "'");
  }
}

DatasetConfig parse_dataset(const json& j) {
  check_keys(j, "dataset",
             {"kind", "path", "limit_train", "limit_val", "n", "d", "support_fraction",
              "noise_sd"});
  DatasetConfig d;
  d.kind = need_field<std::string>(j, "dataset", "kind");
  if (d.kind == "mnist") {
    d.path = need_field<std::string>(j, "dataset", "path");
    d.limit_train = get_field<long>(j, "dataset", "limit_train", -1);
    d.limit_val = get_field<long>(j, "dataset", "limit_val", -1);
    if (d.limit_train == 0 || d.limit_val == 0)
      fail("dataset", "limits must be positive or -1");
  } else if (d.kind == "lasso") {
    d.n = get_field<long>(j, "dataset", "n", 1000);
    d.d = get_field<long>(j, "dataset", "d", 200);
    d.support_fraction = get_field<double>(j, "dataset", "support_fraction", 0.1);
    d.noise_sd = get_field<double>(j, "dataset", "noise_sd", 0.0);
    if (d.n < 1 || d.d < 1) fail("dataset", "n and d must be >= 1");
    if (!(d.support_fraction > 0.0) || d.support_fraction > 1.0)
      fail("dataset", "support_fraction must lie in (0, 1]");
    if (d.noise_sd < 0.0) fail("dataset", "noise_sd must be >= 0");
  } else {
    fail("dataset", "kind must be 'mnist' or 'lasso'");
  }
  return d;
}

ModelConfig parse_model(const json& j) {
  check_keys(j, "model",
             {"kind", "dims", "channels", "kernel", "fc_dims", "batchnorm", "with_relu",
              "init"});
  ModelConfig m;
  m.kind = need_field<std::string>(j, "model", "kind");
  m.init = get_field<std::string>(j, "model", "init", "scaled_uniform");
  if (m.init != "scaled_uniform" && m.init != "zero")
    fail("model", "init must be 'scaled_uniform' or 'zero'");
  if (m.kind == "mlp") {
    m.dims = need_field<std::vector<long>>(j, "model", "dims");
    m.with_relu = get_field<bool>(j, "model", "with_relu", true);
    if (m.dims.size() < 2) fail("model", "mlp needs at least input and output widths");
  } else if (m.kind == "cnn") {
    m.channels = get_field<std::vector<long>>(j, "model", "channels", {});
    m.kernel = get_field<long>(j, "model", "kernel", 3);
    m.fc_dims = need_field<std::vector<long>>(j, "model", "fc_dims");
    m.batchnorm = get_field<bool>(j, "model", "batchnorm", false);
    if (m.fc_dims.empty()) fail("model", "cnn needs fc_dims");
    if (m.kernel < 1) fail("model", "kernel must be >= 1");
  } else {
    fail("model", "kind must be 'mlp' or 'cnn'");
  }
  return m;
}

OptimizerConfig parse_optimizer(const json& j, const std::string& where) {
  check_keys(j, where,
             {"kind", "alpha", "lambda", "sqrt_s", "lr_mode", "eta", "schedule", "name"});
  OptimizerConfig o;
  o.kind = need_field<std::string>(j, where, "kind");
  opt_kind_from_string(o.kind);  // validates, throws ConfigError
  o.alpha = get_field<double>(j, where, "alpha", 0.1);
  o.lambda = get_field<double>(j, where, "lambda", 0.0);
  o.sqrt_s = get_field<double>(j, where, "sqrt_s", 1.0);
  o.lr_mode = get_field<std::string>(j, where, "lr_mode", "inv_sqrt");
  o.eta = get_field<double>(j, where, "eta", 0.0);
  o.name = get_field<std::string>(j, where, "name", o.kind);
  if (!(o.alpha > 0.0)) fail(where, "alpha must be positive");
  if (o.lambda < 0.0) fail(where, "lambda must be >= 0");
  if (!(o.sqrt_s > 0.0)) fail(where, "sqrt_s must be positive");
  if (o.lr_mode != "inv_sqrt" && o.lr_mode != "constant")
    fail(where, "lr_mode must be 'inv_sqrt' or 'constant'");
  if (o.lr_mode == "constant" && !(o.eta > 0.0))
    fail(where, "constant lr_mode needs eta > 0");
  if (j.contains("schedule")) {
    const json& sj = j.at("schedule");
    if (!sj.is_array()) fail(where, "schedule must be an array");
    for (const json& stage : sj) {
      check_keys(stage, where + ".schedule", {"first_epoch", "last_epoch", "alpha", "lambda"});
      ScheduleStage s;
      s.first_epoch = need_field<long>(stage, where + ".schedule", "first_epoch");
      s.last_epoch = need_field<long>(stage, where + ".schedule", "last_epoch");
      s.alpha = need_field<double>(stage, where + ".schedule", "alpha");
      s.lambda = get_field<double>(stage, where + ".schedule", "lambda", o.lambda);
      if (!(s.alpha > 0.0)) fail(where + ".schedule", "alpha must be positive");
      if (s.lambda < 0.0) fail(where + ".schedule", "lambda must be >= 0");
      o.schedule.push_back(s);
    }
    if (!o.schedule.empty())
      HyperSchedule validate(o.schedule);  // throws ConfigError on bad tiling
  }
  return o;
}

TrainConfig parse_train(const json& j) {
  check_keys(j, "train", {"batch_size", "epochs", "asr_epochs", "seed"});
  TrainConfig t;
  t.batch_size = get_field<long>(j, "train", "batch_size", 128);
  t.epochs = get_field<long>(j, "train", "epochs", 30);
  t.asr_epochs = get_field<long>(j, "train", "asr_epochs", 10);
  t.seed = get_field<uint64_t>(j, "train", "seed", 1);
  if (t.batch_size < 1) fail("train", "batch_size must be >= 1");
  if (t.epochs < 0 || t.asr_epochs < 0) fail("train", "epoch counts must be >= 0");
  if (t.epochs + t.asr_epochs < 1) fail("train", "nothing to train");
  return t;
}

StudyConfig parse_study(const json& j) {
  check_keys(j, "study",
             {"batch_size", "steps", "window_lo", "window_hi", "oracle_tol", "w1_scale",
              "samples_per_decade"});
  StudyConfig s;
  s.batch_size = get_field<long>(j, "study", "batch_size", 10);
  s.steps = get_field<long>(j, "study", "steps", 100000);
  s.window_lo = get_field<long>(j, "study", "window_lo", 100);
  s.window_hi = get_field<long>(j, "study", "window_hi", 100000);
  s.oracle_tol = get_field<double>(j, "study", "oracle_tol", 1e-10);
  s.w1_scale = get_field<double>(j, "study", "w1_scale", 1.0);
  s.samples_per_decade = get_field<int>(j, "study", "samples_per_decade", 20);
  if (s.batch_size < 1) fail("study", "batch_size must be >= 1");
  if (s.steps < 1) fail("study", "steps must be >= 1");
  if (s.window_lo < 1 || s.window_hi < s.window_lo)
    fail("study", "window must satisfy 1 <= lo <= hi");
  if (!(s.oracle_tol > 0.0)) fail("study", "oracle_tol must be positive");
  if (s.samples_per_decade < 1) fail("study", "samples_per_decade must be >= 1");
  return s;
}

json dump_optimizer(const OptimizerConfig& o) {
  json j;
  j["kind"] = o.kind;
  j["alpha"] = o.alpha;
  j["lambda"] = o.lambda;
  j["sqrt_s"] = o.sqrt_s;
  j["lr_mode"] = o.lr_mode;
  j["eta"] = o.eta;
  j["name"] = o.name;
  j["schedule"] = json::array();
  for (const ScheduleStage& s : o.schedule) {
    j["schedule"].push_back({{"first_epoch", s.first_epoch},
                             {"last_epoch", s.last_epoch},
                             {"alpha", s.alpha},
                             {"lambda", s.lambda}});
  }
  return j;
}

json dump_config(const Config& c, bool with_output_dir) {
  json j;
  json& d = j["dataset"];
  d["kind"] = c.dataset.kind;
  if (c.dataset.kind == "mnist") {
    d["path"] = c.dataset.path;
    d["limit_train"] = c.dataset.limit_train;
    d["limit_val"] = c.dataset.limit_val;
  } else {
    d["n"] = c.dataset.n;
    d["d"] = c.dataset.d;
    d["support_fraction"] = c.dataset.support_fraction;
    d["noise_sd"] = c.dataset.noise_sd;
  }
  if (!c.model.kind.empty()) {
    json& m = j["model"];
    m["kind"] = c.model.kind;
    m["init"] = c.model.init;
    if (c.model.kind == "mlp") {
      m["dims"] = c.model.dims;
      m["with_relu"] = c.model.with_relu;
    } else if (c.model.kind == "cnn") {
      m["channels"] = c.model.channels;
      m["kernel"] = c.model.kernel;
      m["fc_dims"] = c.model.fc_dims;
      m["batchnorm"] = c.model.batchnorm;
    }
  }
  j["optimizer"] = dump_optimizer(c.optimizer);
  if (!c.compare.empty()) {
    j["compare"] = json::array();
    for (const OptimizerConfig& o : c.compare) j["compare"].push_back(dump_optimizer(o));
  }
  json& t = j["train"];
  t["batch_size"] = c.train.batch_size;
  t["epochs"] = c.train.epochs;
  t["asr_epochs"] = c.train.asr_epochs;
  t["seed"] = c.train.seed;
  json& s = j["study"];
  s["batch_size"] = c.study.batch_size;
  s["steps"] = c.study.steps;
  s["window_lo"] = c.study.window_lo;
  s["window_hi"] = c.study.window_hi;
  s["oracle_tol"] = c.study.oracle_tol;
  s["w1_scale"] = c.study.w1_scale;
  s["samples_per_decade"] = c.study.samples_per_decade;
  if (with_output_dir) j["output_dir"] = c.output_dir;
  return j;
}

}  // namespace

Config parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  check_keys(j, "top level",
             {"dataset", "model", "optimizer", "compare", "train", "study", "output_dir"});
  Config c;
  if (!j.contains("dataset")) fail("top level", "missing 'dataset'");
  c.dataset = parse_dataset(j.at("dataset"));
  if (j.contains("model")) {
    c.model = parse_model(j.at("model"));
  } else if (c.dataset.kind == "mnist") {
    fail("top level", "mnist runs need a 'model'");
  }
  if (!j.contains("optimizer")) fail("top level", "missing 'optimizer'");
  c.optimizer = parse_optimizer(j.at("optimizer"), "optimizer");
  if (j.contains("compare")) {
    const json& arr = j.at("compare");
    if (!arr.is_array() || arr.empty())
      fail("compare", "must be a non-empty array of optimizer settings");
    for (size_t i = 0; i < arr.size(); ++i)
      c.compare.push_back(parse_optimizer(arr[i], "compare[" + std::to_string(i) + "]"));
  }
  c.train = j.contains("train") ? parse_train(j.at("train")) : TrainConfig{};
  c.study = j.contains("study") ? parse_study(j.at("study")) : StudyConfig{};
  c.output_dir = get_field<std::string>(j, "top level", "output_dir", "runs/out");
  return c;
}

Config parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

std::string canonical_config(const Config& cfg) {
  return dump_config(cfg, /*with_output_dir=*/true).dump(2);
}

std::array<uint8_t, 32> config_hash(const Config& cfg) {
  std::string text = dump_config(cfg, /*with_output_dir=*/false).dump();
  std::array<uint8_t, 32> out{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, text.data(), text.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, out.data(), &len) != 1 || len != 32) {
    EVP_MD_CTX_free(ctx);
    throw StateError("sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

std::string hex_digest(const std::array<uint8_t, 32>& digest) {
  static const char* lut = "0123456789abcdef";
  std::string out;
  out.reserve(64);
  for (uint8_t b : digest) {
    out.push_back(lut[b >> 4]);
    out.push_back(lut[b & 0xf]);
  }
  return out;
}

}  // namespace spda
