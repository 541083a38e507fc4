#include "vforecast/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include "vforecast/checkpoint.hpp"
#include "vforecast/complexity.hpp"
#include "vforecast/divergence.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace vforecast {

std::string to_string(Method m) {
  switch (m) {
    case Method::kVisual: return "visual";
    case Method::kNumeric: return "numeric";
    case Method::kRandomWalk: return "randomwalk";
    case Method::kControl: return "control";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "visual") return Method::kVisual;
  if (name == "numeric") return Method::kNumeric;
  if (name == "randomwalk") return Method::kRandomWalk;
  if (name == "control") return Method::kControl;
  throw ConfigError("unknown method '" + name + "' (visual|numeric|randomwalk|control)");
}

unsigned worker_threads() {
  if (const char* env = std::getenv("VFORECAST_THREADS")) {
    const int n = std::atoi(env);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

/// Runs fn(begin, end) over contiguous chunks of [0, n) on worker threads.
template <typename Fn>
void parallel_chunks(std::size_t n, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(worker_threads(), std::max<std::size_t>(1, n));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk, e = std::min(n, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, w, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

const char* order_text(BlockOrder o) {
  return o == BlockOrder::kConvNormRelu ? "conv-bn-relu" : "conv-relu-bn";
}

BlockOrder order_from(const std::string& s) {
  if (s == "conv-bn-relu") return BlockOrder::kConvNormRelu;
  if (s == "conv-relu-bn") return BlockOrder::kConvReluNorm;
  throw ConfigError("unknown block order '" + s + "'");
}

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) {
    try {
      out = j.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<TimeSeries> load_split(const ExperimentConfig& cfg, const char* file) {
  const fs::path p = fs::path(cfg.dataset.dir) / file;
  if (!fs::exists(p)) throw DataError("missing dataset file " + p.string() + " (run gen first)");
  return load_series_csv(p);
}

std::string stem(const ExperimentConfig& cfg) { return cfg.dataset.name + "_" + to_string(cfg.method); }

Network<float> build_network(const ExperimentConfig& cfg) {
  if (cfg.method == Method::kVisual) return Network<float>::visual(cfg.visual);
  if (cfg.method == Method::kNumeric) return Network<float>::numeric(cfg.numeric);
  throw ConfigError("method " + to_string(cfg.method) + " has no network");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

std::string protocol_digest(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  json p;
  p["dataset"] = j["dataset"];
  p["dataset"].erase("dir");
  p["window"] = j["window"];
  p["render"] = j["render"];
  p["threshold"] = j["eval"]["threshold"];
  p["max_examples"] = j["eval"]["max_examples"];
  return hex64(fnv1a(p.dump()));
}

}  // namespace

ExperimentConfig desk_profile(GeneratorKind kind) {
  ExperimentConfig c;
  c.dataset.name = to_string(kind);
  c.dataset.generator.kind = kind;
  c.dataset.generator.length = 200;
  c.dataset.counts = {4000, 500, 1000};
  c.dataset.seed = kind == GeneratorKind::kHarmonic ? 7 : 11;
  c.dataset.dir = "data/" + c.dataset.name;
  c.window.input_len = 0;
  c.visual.channels = {16, 32, 64};
  c.out_dir = "runs/" + c.dataset.name;
  finalize(c);
  return c;
}

void finalize(ExperimentConfig& c) {
  if (c.window.input_len <= 0) c.window = WindowSpec::for_length(c.dataset.generator.length, c.window.c);
  validate(c.window);
  validate(c.render);
  c.visual.height = c.render.height;
  c.visual.width = c.render.width;
  c.numeric.length = c.window.input_len;
  reconstruction_columns(c.render.width, c.window.c);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = {{"name", c.dataset.name},
                  {"generator", to_string(c.dataset.generator.kind)},
                  {"length", c.dataset.generator.length},
                  {"ou_mu", c.dataset.generator.ou_mu},
                  {"counts", {{"train", c.dataset.counts.train},
                              {"validation", c.dataset.counts.validation},
                              {"test", c.dataset.counts.test}}},
                  {"seed", c.dataset.seed},
                  {"dir", c.dataset.dir}};
  j["window"] = {{"c", c.window.c}, {"input_len", c.window.input_len}};
  j["render"] = {{"width", c.render.width},
                 {"height", c.render.height},
                 {"epsilon", c.render.epsilon},
                 {"antialias", c.render.antialias}};
  j["method"] = to_string(c.method);
  j["visual"] = {{"channels", c.visual.channels},
                 {"kernel", c.visual.kernel},
                 {"stride", c.visual.stride},
                 {"padding", c.visual.padding},
                 {"embedding", c.visual.embedding},
                 {"order", order_text(c.visual.order)},
                 {"bottleneck_activation", c.visual.bottleneck_activation}};
  j["numeric"] = {{"kernel", c.numeric.kernel},
                  {"stride", c.numeric.stride},
                  {"padding", c.numeric.padding},
                  {"order", order_text(c.numeric.order)},
                  {"bottleneck_activation", c.numeric.bottleneck_activation}};
  j["train"] = {{"batch_size", c.train.batch_size},
                {"lr_init", c.train.lr_init},
                {"lr_decay_factor", c.train.lr_decay_factor},
                {"lr_floor", c.train.lr_floor},
                {"lr_patience", c.train.lr_patience},
                {"early_stop_patience", c.train.early_stop_patience},
                {"max_epochs", c.train.max_epochs},
                {"momentum", c.train.momentum},
                {"improvement_tol", c.train.improvement_tol}};
  j["model_seeds"] = c.model_seeds;
  j["eval"] = {{"threshold", to_string(c.eval.threshold)},
               {"rw_mode", to_string(c.eval.rw_mode)},
               {"rw_seed", c.eval.rw_seed},
               {"max_examples", c.eval.max_examples}};
  j["out_dir"] = c.out_dir;
  return j;
}

ExperimentConfig from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    take(d, "name", c.dataset.name);
    if (d.contains("generator")) c.dataset.generator.kind = generator_from_string(d["generator"].get<std::string>());
    take(d, "length", c.dataset.generator.length);
    take(d, "ou_mu", c.dataset.generator.ou_mu);
    if (d.contains("counts")) {
      take(d["counts"], "train", c.dataset.counts.train);
      take(d["counts"], "validation", c.dataset.counts.validation);
      take(d["counts"], "test", c.dataset.counts.test);
    }
    take(d, "seed", c.dataset.seed);
    take(d, "dir", c.dataset.dir);
  }
  if (j.contains("window")) {
    take(j["window"], "c", c.window.c);
    take(j["window"], "input_len", c.window.input_len);
  }
  if (j.contains("render")) {
    const json& r = j["render"];
    take(r, "width", c.render.width);
    take(r, "height", c.render.height);
    take(r, "epsilon", c.render.epsilon);
    take(r, "antialias", c.render.antialias);
  }
  if (j.contains("method")) c.method = method_from_string(j["method"].get<std::string>());
  if (j.contains("visual")) {
    const json& v = j["visual"];
    take(v, "channels", c.visual.channels);
    take(v, "kernel", c.visual.kernel);
    take(v, "stride", c.visual.stride);
    take(v, "padding", c.visual.padding);
    take(v, "embedding", c.visual.embedding);
    if (v.contains("order")) c.visual.order = order_from(v["order"].get<std::string>());
    take(v, "bottleneck_activation", c.visual.bottleneck_activation);
  }
  if (j.contains("numeric")) {
    const json& v = j["numeric"];
    take(v, "kernel", c.numeric.kernel);
    take(v, "stride", c.numeric.stride);
    take(v, "padding", c.numeric.padding);
    if (v.contains("order")) c.numeric.order = order_from(v["order"].get<std::string>());
    take(v, "bottleneck_activation", c.numeric.bottleneck_activation);
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    take(t, "batch_size", c.train.batch_size);
    take(t, "lr_init", c.train.lr_init);
    take(t, "lr_decay_factor", c.train.lr_decay_factor);
    take(t, "lr_floor", c.train.lr_floor);
    take(t, "lr_patience", c.train.lr_patience);
    take(t, "early_stop_patience", c.train.early_stop_patience);
    take(t, "max_epochs", c.train.max_epochs);
    take(t, "momentum", c.train.momentum);
    take(t, "improvement_tol", c.train.improvement_tol);
  }
  take(j, "model_seeds", c.model_seeds);
  if (j.contains("eval")) {
    const json& e = j["eval"];
    if (e.contains("threshold")) c.eval.threshold = threshold_from_string(e["threshold"].get<std::string>());
    if (e.contains("rw_mode")) c.eval.rw_mode = rw_mode_from_string(e["rw_mode"].get<std::string>());
    take(e, "rw_seed", c.eval.rw_seed);
    take(e, "max_examples", c.eval.max_examples);
  }
  take(j, "out_dir", c.out_dir);
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  ExperimentConfig base;
  if (j.contains("profile")) {
    base = desk_profile(generator_from_string(j["profile"].get<std::string>()));
  }
  return from_json(j, base);
}

std::string config_digest(const ExperimentConfig& config) {
  return hex64(fnv1a(to_json(config).dump()));
}

// ---- datasets ---------------------------------------------------------------

SeriesImage ground_truth_image(const WindowPair& pair, const WindowSpec& wspec, const RenderSpec& rspec) {
  return numeric_to_image(pair.input, pair.target.values.tail(wspec.shift()), wspec, rspec);
}

Dataset<float> visual_dataset(const std::vector<TimeSeries>& series, const WindowSpec& wspec,
                              const RenderSpec& rspec) {
  const int n = static_cast<int>(series.size());
  Dataset<float> d{Tensor<float>(n, {1, rspec.height, rspec.width}),
                   Tensor<float>(n, {1, rspec.height, rspec.width})};
  parallel_chunks(series.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const WindowPair pair = window_pair(series[i], wspec);
      d.inputs.set_image(static_cast<int>(i), render(pair.input, rspec).pixels);
      d.targets.set_image(static_cast<int>(i), ground_truth_image(pair, wspec, rspec).pixels);
    }
  });
  return d;
}

Dataset<float> numeric_dataset(const std::vector<TimeSeries>& series, const WindowSpec& wspec) {
  const int n = static_cast<int>(series.size());
  const int L = wspec.input_len;
  Dataset<float> d{Tensor<float>(n, {1, 1, L}), Tensor<float>(n, {1, 1, L})};
  for (int i = 0; i < n; ++i) {
    const WindowPair pair = window_pair(series[i], wspec);
    const MinMax mm = MinMax::of(pair.input.values);
    d.inputs.data.segment(static_cast<Eigen::Index>(i) * L, L) = mm.normalize(pair.input.values).cast<float>();
    d.targets.data.segment(static_cast<Eigen::Index>(i) * L, L) = mm.normalize(pair.target.values).cast<float>();
  }
  return d;
}

// ---- evaluation -------------------------------------------------------------

std::vector<Eigen::MatrixXd> predict_images(Method method, const std::vector<TimeSeries>& series,
                                            const ExperimentConfig& cfg, const ParamSet<float>* params) {
  const std::size_t n = series.size();
  std::vector<Eigen::MatrixXd> out(n);
  const WindowSpec& ws = cfg.window;
  const RenderSpec& rs = cfg.render;
  const int k = ws.shift();

  if (method == Method::kControl || method == Method::kRandomWalk) {
    const Rng root(cfg.eval.rw_seed);
    parallel_chunks(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        const WindowPair pair = window_pair(series[i], ws);
        Eigen::VectorXd future;
        if (method == Method::kControl) {
          future = pair.target.values.tail(k);
        } else {
          Rng rng = root.split(i);
          future = rw_predict(rw_fit(pair.input, cfg.eval.rw_mode), k, rng);
        }
        out[i] = numeric_to_image(pair.input, future, ws, rs).pixels;
      }
    });
    return out;
  }

  if (!params) throw ConfigError("method " + to_string(method) + " needs trained parameters");
  ExperimentConfig local = cfg;
  local.method = method;
  const Network<float> net = build_network(local);
  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  parallel_chunks(chunks, [&](std::size_t cb, std::size_t ce) {
    for (std::size_t c = cb; c < ce; ++c) {
      const std::size_t b = c * kChunk, e = std::min(n, b + kChunk);
      const std::vector<TimeSeries> part(series.begin() + b, series.begin() + e);
      if (method == Method::kVisual) {
        const Dataset<float> d = visual_dataset(part, ws, rs);
        const Tensor<float> y = net.forward(*params, d.inputs, Mode::kInference);
        for (std::size_t i = b; i < e; ++i) out[i] = y.image(static_cast<int>(i - b)).cast<double>();
      } else {
        const Dataset<float> d = numeric_dataset(part, ws);
        const Tensor<float> y = net.forward(*params, d.inputs, Mode::kInference);
        const int L = ws.input_len;
        for (std::size_t i = b; i < e; ++i) {
          const WindowPair pair = window_pair(series[i], ws);
          const MinMax mm = MinMax::of(pair.input.values);
          const Eigen::VectorXd pred =
              mm.denormalize(y.data.segment(static_cast<Eigen::Index>(i - b) * L, L).cast<double>());
          out[i] = numeric_to_image(pair.input, pred.tail(k), ws, rs).pixels;
        }
      }
    }
  });
  return out;
}

void ScoreSet::append(const ScoreSet& o) {
  recon_iou.insert(recon_iou.end(), o.recon_iou.begin(), o.recon_iou.end());
  pred_iou.insert(pred_iou.end(), o.pred_iou.begin(), o.pred_iou.end());
  pred_jsd.insert(pred_jsd.end(), o.pred_jsd.begin(), o.pred_jsd.end());
  if (profile_sum.size() == 0) {
    profile_sum = o.profile_sum;
  } else if (o.profile_sum.size()) {
    profile_sum += o.profile_sum;
  }
  count += o.count;
}

Eigen::VectorXd ScoreSet::profile_mean() const {
  if (count == 0) return profile_sum;
  return profile_sum / static_cast<double>(count);
}

ScoreSet score_images(const std::vector<TimeSeries>& series, const std::vector<Eigen::MatrixXd>& preds,
                      const ExperimentConfig& cfg) {
  if (series.size() != preds.size()) throw DataError("prediction count differs from test set size");
  const std::size_t n = series.size();
  const int w = cfg.render.width;
  const int recon = reconstruction_columns(w, cfg.window.c);
  std::vector<Eigen::VectorXd> profiles(n);
  std::vector<double> jsds(n);
  parallel_chunks(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const WindowPair pair = window_pair(series[i], cfg.window);
      const Eigen::MatrixXd gt = ground_truth_image(pair, cfg.window, cfg.render).pixels;
      profiles[i] = image_iou_profile(gt, preds[i], cfg.eval.threshold, cfg.window.c).per_column;
      const Eigen::RowVectorXd js = columnwise_profile(gt, preds[i], Distance::kJSD);
      jsds[i] = js.tail(w - recon).mean();
    }
  });
  ScoreSet s;
  s.count = n;
  s.profile_sum = Eigen::VectorXd::Zero(w);
  for (std::size_t i = 0; i < n; ++i) {
    IoUProfile p{profiles[i], cfg.window.c};
    const RegionScores r = region_scores(p);
    s.recon_iou.push_back(r.recon_mean);
    s.pred_iou.push_back(r.pred_mean);
    s.pred_jsd.push_back(jsds[i]);
    s.profile_sum += profiles[i];
  }
  return s;
}

Eigen::VectorXd EvalReport::prediction_profile() const {
  const int w = static_cast<int>(profile.size());
  const int recon = reconstruction_columns(w, c);
  return profile.tail(w - recon);
}

EvalReport make_report(const ExperimentConfig& cfg, const ScoreSet& pooled, std::vector<SeedResult> seeds) {
  EvalReport r;
  r.dataset = cfg.dataset.name;
  r.method = to_string(cfg.method);
  if (cfg.method == Method::kRandomWalk) r.method += cfg.eval.rw_mode == RwMode::kMeanPath ? "" : "-sample";
  r.recon = mean_std(pooled.recon_iou);
  r.pred = mean_std(pooled.pred_iou);
  r.jsd = mean_std(pooled.pred_jsd);
  r.profile = pooled.profile_mean();
  r.c = cfg.window.c;
  r.examples = pooled.count;
  r.seeds = std::move(seeds);
  r.config_digest = protocol_digest(cfg);
  r.threshold = to_string(cfg.eval.threshold);
  r.rw_mode = to_string(cfg.eval.rw_mode);
  return r;
}

json to_json(const EvalReport& r) {
  json j;
  j["dataset"] = r.dataset;
  j["method"] = r.method;
  j["recon_mean"] = r.recon.mean;
  j["recon_std"] = r.recon.std;
  j["pred_mean"] = r.pred.mean;
  j["pred_std"] = r.pred.std;
  j["jsd_mean"] = r.jsd.mean;
  j["jsd_std"] = r.jsd.std;
  j["c"] = r.c;
  j["examples"] = r.examples;
  j["profile"] = std::vector<double>(r.profile.data(), r.profile.data() + r.profile.size());
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    seeds.push_back({{"source", s.source},
                     {"recon_mean", s.recon_mean},
                     {"pred_mean", s.pred_mean},
                     {"jsd_mean", s.jsd_mean}});
  }
  j["seeds"] = seeds;
  j["config_digest"] = r.config_digest;
  j["threshold"] = r.threshold;
  j["rw_mode"] = r.rw_mode;
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  try {
    r.dataset = j.at("dataset").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.recon = {j.at("recon_mean").get<double>(), j.at("recon_std").get<double>()};
    r.pred = {j.at("pred_mean").get<double>(), j.at("pred_std").get<double>()};
    r.jsd = {j.at("jsd_mean").get<double>(), j.at("jsd_std").get<double>()};
    r.c = j.at("c").get<double>();
    r.examples = j.at("examples").get<std::size_t>();
    const auto prof = j.at("profile").get<std::vector<double>>();
    r.profile = Eigen::Map<const Eigen::VectorXd>(prof.data(), static_cast<Eigen::Index>(prof.size()));
    for (const auto& s : j.at("seeds")) {
      r.seeds.push_back({s.at("source").get<std::string>(), s.at("recon_mean").get<double>(),
                         s.at("pred_mean").get<double>(), s.at("jsd_mean").get<double>()});
    }
    r.config_digest = j.at("config_digest").get<std::string>();
    r.threshold = j.value("threshold", "");
    r.rw_mode = j.value("rw_mode", "");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return r;
}

// ---- subcommands ------------------------------------------------------------

void cmd_gen(const ExperimentConfig& cfg) {
  const DatasetSplit split = make_splits(cfg.dataset.generator, cfg.dataset.counts, cfg.dataset.seed);
  const fs::path dir(cfg.dataset.dir);
  fs::create_directories(dir);
  save_series_csv(dir / "train.csv", split.train);
  save_series_csv(dir / "val.csv", split.validation);
  save_series_csv(dir / "test.csv", split.test);

  json manifest;
  manifest["seed"] = cfg.dataset.seed;
  manifest["counts"] = {{"train", cfg.dataset.counts.train},
                        {"validation", cfg.dataset.counts.validation},
                        {"test", cfg.dataset.counts.test}};
  manifest["generator"] = to_string(cfg.dataset.generator.kind);
  json overrides = {{"length", cfg.dataset.generator.length}};
  if (cfg.dataset.generator.kind == GeneratorKind::kHarmonic) {
    overrides["distributions"] = {{"A1", "N(1, 0.5)"},     {"A2", "N(1, 0.5)"},
                                  {"B1", "U(-1/T, 1/T)"},  {"B2", "U(-1/T, 1/T)"},
                                  {"T1", "N(T/5, T/10)"},  {"T2", "N(T, T/2)"},
                                  {"phi1", "U(0, 2pi)"},   {"phi2", "U(0, 2pi)"}};
  } else {
    overrides["mu"] = cfg.dataset.generator.ou_mu;
    overrides["step_ns"] = 6e10;
    overrides["distributions"] = {{"gamma", "N(8e-8, 4e-8) ns^-1"}, {"sigma", "N(1e-2, 5e-3)"}};
  }
  manifest["params-overrides"] = overrides;
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

TrainOutcome cmd_train(const ExperimentConfig& cfg, std::uint64_t model_seed, bool verbose) {
  if (cfg.method != Method::kVisual && cfg.method != Method::kNumeric) {
    throw ConfigError("method " + to_string(cfg.method) + " is not trained");
  }
  const Network<float> net = build_network(cfg);
  const auto train_series = load_split(cfg, "train.csv");
  const auto val_series = load_split(cfg, "val.csv");
  const bool visual = cfg.method == Method::kVisual;
  const Dataset<float> train_set =
      visual ? visual_dataset(train_series, cfg.window, cfg.render) : numeric_dataset(train_series, cfg.window);
  const Dataset<float> val_set =
      visual ? visual_dataset(val_series, cfg.window, cfg.render) : numeric_dataset(val_series, cfg.window);

  TrainConfig tc = cfg.train;
  tc.seed = model_seed;
  if (verbose) std::cerr << net.describe();
  auto result = train(net, train_set, val_set, tc, [&](const EpochRecord& r, bool improved) {
    if (verbose) {
      std::cerr << "epoch " << r.epoch << " train " << r.train_loss << " val " << r.val_loss << " lr "
                << r.lr << " " << std::fixed << std::setprecision(1) << r.seconds << "s"
                << std::defaultfloat << std::setprecision(6) << (improved ? " *" : "") << "\n";
    }
  });

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  TrainOutcome o;
  const std::string base = stem(cfg) + "_seed" + std::to_string(model_seed);
  o.checkpoint = out / (base + ".vfck");
  o.history = out / (base + "_history.csv");
  save_checkpoint(o.checkpoint, net, result.best);
  write_history_csv(o.history, result.history);
  o.trace = std::move(result.history);
  return o;
}

EvalReport cmd_eval(const ExperimentConfig& cfg, const std::vector<fs::path>& checkpoints) {
  auto test = load_split(cfg, "test.csv");
  if (cfg.eval.max_examples && test.size() > cfg.eval.max_examples) test.resize(cfg.eval.max_examples);

  ScoreSet pooled;
  std::vector<SeedResult> seeds;
  auto record = [&](const std::string& source, const ScoreSet& s) {
    seeds.push_back({source, mean_std(s.recon_iou).mean, mean_std(s.pred_iou).mean, mean_std(s.pred_jsd).mean});
    pooled.append(s);
  };
  if (cfg.method == Method::kVisual || cfg.method == Method::kNumeric) {
    if (checkpoints.empty()) throw ConfigError("eval of a learned method needs at least one checkpoint");
    const Network<float> net = build_network(cfg);
    for (const auto& ck : checkpoints) {
      const ParamSet<float> params = load_checkpoint(ck, net);
      record(ck.filename().string(), score_images(test, predict_images(cfg.method, test, cfg, &params), cfg));
    }
  } else {
    record(to_string(cfg.method), score_images(test, predict_images(cfg.method, test, cfg), cfg));
  }
  EvalReport report = make_report(cfg, pooled, std::move(seeds));

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  const std::string base = report.dataset + "_" + report.method;
  write_text(out / (base + ".json"), to_json(report).dump(2) + "\n");
  std::ostringstream csv;
  csv << "column_index,iou\n";
  for (Eigen::Index i = 0; i < report.profile.size(); ++i) csv << i << ',' << report.profile[i] << '\n';
  write_text(out / (base + "_profile.csv"), csv.str());
  return report;
}

ReportTable cmd_report(const std::vector<EvalReport>& reports, bool force) {
  if (reports.empty()) throw ConfigError("report needs at least one eval report");
  std::map<std::string, std::vector<const EvalReport*>> by_dataset;
  for (const auto& r : reports) by_dataset[r.dataset].push_back(&r);
  for (auto& [name, group] : by_dataset) {
    for (const auto* r : group) {
      if (!force && r->config_digest != group.front()->config_digest) {
        throw ConfigError("reports for dataset '" + name + "' were produced under different protocols (use --force)");
      }
      if (r->profile.size() != group.front()->profile.size() || r->c != group.front()->c) {
        throw ConfigError("reports for dataset '" + name + "' have different image geometry");
      }
    }
    std::stable_sort(group.begin(), group.end(),
                     [](const EvalReport* a, const EvalReport* b) { return a->pred.mean > b->pred.mean; });
  }

  ReportTable t;
  std::ostringstream text, csv, prof;
  auto pm = [](const MeanStd& m) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << m.mean << "+-" << m.std;
    return s.str();
  };
  text << std::left << std::setw(12) << "Dataset" << std::setw(14) << "Method" << std::setw(14) << "IoU"
       << std::setw(14) << "JSD" << "Recon IoU\n";
  csv << "dataset,method,iou_mean,iou_std,jsd_mean,jsd_std,recon_mean,recon_std,examples\n";
  std::vector<const EvalReport*> ordered;
  for (const auto& [name, group] : by_dataset) {
    for (const auto* r : group) {
      text << std::left << std::setw(12) << r->dataset << std::setw(14) << r->method << std::setw(14)
           << pm(r->pred) << std::setw(14) << pm(r->jsd) << pm(r->recon) << "\n";
      csv << r->dataset << ',' << r->method << ',' << r->pred.mean << ',' << r->pred.std << ',' << r->jsd.mean
          << ',' << r->jsd.std << ',' << r->recon.mean << ',' << r->recon.std << ',' << r->examples << '\n';
      ordered.push_back(r);
    }
  }
  prof << "column";
  for (const auto* r : ordered) prof << ',' << r->dataset << '_' << r->method;
  prof << '\n';
  Eigen::Index rows = 0;
  for (const auto* r : ordered) rows = std::max(rows, r->prediction_profile().size());
  for (Eigen::Index i = 0; i < rows; ++i) {
    prof << i;
    for (const auto* r : ordered) {
      const Eigen::VectorXd p = r->prediction_profile();
      prof << ',';
      if (i < p.size()) prof << p[i];
    }
    prof << '\n';
  }
  t.text = text.str();
  t.csv = csv.str();
  t.profile_csv = prof.str();
  return t;
}

void cmd_predict(const ExperimentConfig& cfg, const fs::path& checkpoint, std::size_t index,
                 const fs::path& out_dir) {
  const auto test = load_split(cfg, "test.csv");
  if (index >= test.size()) throw DataError("example index " + std::to_string(index) + " out of range");
  const std::vector<TimeSeries> one{test[index]};
  std::optional<ParamSet<float>> params;
  if (cfg.method == Method::kVisual || cfg.method == Method::kNumeric) {
    params = load_checkpoint(checkpoint, build_network(cfg));
  }
  const auto pred = predict_images(cfg.method, one, cfg, params ? &*params : nullptr);
  const WindowPair pair = window_pair(test[index], cfg.window);
  fs::create_directories(out_dir);
  const std::string base = cfg.dataset.name + "_" + std::to_string(index);
  const SeriesImage input = render(pair.input, cfg.render);
  const SeriesImage gt = ground_truth_image(pair, cfg.window, cfg.render);
  SeriesImage p = gt;
  p.pixels = pred[0];
  write_pgm(out_dir / (base + "_input.pgm"), input);
  write_pgm(out_dir / (base + "_truth.pgm"), gt);
  write_pgm(out_dir / (base + "_" + to_string(cfg.method) + ".pgm"), p);
  write_vfim(out_dir / (base + "_truth.vfim"), gt.pixels);
  write_vfim(out_dir / (base + "_" + to_string(cfg.method) + ".vfim"), p.pixels);
}

void cmd_rasterize(const fs::path& csv, const RenderSpec& spec, const fs::path& out_dir, std::size_t limit) {
  auto series = load_series_csv(csv);
  if (limit && series.size() > limit) series.resize(limit);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < series.size(); ++i) {
    const SeriesImage img = render(series[i], spec);
    char name[32];
    std::snprintf(name, sizeof name, "series_%06zu", i);
    write_pgm(out_dir / (std::string(name) + ".pgm"), img);
    write_vfim(out_dir / (std::string(name) + ".vfim"), img.pixels);
  }
}

void cmd_wpe(const fs::path& csv, const fs::path& out_values, const fs::path& out_histogram) {
  const auto series = load_series_csv(csv);
  std::vector<double> values(series.size());
  parallel_chunks(series.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) values[i] = wpe(series[i]);
  });
  std::ostringstream v;
  v << "index,wpe\n";
  for (std::size_t i = 0; i < values.size(); ++i) v << i << ',' << values[i] << '\n';
  write_text(out_values, v.str());
  const Histogram h = histogram(values, 20, 0.0, 1.0);
  std::ostringstream hs;
  hs << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) hs << h.edges[i] << ',' << h.edges[i + 1] << ',' << h.counts[i] << '\n';
  write_text(out_histogram, hs.str());
}

}  // namespace vforecast
