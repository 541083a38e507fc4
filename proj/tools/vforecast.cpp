// Command-line front end: gen, rasterize, wpe, train, eval, report, predict.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "vforecast/error.hpp"
#include "vforecast/experiment.hpp"

namespace fs = std::filesystem;
using namespace vforecast;

namespace {

/// Flags that override config keys. Unset options leave the config alone.
struct Overrides {
  std::string config_path;
  std::string profile;
  std::optional<std::string> dataset_name, generator, data_dir, out_dir, method, threshold, rw_mode;
  std::optional<int> length, max_epochs, batch_size, input_len;
  std::optional<std::size_t> n_train, n_val, n_test, max_examples;
  std::optional<std::uint64_t> seed, rw_seed;
  std::optional<double> c, lr;
  std::vector<std::uint64_t> model_seeds;
  std::vector<int> channels;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON experiment config");
    app->add_option("--profile", profile, "desk-scale profile: harmonic | ou");
    app->add_option("--dataset", dataset_name, "dataset name used in outputs");
    app->add_option("--generator", generator, "harmonic | ou");
    app->add_option("--data-dir", data_dir, "dataset directory");
    app->add_option("--out", out_dir, "output directory");
    app->add_option("--method", method, "visual | numeric | randomwalk | control");
    app->add_option("--threshold", threshold, "IoU pixel rule: relative[:f] | uniform");
    app->add_option("--rw-mode", rw_mode, "random-walk rendering: mean | sample");
    app->add_option("--rw-seed", rw_seed, "seed for sampled random-walk paths");
    app->add_option("--length", length, "series length");
    app->add_option("--input-len", input_len, "window input length L");
    app->add_option("--overlap", c, "overlap fraction c");
    app->add_option("--train", n_train, "train count");
    app->add_option("--val", n_val, "validation count");
    app->add_option("--test", n_test, "test count");
    app->add_option("--seed", seed, "dataset seed");
    app->add_option("--model-seeds", model_seeds, "model initialization seeds");
    app->add_option("--max-epochs", max_epochs, "epoch cap");
    app->add_option("--batch-size", batch_size, "mini-batch size");
    app->add_option("--lr", lr, "initial learning rate");
    app->add_option("--channels", channels, "VisualAE encoder channel plan");
    app->add_option("--max-examples", max_examples, "evaluate at most this many test series");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!profile.empty()) cfg = desk_profile(generator_from_string(profile));
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config " + config_path);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(in);
      } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + config_path + ": " + e.what());
      }
      if (j.contains("profile") && profile.empty()) {
        cfg = desk_profile(generator_from_string(j["profile"].get<std::string>()));
      }
      cfg = from_json(j, cfg);
    }
    if (dataset_name) cfg.dataset.name = *dataset_name;
    if (generator) cfg.dataset.generator.kind = generator_from_string(*generator);
    if (data_dir) cfg.dataset.dir = *data_dir;
    if (out_dir) cfg.out_dir = *out_dir;
    if (method) cfg.method = method_from_string(*method);
    if (threshold) cfg.eval.threshold = threshold_from_string(*threshold);
    if (rw_mode) cfg.eval.rw_mode = rw_mode_from_string(*rw_mode);
    if (rw_seed) cfg.eval.rw_seed = *rw_seed;
    if (length) cfg.dataset.generator.length = *length;
    if (c) cfg.window.c = *c;
    if (input_len) cfg.window.input_len = *input_len;
    if (length || c) {
      if (!input_len) cfg.window.input_len = 0;
    }
    if (n_train) cfg.dataset.counts.train = *n_train;
    if (n_val) cfg.dataset.counts.validation = *n_val;
    if (n_test) cfg.dataset.counts.test = *n_test;
    if (seed) cfg.dataset.seed = *seed;
    if (!model_seeds.empty()) cfg.model_seeds = model_seeds;
    if (max_epochs) cfg.train.max_epochs = *max_epochs;
    if (batch_size) cfg.train.batch_size = *batch_size;
    if (lr) cfg.train.lr_init = *lr;
    if (!channels.empty()) cfg.visual.channels = channels;
    if (max_examples) cfg.eval.max_examples = *max_examples;
    if (cfg.dataset.dir.empty()) cfg.dataset.dir = "data/" + cfg.dataset.name;
    finalize(cfg);
    return cfg;
  }
};

nlohmann::json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visual time-series forecasting toolkit"};
  app.require_subcommand(1);

  Overrides gen_o, train_o, eval_o, predict_o, show_o;

  auto* gen = app.add_subcommand("gen", "generate train/val/test CSVs and a manifest");
  gen_o.attach(gen);

  auto* rasterize = app.add_subcommand("rasterize", "render every series of a CSV to PGM + VFIM");
  std::string r_csv, r_out = "images";
  int r_width = 64, r_height = 64;
  std::size_t r_limit = 0;
  bool r_no_aa = false;
  rasterize->add_option("csv", r_csv, "dataset CSV")->required();
  rasterize->add_option("--out", r_out, "output directory");
  rasterize->add_option("--width", r_width, "image width");
  rasterize->add_option("--height", r_height, "image height");
  rasterize->add_option("--limit", r_limit, "render at most this many series");
  rasterize->add_flag("--no-antialias", r_no_aa, "one hard pixel per column");

  auto* wpe_cmd = app.add_subcommand("wpe", "weighted permutation entropy per series");
  std::string w_csv, w_out = "wpe.csv", w_hist = "wpe_hist.csv";
  wpe_cmd->add_option("csv", w_csv, "dataset CSV")->required();
  wpe_cmd->add_option("--out", w_out, "per-series WPE CSV");
  wpe_cmd->add_option("--hist", w_hist, "histogram CSV");

  auto* train_cmd = app.add_subcommand("train", "train VisualAE or NumAE for each model seed");
  train_o.attach(train_cmd);
  bool quiet = false;
  train_cmd->add_flag("--quiet", quiet, "no per-epoch log");

  auto* eval_cmd = app.add_subcommand("eval", "score a method on the test split");
  eval_o.attach(eval_cmd);
  std::vector<std::string> checkpoints;
  eval_cmd->add_option("--checkpoint", checkpoints, "checkpoint(s); defaults to the trained seeds");

  auto* report_cmd = app.add_subcommand("report", "combine eval reports into a table");
  std::vector<std::string> report_files;
  std::string report_out = "report";
  bool force = false;
  report_cmd->add_option("reports", report_files, "report JSON files")->required();
  report_cmd->add_option("--out", report_out, "output prefix");
  report_cmd->add_flag("--force", force, "allow reports from different protocols");

  auto* predict_cmd = app.add_subcommand("predict", "dump one test example as images");
  predict_o.attach(predict_cmd);
  std::string p_ckpt, p_out = "predict";
  std::size_t p_index = 0;
  predict_cmd->add_option("--checkpoint", p_ckpt, "checkpoint for learned methods");
  predict_cmd->add_option("--index", p_index, "test-set row");
  predict_cmd->add_option("--dump-dir", p_out, "where the PGM and VFIM files go");

  auto* show_cmd = app.add_subcommand("config", "print the resolved config and network layout");
  show_o.attach(show_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto default_checkpoints = [](const ExperimentConfig& cfg) {
    std::vector<fs::path> out;
    for (auto s : cfg.model_seeds) {
      out.push_back(fs::path(cfg.out_dir) /
                    (cfg.dataset.name + "_" + to_string(cfg.method) + "_seed" + std::to_string(s) + ".vfck"));
    }
    return out;
  };

  try {
    if (gen->parsed()) {
      const auto cfg = gen_o.resolve();
      cmd_gen(cfg);
      std::cout << "wrote " << cfg.dataset.dir << "\n";
    } else if (rasterize->parsed()) {
      RenderSpec spec;
      spec.width = r_width;
      spec.height = r_height;
      spec.antialias = !r_no_aa;
      cmd_rasterize(r_csv, spec, r_out, r_limit);
    } else if (wpe_cmd->parsed()) {
      cmd_wpe(w_csv, w_out, w_hist);
    } else if (train_cmd->parsed()) {
      const auto cfg = train_o.resolve();
      for (auto s : cfg.model_seeds) {
        const auto o = cmd_train(cfg, s, !quiet);
        std::cout << "seed " << s << ": best epoch " << o.trace.best_epoch << " -> " << o.checkpoint.string()
                  << "\n";
      }
    } else if (eval_cmd->parsed()) {
      const auto cfg = eval_o.resolve();
      std::vector<fs::path> cks(checkpoints.begin(), checkpoints.end());
      if (cks.empty() && (cfg.method == Method::kVisual || cfg.method == Method::kNumeric)) {
        cks = default_checkpoints(cfg);
      }
      const auto r = cmd_eval(cfg, cks);
      std::cout << r.dataset << " " << r.method << ": IoU " << r.pred.mean << " +- " << r.pred.std << ", JSD "
                << r.jsd.mean << " +- " << r.jsd.std << ", recon IoU " << r.recon.mean << "\n";
    } else if (report_cmd->parsed()) {
      std::vector<EvalReport> reports;
      for (const auto& f : report_files) reports.push_back(report_from_json(read_json(f)));
      const auto t = cmd_report(reports, force);
      write_file(report_out + ".txt", t.text);
      write_file(report_out + ".csv", t.csv);
      write_file(report_out + "_profile.csv", t.profile_csv);
      std::cout << t.text;
    } else if (predict_cmd->parsed()) {
      const auto cfg = predict_o.resolve();
      fs::path ck = p_ckpt;
      if (ck.empty() && (cfg.method == Method::kVisual || cfg.method == Method::kNumeric)) {
        ck = default_checkpoints(cfg).front();
      }
      cmd_predict(cfg, ck, p_index, p_out);
    } else if (show_cmd->parsed()) {
      const auto cfg = show_o.resolve();
      std::cout << to_json(cfg).dump(2) << "\n";
      if (cfg.method == Method::kVisual) std::cout << Network<float>::visual(cfg.visual).describe();
      if (cfg.method == Method::kNumeric) std::cout << Network<float>::numeric(cfg.numeric).describe();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  }
  return 0;
}
