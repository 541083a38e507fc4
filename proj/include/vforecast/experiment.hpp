#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vforecast/baselines.hpp"
#include "vforecast/ioumetric.hpp"
#include "vforecast/network.hpp"
#include "vforecast/raster.hpp"
#include "vforecast/seriesgen.hpp"
#include "vforecast/trainer.hpp"

namespace vforecast {

enum class Method { kVisual, kNumeric, kRandomWalk, kControl };

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct DatasetConfig {
  std::string name = "harmonic";
  GeneratorSpec generator;
  SplitCounts counts{4000, 500, 1000};
  std::uint64_t seed = 7;
  std::string dir;  // where gen writes / train and eval read the CSVs
};

struct EvalOptions {
  ThresholdRule threshold;
  RwMode rw_mode = RwMode::kMeanPath;
  std::uint64_t rw_seed = 0;
  std::size_t max_examples = 0;  // 0 = whole test set
};

/// Every CLI flag mirrors one of these keys; see to_json/from_json.
struct ExperimentConfig {
  DatasetConfig dataset;
  WindowSpec window;
  RenderSpec render;
  Method method = Method::kVisual;
  VisualAEConfig visual;
  NumAEConfig numeric;
  TrainConfig train;
  std::vector<std::uint64_t> model_seeds{1, 2};
  EvalOptions eval;
  std::string out_dir = "runs";
};

/// Desk-scale defaults for the named generator.
ExperimentConfig desk_profile(GeneratorKind kind);

nlohmann::json to_json(const ExperimentConfig& config);
/// Overlays the keys present in `j` onto `base`.
ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path);

/// Window derived from the dataset length; also syncs NumAE length to L.
void finalize(ExperimentConfig& config);

/// Stable hex digest of the full config.
std::string config_digest(const ExperimentConfig& config);

// ---- dataset assembly -------------------------------------------------------

Dataset<float> visual_dataset(const std::vector<TimeSeries>& series, const WindowSpec& wspec,
                              const RenderSpec& rspec);

/// Inputs and targets min-max scaled with the input window's bounds.
Dataset<float> numeric_dataset(const std::vector<TimeSeries>& series, const WindowSpec& wspec);

/// Ground-truth target image (the shared numeric_to_image path).
SeriesImage ground_truth_image(const WindowPair& pair, const WindowSpec& wspec, const RenderSpec& rspec);

// ---- evaluation -------------------------------------------------------------

/// Predicted target images, one per series, for a method. `params` is
/// required for the learned methods.
std::vector<Eigen::MatrixXd> predict_images(Method method, const std::vector<TimeSeries>& series,
                                            const ExperimentConfig& config,
                                            const ParamSet<float>* params = nullptr);

struct ScoreSet {
  std::vector<double> recon_iou, pred_iou, pred_jsd;
  Eigen::VectorXd profile_sum;  // per-column IoU summed over examples
  std::size_t count = 0;

  void append(const ScoreSet& other);
  Eigen::VectorXd profile_mean() const;
};

ScoreSet score_images(const std::vector<TimeSeries>& series, const std::vector<Eigen::MatrixXd>& preds,
                      const ExperimentConfig& config);

struct SeedResult {
  std::string source;  // checkpoint path or seed label
  double recon_mean = 0.0, pred_mean = 0.0, jsd_mean = 0.0;
};

struct EvalReport {
  std::string dataset;
  std::string method;
  MeanStd recon, pred, jsd;
  Eigen::VectorXd profile;  // all columns
  double c = 0.75;
  std::size_t examples = 0;
  std::vector<SeedResult> seeds;
  std::string config_digest;
  std::string threshold;
  std::string rw_mode;

  Eigen::VectorXd prediction_profile() const;
};

nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

EvalReport make_report(const ExperimentConfig& config, const ScoreSet& pooled,
                       std::vector<SeedResult> seeds);

// ---- subcommands ------------------------------------------------------------

/// Writes train.csv, val.csv, test.csv and manifest.json into dataset.dir.
void cmd_gen(const ExperimentConfig& config);

struct TrainOutcome {
  std::filesystem::path checkpoint;
  std::filesystem::path history;
  TrainHistory trace;
};

/// Trains the configured learned method for one model seed.
TrainOutcome cmd_train(const ExperimentConfig& config, std::uint64_t model_seed,
                       bool verbose = false);

/// Evaluates on the test split; writes <out>/<dataset>_<method>.json and
/// <out>/<dataset>_<method>_profile.csv.
EvalReport cmd_eval(const ExperimentConfig& config, const std::vector<std::filesystem::path>& checkpoints);

struct ReportTable {
  std::string text;
  std::string csv;
  std::string profile_csv;
};

/// Side-by-side table sorted by prediction-region IoU (descending) within each
/// dataset, plus prediction-region IoU curves.
ReportTable cmd_report(const std::vector<EvalReport>& reports, bool force = false);

/// Single example: input, ground truth and prediction as PGM + VFIM.
void cmd_predict(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                 std::size_t index, const std::filesystem::path& out_dir);

void cmd_rasterize(const std::filesystem::path& csv, const RenderSpec& spec,
                   const std::filesystem::path& out_dir, std::size_t limit);

/// Per-series WPE and a 20-bin histogram over [0, 1].
void cmd_wpe(const std::filesystem::path& csv, const std::filesystem::path& out_values,
             const std::filesystem::path& out_histogram);

/// Worker count from VFORECAST_THREADS, else hardware concurrency.
unsigned worker_threads();

}  // namespace vforecast
