#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "vforecast/rng.hpp"

namespace vforecast {

/// Uniformly sampled real-valued series.
struct TimeSeries {
  Eigen::VectorXd values;
  double dt = 1.0;
  std::string origin;

  Eigen::Index size() const { return values.size(); }
};

/// Throws DataError unless the series has at least `min_length` finite samples.
void validate_series(const TimeSeries& s, Eigen::Index min_length = 4);

/// Two-timescale harmonic with linear amplitude trends.
struct HarmonicParams {
  double a1 = 1.0, a2 = 1.0;
  double b1 = 0.0, b2 = 0.0;
  double t1 = 40.0, t2 = 200.0;
  double phi1 = 0.0, phi2 = 0.0;
  int length = 200;
};

struct OUParams {
  double mu = 0.0;
  double gamma = 8e-8;  // ns^-1
  double sigma = 1e-2;
  double s0 = 0.0;
  double step_ns = 6e10;  // one minute
  int n = 200;
};

void validate(const HarmonicParams& p);
void validate(const OUParams& p);

/// s_t = (A1 + B1 t) sin(2 pi t / T1 + phi1) + (A2 + B2 t) sin(2 pi t / T2 + phi2),
/// for t = 1..T.
TimeSeries gen_harmonic(const HarmonicParams& params);

/// A1,A2 ~ N(1, 0.5); B1,B2 ~ U(-1/T, 1/T); T1 ~ N(T/5, T/10); T2 ~ N(T, T/2);
/// phases ~ U(0, 2 pi). Non-positive periods are redrawn.
HarmonicParams sample_harmonic_params(Rng& rng, int length);

/// Exact Gaussian transition with per-step decay exp(-gamma * step_ns):
///   s_t ~ N(mu + (s_{t-1} - mu) a, sigma^2 / (2 gamma) (1 - a^2)).
/// Returns the n samples after s0 (s0 itself is not emitted).
TimeSeries gen_ou(const OUParams& params, Rng& rng);

/// gamma ~ N(8e-8, 4e-8) ns^-1, sigma ~ N(1e-2, 5e-3); non-positive draws
/// are redrawn. s0 = mu.
OUParams sample_ou_params(Rng& rng, int n, double mu = 0.0);

/// Reads a headerless CSV. Each row is cut into segments of `segment_len`
/// samples every `stride` samples; segment_len == 0 takes each row whole.
std::vector<TimeSeries> load_series_csv(const std::filesystem::path& path,
                                        std::size_t segment_len = 0,
                                        std::size_t stride = 0);

/// One series per row, round-trippable decimal text.
void save_series_csv(const std::filesystem::path& path,
                     const std::vector<TimeSeries>& series);

/// Subtract the mean, divide by the population standard deviation.
TimeSeries standardize(const TimeSeries& s);

enum class GeneratorKind { kHarmonic, kOU };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_from_string(const std::string& name);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::kHarmonic;
  int length = 200;
  double ou_mu = 0.0;
};

struct SplitCounts {
  std::size_t train = 0, validation = 0, test = 0;
};

/// Full-scale split sizes per generator.
SplitCounts full_counts(GeneratorKind kind);

struct DatasetSplit {
  std::vector<TimeSeries> train, validation, test;
  std::uint64_t seed = 0;
};

/// Each example i of each part draws from its own substream
/// Rng(seed).split(part).split(i), so parts are disjoint and each example is
/// reproducible on its own.
DatasetSplit make_splits(const GeneratorSpec& spec, const SplitCounts& counts,
                         std::uint64_t seed);

TimeSeries generate_one(const GeneratorSpec& spec, Rng& rng);

}  // namespace vforecast
