#include "vforecast/seriesgen.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "vforecast/error.hpp"

namespace vforecast {

void validate_series(const TimeSeries& s, Eigen::Index min_length) {
  if (s.size() < min_length) {
    throw DataError("series has " + std::to_string(s.size()) +
                    " samples; at least " + std::to_string(min_length) +
                    " required");
  }
  if (!s.values.allFinite()) throw DataError("series contains non-finite values");
}

void validate(const HarmonicParams& p) {
  if (!(p.t1 > 0.0) || !(p.t2 > 0.0)) {
    throw ConfigError("harmonic periods must be positive");
  }
  if (p.length < 4) throw ConfigError("harmonic length must be >= 4");
}

void validate(const OUParams& p) {
  if (!(p.gamma > 0.0)) throw ConfigError("OU gamma must be positive");
  if (!(p.sigma >= 0.0)) throw ConfigError("OU sigma must be non-negative");
  if (!(p.step_ns > 0.0)) throw ConfigError("OU step must be positive");
  if (p.n < 1) throw ConfigError("OU sample count must be positive");
}

TimeSeries gen_harmonic(const HarmonicParams& p) {
  validate(p);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  TimeSeries s;
  s.values.resize(p.length);
  for (int i = 0; i < p.length; ++i) {
    const double t = i + 1;
    s.values[i] = (p.a1 + p.b1 * t) * std::sin(kTwoPi * t / p.t1 + p.phi1) +
                  (p.a2 + p.b2 * t) * std::sin(kTwoPi * t / p.t2 + p.phi2);
  }
  s.origin = "harmonic";
  return s;
}

namespace {

double positive_normal(Rng& rng, double mean, double stddev) {
  double x;
  do {
    x = rng.normal(mean, stddev);
  } while (!(x > 0.0));
  return x;
}

}  // namespace

HarmonicParams sample_harmonic_params(Rng& rng, int length) {
  if (length < 4) throw ConfigError("harmonic length must be >= 4");
  const double T = length;
  HarmonicParams p;
  p.length = length;
  p.a1 = rng.normal(1.0, 0.5);
  p.a2 = rng.normal(1.0, 0.5);
  p.b1 = rng.uniform(-1.0 / T, 1.0 / T);
  p.b2 = rng.uniform(-1.0 / T, 1.0 / T);
  p.t1 = positive_normal(rng, T / 5.0, T / 10.0);
  p.t2 = positive_normal(rng, T, T / 2.0);
  p.phi1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  p.phi2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return p;
}

TimeSeries gen_ou(const OUParams& p, Rng& rng) {
  validate(p);
  const double decay = std::exp(-p.gamma * p.step_ns);
  // 1 - e^{-2x} without cancellation for small x.
  const double one_minus = -std::expm1(-2.0 * p.gamma * p.step_ns);
  const double step_sd = std::sqrt(p.sigma * p.sigma / (2.0 * p.gamma) * one_minus);
  TimeSeries s;
  s.values.resize(p.n);
  double prev = p.s0;
  for (int i = 0; i < p.n; ++i) {
    const double mean = p.mu + (prev - p.mu) * decay;
    prev = step_sd > 0.0 ? rng.normal(mean, step_sd) : mean;
    s.values[i] = prev;
  }
  s.dt = p.step_ns;
  s.origin = "ou";
  return s;
}

OUParams sample_ou_params(Rng& rng, int n, double mu) {
  OUParams p;
  p.mu = mu;
  p.s0 = mu;
  p.n = n;
  p.gamma = positive_normal(rng, 8e-8, 4e-8);
  p.sigma = positive_normal(rng, 1e-2, 5e-3);
  return p;
}

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t row) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t end = line.find(',', pos);
    if (end == std::string::npos) end = line.size();
    std::string_view cell(line.data() + pos, end - pos);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() ||
        !std::isfinite(v)) {
      throw DataError("row " + std::to_string(row) + ": non-numeric cell '" +
                      std::string(cell) + "'");
    }
    out.push_back(v);
    pos = end + 1;
  }
  return out;
}

}  // namespace

std::vector<TimeSeries> load_series_csv(const std::filesystem::path& path,
                                        std::size_t segment_len, std::size_t stride) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  if (stride == 0) stride = segment_len;
  std::vector<TimeSeries> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto values = parse_row(line, row);
    const std::size_t seg = segment_len == 0 ? values.size() : segment_len;
    if (values.size() < seg) {
      throw DataError("row " + std::to_string(row) + ": " + std::to_string(values.size()) +
                      " values, shorter than segment length " + std::to_string(seg));
    }
    const std::size_t step = segment_len == 0 ? seg : stride;
    for (std::size_t off = 0; off + seg <= values.size(); off += step) {
      TimeSeries s;
      s.values = Eigen::Map<const Eigen::VectorXd>(values.data() + off,
                                                   static_cast<Eigen::Index>(seg));
      s.origin = path.filename().string() + ":" + std::to_string(row) + "@" +
                 std::to_string(off);
      out.push_back(std::move(s));
    }
  }
  return out;
}

void save_series_csv(const std::filesystem::path& path,
                     const std::vector<TimeSeries>& series) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[64];
  for (const auto& s : series) {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), s.values[i]);
      if (i) out.put(',');
      out.write(buf, ptr - buf);
    }
    out.put('\n');
  }
}

TimeSeries standardize(const TimeSeries& s) {
  if (s.size() == 0) throw DataError("cannot standardize an empty series");
  const double mean = s.values.mean();
  const double var = (s.values.array() - mean).square().mean();
  if (!(var > 0.0)) throw DataError("cannot standardize a zero-variance series");
  TimeSeries out = s;
  out.values = (s.values.array() - mean) / std::sqrt(var);
  return out;
}

std::string to_string(GeneratorKind kind) {
  return kind == GeneratorKind::kHarmonic ? "harmonic" : "ou";
}

GeneratorKind generator_from_string(const std::string& name) {
  if (name == "harmonic") return GeneratorKind::kHarmonic;
  if (name == "ou") return GeneratorKind::kOU;
  throw ConfigError("unknown generator '" + name + "' (expected harmonic|ou)");
}

SplitCounts full_counts(GeneratorKind kind) {
  if (kind == GeneratorKind::kHarmonic) return {40500, 4500, 15000};
  return {45000, 5000, 15000};
}

TimeSeries generate_one(const GeneratorSpec& spec, Rng& rng) {
  if (spec.kind == GeneratorKind::kHarmonic) {
    return gen_harmonic(sample_harmonic_params(rng, spec.length));
  }
  const OUParams p = sample_ou_params(rng, spec.length, spec.ou_mu);
  return gen_ou(p, rng);
}

DatasetSplit make_splits(const GeneratorSpec& spec, const SplitCounts& counts,
                         std::uint64_t seed) {
  if (counts.train == 0 || counts.validation == 0 || counts.test == 0) {
    throw ConfigError("split counts must be positive");
  }
  const Rng root(seed);
  auto build = [&](const char* part, std::size_t n) {
    const Rng stream = root.split(part);
    std::vector<TimeSeries> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      Rng r = stream.split(i);
      out.push_back(generate_one(spec, r));
    }
    return out;
  };
  DatasetSplit split;
  split.seed = seed;
  split.train = build("train", counts.train);
  split.validation = build("validation", counts.validation);
  split.test = build("test", counts.test);
  return split;
}

}  // namespace vforecast
