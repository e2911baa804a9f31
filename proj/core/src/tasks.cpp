#include "ssmlab/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include <json.hpp>

#include "ssmlab/error.hpp"
#include "ssmlab/rng.hpp"

namespace ssmlab {

namespace {

using nlohmann::json;

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_predictions(const Dataset& ds, const std::vector<Mat>& predictions) {
  if (predictions.size() != ds.size())
    throw Error(Errc::DimensionMismatch, "one prediction matrix per sequence is required");
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const Mat& tgt = ds.sequences[s].targets;
    if (predictions[s].rows() != tgt.rows() || predictions[s].cols() != tgt.cols())
      throw Error(Errc::DimensionMismatch, "prediction shape differs from targets");
  }
}

json mat_json(const Mat& m) { return json(m.to_rows()); }

Mat mat_from_json(const json& j) { return Mat::from_rows(j.get<std::vector<std::vector<double>>>()); }

}  // namespace

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Recall: return "recall";
    case TaskKind::SelectiveCopy: return "selective";
    case TaskKind::ForecastSinusoid: return "forecast_sinusoid";
    case TaskKind::ForecastAr2: return "forecast_ar2";
  }
  return "unknown";
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "recall") return TaskKind::Recall;
  if (s == "selective") return TaskKind::SelectiveCopy;
  if (s == "forecast" || s == "forecast_sinusoid") return TaskKind::ForecastSinusoid;
  if (s == "forecast_ar2") return TaskKind::ForecastAr2;
  throw Error(Errc::InvalidConfig, "unknown task '" + s + "'");
}

std::size_t Dataset::length() const noexcept {
  return sequences.empty() ? 0 : sequences.front().inputs.rows();
}
std::size_t Dataset::input_dim() const noexcept {
  return sequences.empty() ? 0 : sequences.front().inputs.cols();
}
std::size_t Dataset::output_dim() const noexcept {
  return sequences.empty() ? 0 : sequences.front().targets.cols();
}

Dataset gen_recall(std::size_t alphabet, std::size_t delay, std::size_t t_len, std::size_t n_seq,
                   std::uint64_t seed) {
  if (alphabet < 2) throw Error(Errc::InvalidConfig, "alphabet must be at least 2");
  if (t_len <= delay) throw Error(Errc::InvalidConfig, "t_len must exceed delay");
  Dataset ds;
  ds.kind = TaskKind::Recall;
  ds.alphabet_size = alphabet;
  ds.delay = delay;
  ds.seed = seed;
  ds.sequences.reserve(n_seq);
  const std::size_t m = alphabet + 2;
  for (std::size_t s = 0; s < n_seq; ++s) {
    CounterRng rng(seed, Stream::Dataset, s);
    Sequence seq{Mat(t_len, m), Mat(t_len, alphabet), Vec(t_len, 0.0)};
    const std::size_t cue = rng.below(alphabet);
    seq.inputs(0, cue) = 1.0;
    seq.inputs(0, alphabet) = 1.0;
    for (std::size_t t = 1; t < t_len; ++t) seq.inputs(t, rng.below(alphabet)) = 1.0;
    seq.inputs(delay, alphabet + 1) = 1.0;
    seq.targets(delay, cue) = 1.0;
    seq.mask[delay] = 1.0;
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

Dataset gen_selective_copy(std::size_t t_len, std::size_t n_marked, std::size_t alphabet, std::size_t n_seq,
                           std::uint64_t seed) {
  if (alphabet < 2) throw Error(Errc::InvalidConfig, "alphabet must be at least 2");
  if (n_marked == 0 || n_marked > t_len) throw Error(Errc::InvalidConfig, "n_marked must lie in [1, t_len]");
  Dataset ds;
  ds.kind = TaskKind::SelectiveCopy;
  ds.alphabet_size = alphabet;
  ds.delay = t_len;
  ds.seed = seed;
  const std::size_t total = t_len + n_marked;
  const std::size_t m = alphabet + 2;
  for (std::size_t s = 0; s < n_seq; ++s) {
    CounterRng rng(seed, Stream::Dataset, s);
    Sequence seq{Mat(total, m), Mat(total, alphabet), Vec(total, 0.0)};
    std::vector<std::size_t> tokens(t_len);
    for (std::size_t t = 0; t < t_len; ++t) {
      tokens[t] = rng.below(alphabet);
      seq.inputs(t, tokens[t]) = 1.0;
    }
    std::vector<std::size_t> pos(t_len);
    for (std::size_t t = 0; t < t_len; ++t) pos[t] = t;
    for (std::size_t i = 0; i < n_marked; ++i) std::swap(pos[i], pos[i + rng.below(t_len - i)]);
    pos.resize(n_marked);
    std::sort(pos.begin(), pos.end());
    for (std::size_t i = 0; i < n_marked; ++i) {
      seq.inputs(pos[i], alphabet) = 1.0;
      const std::size_t out = t_len + i;
      seq.inputs(out, alphabet + 1) = 1.0;
      seq.targets(out, tokens[pos[i]]) = 1.0;
      seq.mask[out] = 1.0;
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

Dataset gen_forecast(ForecastKind kind, double noise_sd, std::size_t t_len, std::size_t n_seq, std::uint64_t seed) {
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw Error(Errc::InvalidConfig, "noise_sd must be >= 0");
  if (t_len == 0) throw Error(Errc::InvalidConfig, "t_len must be positive");
  Dataset ds;
  ds.kind = kind == ForecastKind::Sinusoid ? TaskKind::ForecastSinusoid : TaskKind::ForecastAr2;
  ds.seed = seed;
  constexpr std::size_t kBurnIn = 100;
  for (std::size_t s = 0; s < n_seq; ++s) {
    CounterRng rng(seed, Stream::Dataset, s);
    Vec series(t_len + 1);
    if (kind == ForecastKind::Sinusoid) {
      const double ph1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double ph2 = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (std::size_t t = 0; t <= t_len; ++t) {
        const double tt = static_cast<double>(t);
        series[t] = kSineAmp1 * std::sin(kSineFreq1 * tt + ph1) + kSineAmp2 * std::sin(kSineFreq2 * tt + ph2) +
                    noise_sd * rng.normal();
      }
    } else {
      double x1 = 0.0, x2 = 0.0;
      for (std::size_t t = 0; t < kBurnIn + t_len + 1; ++t) {
        const double x = kAr2Phi1 * x1 + kAr2Phi2 * x2 + noise_sd * rng.normal();
        x2 = x1;
        x1 = x;
        if (t >= kBurnIn) series[t - kBurnIn] = x;
      }
    }
    Sequence seq{Mat(t_len, 1), Mat(t_len, 1), Vec(t_len, 1.0)};
    for (std::size_t t = 0; t < t_len; ++t) {
      seq.inputs(t, 0) = series[t];
      seq.targets(t, 0) = series[t + 1];
    }
    ds.sequences.push_back(std::move(seq));
  }
  return ds;
}

double sinusoid_persistence_mse(double noise_sd) {
  return kSineAmp1 * kSineAmp1 * (1.0 - std::cos(kSineFreq1)) + kSineAmp2 * kSineAmp2 * (1.0 - std::cos(kSineFreq2)) +
         2.0 * noise_sd * noise_sd;
}

double persistence_mse(const Dataset& ds) {
  std::vector<Mat> preds;
  preds.reserve(ds.size());
  for (const Sequence& seq : ds.sequences) {
    if (seq.inputs.cols() != seq.targets.cols())
      throw Error(Errc::DimensionMismatch, "persistence needs matching input and target channels");
    preds.push_back(seq.inputs);
  }
  return masked_mse(ds, preds);
}

double argmax_accuracy(const Dataset& ds, const std::vector<Mat>& predictions) {
  check_predictions(ds, predictions);
  std::size_t hits = 0, total = 0;
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const Sequence& seq = ds.sequences[s];
    for (std::size_t t = 0; t < seq.mask.size(); ++t) {
      if (seq.mask[t] == 0.0) continue;
      ++total;
      if (argmax(predictions[s].row(t)) == argmax(seq.targets.row(t))) ++hits;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

double masked_mse(const Dataset& ds, const std::vector<Mat>& predictions) {
  check_predictions(ds, predictions);
  double sum = 0.0, weight = 0.0;
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const Sequence& seq = ds.sequences[s];
    for (std::size_t t = 0; t < seq.mask.size(); ++t) {
      if (seq.mask[t] == 0.0) continue;
      const auto y = predictions[s].row(t);
      const auto z = seq.targets.row(t);
      double e = 0.0;
      for (std::size_t k = 0; k < y.size(); ++k) e += (y[k] - z[k]) * (y[k] - z[k]);
      sum += seq.mask[t] * e;
      weight += seq.mask[t];
    }
  }
  return weight == 0.0 ? 0.0 : sum / weight;
}

double forecast_accuracy(const Dataset& ds, const std::vector<Mat>& predictions) {
  const double mse = masked_mse(ds, predictions);
  double sum = 0.0, sq = 0.0, n = 0.0;
  for (const Sequence& seq : ds.sequences)
    for (std::size_t t = 0; t < seq.mask.size(); ++t) {
      if (seq.mask[t] == 0.0) continue;
      for (double v : seq.targets.row(t)) {
        sum += v;
        sq += v * v;
        n += 1.0;
      }
    }
  if (n == 0.0) return 0.0;
  const double channels = static_cast<double>(ds.output_dim());
  const double var = (sq / n - (sum / n) * (sum / n)) * channels;
  if (var <= 0.0) return mse == 0.0 ? 1.0 : 0.0;
  return std::clamp(1.0 - mse / var, 0.0, 1.0);
}

Mat confusion_counts(const Dataset& ds, const std::vector<Mat>& predictions) {
  check_predictions(ds, predictions);
  const std::size_t k = ds.output_dim();
  Mat counts(k, k);
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const Sequence& seq = ds.sequences[s];
    for (std::size_t t = 0; t < seq.mask.size(); ++t)
      if (seq.mask[t] != 0.0) counts(argmax(seq.targets.row(t)), argmax(predictions[s].row(t))) += 1.0;
  }
  return counts;
}

void write_jsonl(std::ostream& os, const Dataset& ds) {
  json meta = {{"kind", to_string(ds.kind)},
               {"alphabet_size", ds.alphabet_size},
               {"delay", ds.delay},
               {"seed", ds.seed},
               {"count", ds.size()}};
  os << meta.dump() << '\n';
  for (const Sequence& seq : ds.sequences) {
    json line = {{"inputs", mat_json(seq.inputs)}, {"targets", mat_json(seq.targets)}, {"mask", seq.mask}};
    os << line.dump() << '\n';
  }
}

Dataset read_jsonl(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw Error(Errc::InvalidConfig, "dataset stream is empty");
  Dataset ds;
  try {
    const json meta = json::parse(line);
    ds.kind = task_kind_from_string(meta.at("kind").get<std::string>());
    ds.alphabet_size = meta.at("alphabet_size").get<std::size_t>();
    ds.delay = meta.at("delay").get<std::size_t>();
    ds.seed = meta.at("seed").get<std::uint64_t>();
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      ds.sequences.push_back(
          {mat_from_json(j.at("inputs")), mat_from_json(j.at("targets")), j.at("mask").get<Vec>()});
    }
    if (ds.sequences.size() != meta.at("count").get<std::size_t>())
      throw Error(Errc::InvalidConfig, "dataset count does not match the number of lines");
  } catch (const json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("malformed dataset: ") + e.what());
  }
  return ds;
}

}  // namespace ssmlab
