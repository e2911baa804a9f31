#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "ssmlab/error.hpp"
#include "ssmlab/tasks.hpp"
#include "ssmlab/training.hpp"

namespace ssmlab {
namespace {

std::vector<Mat> oracle_targets(const Dataset& ds) {
  std::vector<Mat> out;
  for (const Sequence& s : ds.sequences) out.push_back(s.targets);
  return out;
}

TEST(Recall, Layout) {
  const Dataset ds = gen_recall(8, 5, 12, 20, 3);
  ASSERT_EQ(ds.size(), 20u);
  EXPECT_EQ(ds.length(), 12u);
  EXPECT_EQ(ds.input_dim(), 10u);
  EXPECT_EQ(ds.output_dim(), 8u);
  EXPECT_TRUE(ds.discrete());
  for (const Sequence& s : ds.sequences) {
    double mask_sum = 0.0;
    for (double v : s.mask) mask_sum += v;
    EXPECT_EQ(mask_sum, 1.0);
    EXPECT_EQ(s.mask[5], 1.0);
    EXPECT_EQ(s.inputs(0, 8), 1.0);
    EXPECT_EQ(s.inputs(5, 9), 1.0);
    std::size_t cue = 0;
    for (std::size_t k = 0; k < 8; ++k)
      if (s.inputs(0, k) == 1.0) cue = k;
    EXPECT_EQ(s.targets(5, cue), 1.0);
    double row_sum = 0.0;
    for (std::size_t k = 0; k < 8; ++k) row_sum += s.targets(5, k);
    EXPECT_EQ(row_sum, 1.0);
  }
}

TEST(Recall, InvalidConfig) {
  EXPECT_THROW(gen_recall(8, 12, 12, 1, 0), Error);
  EXPECT_THROW(gen_recall(1, 2, 12, 1, 0), Error);
}

TEST(Recall, OraclePredictorIsPerfect) {
  const Dataset ds = gen_recall(8, 10, 16, 100, 4);
  EXPECT_EQ(argmax_accuracy(ds, oracle_targets(ds)), 1.0);
}

TEST(Recall, DeterministicAndSeedSensitive) {
  const Dataset a = gen_recall(6, 4, 9, 10, 1), b = gen_recall(6, 4, 9, 10, 1), c = gen_recall(6, 4, 9, 10, 2);
  for (std::size_t s = 0; s < 10; ++s) EXPECT_EQ(a.sequences[s].inputs, b.sequences[s].inputs);
  bool differs = false;
  for (std::size_t s = 0; s < 10; ++s) differs |= a.sequences[s].inputs != c.sequences[s].inputs;
  EXPECT_TRUE(differs);
}

TEST(Recall, UntrainedModelIsNearChance) {
  const std::size_t k = 8, n = 4000;
  const Dataset ds = gen_recall(k, 6, 10, n, 9);
  const Model model = init_model(InitOptions{16, ds.input_dim(), ds.output_dim(), true, UpdateForm::Retentive,
                                             Activation::Sigmoid, GateMode::InputOnly, 1e-4, 3});
  const double acc = argmax_accuracy(ds, predict(model, ds.sequences));
  const double p = 1.0 / double(k);
  EXPECT_NEAR(acc, p, 3.0 * std::sqrt(p * (1 - p) / double(n)) + 0.05);
}

TEST(Recall, ZeroDelayIsLearnable) {
  const Dataset ds = gen_recall(4, 0, 4, 256, 2);
  Model model = init_model(InitOptions{8, ds.input_dim(), ds.output_dim(), true, UpdateForm::Retentive,
                                       Activation::Sigmoid, GateMode::InputOnly, 1e-4, 1});
  TrainOptions opt;
  opt.epochs = 60;
  opt.lr = 0.2;
  sgd_train(model, ds, opt, LossConfig{});
  EXPECT_GE(argmax_accuracy(ds, predict(model, ds.sequences)), 0.99);
}

TEST(Recall, DistractorsDoNotDetermineTargets) {
  // Swapping every distractor leaves the target fixed.
  const Dataset a = gen_recall(5, 4, 10, 50, 6);
  for (const Sequence& s : a.sequences) {
    Sequence other = s;
    for (std::size_t t = 1; t < 10; ++t) {
      for (std::size_t k = 0; k < 5; ++k) other.inputs(t, k) = 0.0;
      other.inputs(t, (t * 3) % 5) = 1.0;
    }
    std::size_t cue = 0;
    for (std::size_t k = 0; k < 5; ++k)
      if (other.inputs(0, k) == 1.0) cue = k;
    EXPECT_EQ(s.targets(4, cue), 1.0);
  }
}

TEST(SelectiveCopy, Layout) {
  const Dataset ds = gen_selective_copy(10, 3, 6, 30, 5);
  EXPECT_EQ(ds.length(), 13u);
  EXPECT_EQ(ds.input_dim(), 8u);
  for (const Sequence& s : ds.sequences) {
    std::vector<std::size_t> flagged;
    for (std::size_t t = 0; t < 10; ++t)
      if (s.inputs(t, 6) == 1.0) flagged.push_back(t);
    ASSERT_EQ(flagged.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(s.mask[10 + i], 1.0);
      EXPECT_EQ(s.inputs(10 + i, 7), 1.0);
      for (std::size_t k = 0; k < 6; ++k) EXPECT_EQ(s.targets(10 + i, k), s.inputs(flagged[i], k));
    }
  }
}

TEST(SelectiveCopy, AllMarkedIsFullCopy) {
  const Dataset ds = gen_selective_copy(5, 5, 4, 10, 1);
  for (const Sequence& s : ds.sequences)
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_EQ(s.inputs(i, 4), 1.0);
      for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(s.targets(5 + i, k), s.inputs(i, k));
    }
  EXPECT_THROW(gen_selective_copy(5, 6, 4, 1, 0), Error);
}

TEST(SelectiveCopy, ConstantGuessIsAtChance) {
  const std::size_t k = 5;
  const Dataset ds = gen_selective_copy(8, 3, k, 3000, 2);
  std::vector<Mat> preds;
  for (const Sequence& s : ds.sequences) {
    Mat p(s.targets.rows(), k);
    for (std::size_t t = 0; t < p.rows(); ++t) p(t, 0) = 1.0;
    preds.push_back(p);
  }
  const double acc = argmax_accuracy(ds, preds), chance = 1.0 / double(k);
  EXPECT_NEAR(acc, chance, 3.0 * std::sqrt(chance * (1 - chance) / 9000.0));
}

TEST(SelectiveCopy, TrainedGatesFavourFlaggedSteps) {
  std::vector<double> diffs;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const std::size_t k = 4, t_len = 8;
    const Dataset ds = gen_selective_copy(t_len, 2, k, 256, 10 + seed);
    Model model = init_model(InitOptions{16, ds.input_dim(), ds.output_dim(), true, UpdateForm::Retentive,
                                         Activation::Sigmoid, GateMode::InputOnly, 1e-4, seed});
    TrainOptions opt;
    opt.epochs = 40;
    opt.lr = 0.2;
    opt.seed = seed;
    sgd_train(model, ds, opt, LossConfig{0.05});
    double flagged = 0.0, other = 0.0;
    std::size_t nf = 0, no = 0;
    for (const Sequence& s : ds.sequences) {
      const Trajectory tr = simulate(model, s.inputs, Vec(16), 0, false);
      for (std::size_t t = 0; t < t_len; ++t) {
        const double e = effective_dim(tr.gates.row(t));
        if (s.inputs(t, k) == 1.0) {
          flagged += e;
          ++nf;
        } else {
          other += e;
          ++no;
        }
      }
    }
    diffs.push_back(flagged / double(nf) - other / double(no));
  }
  std::sort(diffs.begin(), diffs.end());
  EXPECT_GT(diffs[1], 0.0);
}

TEST(Forecast, NoiselessSinusoidOracle) {
  const Dataset ds = gen_forecast(ForecastKind::Sinusoid, 0.0, 40, 10, 1);
  EXPECT_EQ(masked_mse(ds, oracle_targets(ds)), 0.0);
  EXPECT_EQ(forecast_accuracy(ds, oracle_targets(ds)), 1.0);
  for (const Sequence& s : ds.sequences)
    for (std::size_t t = 0; t + 1 < 40; ++t) EXPECT_EQ(s.targets(t, 0), s.inputs(t + 1, 0));
}

TEST(Forecast, Ar2BestPredictorHitsInnovationFloor) {
  const double sd = 0.3;
  Dataset ds = gen_forecast(ForecastKind::Ar2, sd, 200, 100, 2);
  std::vector<Mat> preds;
  for (Sequence& s : ds.sequences) {
    Mat p(200, 1);
    s.mask[0] = 0.0;
    for (std::size_t t = 1; t < 200; ++t) p(t, 0) = kAr2Phi1 * s.inputs(t, 0) + kAr2Phi2 * s.inputs(t - 1, 0);
    preds.push_back(p);
  }
  const double n = 199.0 * 100.0;
  EXPECT_NEAR(masked_mse(ds, preds), sd * sd, 5.0 * sd * sd * std::sqrt(2.0 / n));
}

TEST(Forecast, SinusoidPersistenceBaseline) {
  const double sd = 0.1;
  const Dataset ds = gen_forecast(ForecastKind::Sinusoid, sd, 400, 200, 3);
  const double closed = sinusoid_persistence_mse(sd);
  EXPECT_NEAR(persistence_mse(ds), closed, 0.02 * closed);
}

TEST(Forecast, InvalidConfig) {
  EXPECT_THROW(gen_forecast(ForecastKind::Ar2, -1.0, 10, 1, 0), Error);
}

TEST(Metrics, AccuracyInUnitInterval) {
  const Dataset ds = gen_forecast(ForecastKind::Ar2, 0.5, 30, 5, 4);
  std::vector<Mat> bad;
  for (const Sequence& s : ds.sequences) bad.push_back(scale(s.targets, -10.0));
  const double acc = forecast_accuracy(ds, bad);
  EXPECT_GE(acc, 0.0);
  EXPECT_LE(acc, 1.0);
}

TEST(Metrics, ConfusionCounts) {
  const Dataset ds = gen_recall(4, 2, 5, 40, 7);
  const Mat c = confusion_counts(ds, oracle_targets(ds));
  double diag = 0.0, total = 0.0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      total += c(i, j);
      if (i == j) diag += c(i, j);
    }
  EXPECT_EQ(total, 40.0);
  EXPECT_EQ(diag, 40.0);
}

TEST(Jsonl, RoundTrip) {
  const Dataset ds = gen_selective_copy(6, 2, 3, 7, 8);
  std::stringstream ss;
  write_jsonl(ss, ds);
  const Dataset back = read_jsonl(ss);
  ASSERT_EQ(back.size(), ds.size());
  EXPECT_EQ(back.kind, ds.kind);
  EXPECT_EQ(back.alphabet_size, 3u);
  for (std::size_t s = 0; s < ds.size(); ++s) {
    EXPECT_EQ(back.sequences[s].inputs, ds.sequences[s].inputs);
    EXPECT_EQ(back.sequences[s].targets, ds.sequences[s].targets);
    EXPECT_EQ(back.sequences[s].mask, ds.sequences[s].mask);
  }
}

TEST(Jsonl, Malformed) {
  std::stringstream ss("{\"kind\":\"recall\"}\nnot json\n");
  EXPECT_THROW(read_jsonl(ss), Error);
}

TEST(TaskKind, StringRoundTrip) {
  for (TaskKind k : {TaskKind::Recall, TaskKind::SelectiveCopy, TaskKind::ForecastSinusoid, TaskKind::ForecastAr2})
    EXPECT_EQ(task_kind_from_string(to_string(k)), k);
  EXPECT_EQ(task_kind_from_string("selective"), TaskKind::SelectiveCopy);
  EXPECT_THROW(task_kind_from_string("speech"), Error);
}

}  // namespace
}  // namespace ssmlab
