/* Copyright 2026 The CSPM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <unistd.h>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cspm/dataset.hpp"
#include "cspm/metrics.hpp"
#include "cspm/train.hpp"

namespace {

using namespace cspm;

std::filesystem::path temp_dir(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("cspm_test_" + std::to_string(::getpid()) + "_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Metrics, PerfectPredictor) {
  const std::vector<std::uint32_t> labels{0, 1, 2, 0, 1, 2};
  const std::vector<int> preds{0, 1, 2, 0, 1, 2};
  const std::vector<float> snrs{0, 0, 0, 10, 10, 10};
  const std::vector<float> grid{0, 10};
  const auto r = compute_metrics(labels, preds, snrs, 3, grid);
  EXPECT_EQ(r.overall_accuracy, 1.0);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t p = 0; p < 3; ++p) EXPECT_EQ(r.confusion[t][p], t == p ? 2u : 0u);
}

TEST(Metrics, ConstantPredictorOnBalancedData) {
  std::vector<std::uint32_t> labels;
  std::vector<float> snrs;
  for (std::uint32_t c = 0; c < 4; ++c)
    for (int k = 0; k < 5; ++k) {
      labels.push_back(c);
      snrs.push_back(2.0f);
    }
  const std::vector<int> preds(labels.size(), 0);
  const std::vector<float> grid{2.0f};
  EXPECT_DOUBLE_EQ(compute_metrics(labels, preds, snrs, 4, grid).overall_accuracy, 0.25);
}

TEST(Metrics, HandTalliedConfusion) {
  // Enumerated fixture: true/pred pairs tallied by hand.
  const std::vector<std::uint32_t> labels{0, 0, 0, 1, 1, 1, 2, 2, 2, 2};
  const std::vector<int> preds{0, 1, 0, 1, 1, 2, 2, 0, 2, 2};
  const std::vector<float> snrs{-10, -10, 4, -10, 4, 4, -10, -10, 4, 4};
  const std::vector<float> grid{-10, 4};
  const auto r = compute_metrics(labels, preds, snrs, 3, grid);
  const std::vector<std::vector<std::size_t>> want{{2, 1, 0}, {0, 2, 1}, {1, 0, 3}};
  EXPECT_EQ(r.confusion, want);
  EXPECT_DOUBLE_EQ(r.overall_accuracy, 0.7);
  ASSERT_EQ(r.per_snr.size(), 2u);
  EXPECT_EQ(r.per_snr[0].total, 5u);
  EXPECT_EQ(r.per_snr[0].correct, 3u);  // (0,0) (1,1) (2,2) at -10
  EXPECT_EQ(r.per_snr[1].correct, 4u);
  EXPECT_DOUBLE_EQ(*r.low, 0.6);
  EXPECT_FALSE(r.mid.has_value());
  EXPECT_DOUBLE_EQ(*r.high, 0.8);
  for (std::size_t t = 0; t < 3; ++t) {
    std::size_t row = 0;
    for (auto v : r.confusion[t]) row += v;
    EXPECT_EQ(row, static_cast<std::size_t>(std::count(labels.begin(), labels.end(), t)));
  }
}

TEST(Metrics, SegmentsPartitionTheStandardGrid) {
  int low = 0, mid = 0, high = 0;
  for (int s = -20; s <= 20; s += 2) {
    switch (segment_of(s)) {
      case Segment::low: ++low; break;
      case Segment::mid: ++mid; break;
      case Segment::high: ++high; break;
      case Segment::none: ADD_FAILURE() << s; break;
    }
  }
  EXPECT_EQ(low, 6);
  EXPECT_EQ(mid, 5);
  EXPECT_EQ(high, 10);
  EXPECT_EQ(low + mid + high, 21);
}

TEST(Metrics, OverallEqualsMeanOfEqualCells) {
  std::mt19937_64 rng(1);
  std::vector<std::uint32_t> labels;
  std::vector<int> preds;
  std::vector<float> snrs;
  std::vector<float> grid;
  for (int s = -20; s <= 20; s += 2) grid.push_back(static_cast<float>(s));
  for (float s : grid)
    for (int k = 0; k < 30; ++k) {
      labels.push_back(static_cast<std::uint32_t>(rng() % 5));
      preds.push_back(static_cast<int>(rng() % 5));
      snrs.push_back(s);
    }
  const auto r = compute_metrics(labels, preds, snrs, 5, grid);
  double mean = 0.0;
  for (const auto& p : r.per_snr) mean += p.accuracy();
  EXPECT_NEAR(r.overall_accuracy, mean / static_cast<double>(r.per_snr.size()), 1e-12);
}

TEST(Metrics, RejectsOffGridAndMismatchedInputs) {
  const std::vector<std::uint32_t> labels{0};
  const std::vector<int> preds{0};
  const std::vector<float> snrs{3};
  const std::vector<float> grid{2};
  EXPECT_THROW(compute_metrics(labels, preds, snrs, 2, grid), ConfigError);
  const std::vector<int> two{0, 1};
  EXPECT_THROW(compute_metrics(labels, two, snrs, 2, grid), ShapeError);
}

TEST(Counting, LinearLayerConventions) {
  // One linear 3 -> 2: params m*n + n, FLOPs 2*m*n.
  MlpHead<double> head(3, 1, 2);
  std::size_t params = 0;
  for (auto* p : head.params())
    if (p->name.find("w2") != std::string::npos || p->name.find("b2") != std::string::npos) params += p->size();
  EXPECT_EQ(params, 1u * 2u + 2u);
  EXPECT_EQ(2u * 3u * 2u, 12u);
}

TEST(Counting, TinyConfigurationHandSum) {
  // T=16, S=2, K=5, lags {1,2,4,8}, Cm=4, km=3, H=3, A=4, Hm=5, C=3.
  const auto cfg = tiny_model_config();
  const std::size_t Cf = 3 * 2 * 5;
  const std::size_t params = 2 * 2 * 5            // free taps
                             + 2 * Cf             // BN
                             + 3 * Cf * 4 + 4     // mix
                             + 2 * (9 * 4 + 9 * 3 + 18)  // GRU
                             + 6 * 4 + 4 + 4      // attention
                             + 6 * 5 + 5 + 5 * 3 + 3;    // MLP
  EXPECT_EQ(closed_form_params(cfg), params);
  EXPECT_EQ(Model<double>(cfg).count_params(), params);

  const auto f = flop_breakdown(cfg);
  EXPECT_EQ(f.frontend, 8u * 2 * 5 * 16);
  EXPECT_EQ(f.phase_motion, 8u * 2 * 16 + 14u * 2 * ((16 - 1) + (16 - 2) + (16 - 4) + (16 - 8)));
  EXPECT_EQ(f.batch_norm, 4u * Cf * 16);
  EXPECT_EQ(f.mix, 2u * Cf * 4 * 3 * 16 + 4u * 16);
  EXPECT_EQ(f.gru, 2u * 16 * (6 * (4 * 3 + 3 * 3) + 26 * 3));
  EXPECT_EQ(f.attention, 2u * 6 * 4 * 16 + 4u * 16 + 16u * 16 + 8u * 16 + 16u + 64u + 2u * 6 * 16);
  EXPECT_EQ(f.mlp, 2u * 6 * 5 + 2u * 5 + 2u * 5 * 3 + 3u);
  EXPECT_EQ(count_flops(cfg), f.total());
}

TEST(Counting, VariantsDifferOnlyWhereExpected) {
  ModelConfig full;
  ModelConfig fixed = full;
  fixed.variant = Variant::fixed_morlet;
  ModelConfig pm = full;
  pm.variant = Variant::phase_motion_only;
  EXPECT_EQ(count_flops(full), count_flops(fixed));
  EXPECT_LT(count_flops(pm), count_flops(full));
  EXPECT_EQ(closed_form_params(full) - closed_form_params(fixed), 2u * 8 * 33);
}

Dataset eval_dataset() {
  GenerationConfig g;
  g.classes = {Modulation::bpsk, Modulation::gfsk};
  g.snr_grid = {-10.0, 0.0, 10.0};
  g.per_cell = 4;
  g.length = 16;
  return synthesize_dataset(g);
}

TEST(Evaluate, ClassMismatchIsConfigError) {
  auto cfg = tiny_model_config();  // 3 classes
  Model<float> model(cfg);
  EXPECT_THROW(evaluate(model, eval_dataset()), ConfigError);
}

TEST(Evaluate, ReportFilesRoundTrip) {
  auto cfg = tiny_model_config();
  cfg.classes = 2;
  Model<float> model(cfg);
  const auto ds = eval_dataset();
  const auto r = evaluate(model, ds);
  EXPECT_EQ(r.total, ds.size());
  EXPECT_EQ(r.params, model.count_params());
  EXPECT_EQ(r.flops, count_flops(cfg));
  EXPECT_EQ(r.per_snr.size(), 3u);

  const auto dir = temp_dir("report");
  const auto files = emit_report(r, dir);
  EXPECT_EQ(files.size(), 3u);
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  const auto back = report_from_json(j);
  EXPECT_EQ(back.overall_accuracy, r.overall_accuracy);
  EXPECT_EQ(back.low, r.low);
  EXPECT_EQ(back.mid, r.mid);
  EXPECT_EQ(back.high, r.high);
  EXPECT_EQ(back.confusion, r.confusion);
  EXPECT_EQ(back.class_names, r.class_names);
  EXPECT_EQ(back.params, r.params);
  EXPECT_EQ(back.flops, r.flops);
  ASSERT_EQ(back.per_snr.size(), r.per_snr.size());

  // per_snr.csv: one row per grid point; segment means recomputed from it.
  std::istringstream csv(slurp(dir / "per_snr.csv"));
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "snr_db,accuracy,correct,total");
  std::vector<SnrAccuracy> rows;
  while (std::getline(csv, line)) {
    double snr = 0, acc = 0;
    std::size_t correct = 0, total = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "%lf,%lf,%zu,%zu", &snr, &acc, &correct, &total), 4);
    rows.push_back({snr, correct, total});
    EXPECT_NEAR(acc, static_cast<double>(correct) / static_cast<double>(total), 1e-15);
  }
  EXPECT_EQ(rows.size(), ds.snr_grid.size());
  EXPECT_NEAR(*segment_mean(rows, Segment::low), *r.low, 1e-9);
  EXPECT_NEAR(*segment_mean(rows, Segment::mid), *r.mid, 1e-9);
  EXPECT_NEAR(*segment_mean(rows, Segment::high), *r.high, 1e-9);

  const auto confusion = slurp(dir / "confusion.csv");
  EXPECT_EQ(confusion.substr(0, confusion.find('\n')), "true\\pred,BPSK,GFSK");
  std::filesystem::remove_all(dir);
}

TEST(Evaluate, ParameterCountSurvivesSaveLoad) {
  for (auto v : kAllVariants) {
    Model<float> model(tiny_model_config(v));
    EXPECT_EQ(decode_checkpoint<float>(encode_checkpoint(model)).count_params(), model.count_params());
  }
}

}  // namespace
