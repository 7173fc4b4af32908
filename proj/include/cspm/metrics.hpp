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

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cspm/container.hpp"
#include "cspm/dataset.hpp"
#include "cspm/errors.hpp"
#include "cspm/model.hpp"
#include "json.hpp"

namespace cspm {

inline constexpr int kReportSchemaVersion = 1;

// SNR segments: low <= -10 dB, mid -8..0 dB, high >= 2 dB. Points that fall
// in a gap (e.g. -9 dB or 1 dB) belong to none.
enum class Segment { low, mid, high, none };

inline Segment segment_of(double snr_db) {
  if (snr_db <= -10.0) return Segment::low;
  if (snr_db >= -8.0 && snr_db <= 0.0) return Segment::mid;
  if (snr_db >= 2.0) return Segment::high;
  return Segment::none;
}

struct SnrAccuracy {
  double snr_db = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;

  double accuracy() const {
    return total ? static_cast<double>(correct) / static_cast<double>(total) : std::numeric_limits<double>::quiet_NaN();
  }
};

struct MetricsReport {
  double overall_accuracy = 0.0;
  std::optional<double> low, mid, high;  // empty when the segment has no SNR points
  std::vector<SnrAccuracy> per_snr;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<std::string> class_names;
  std::size_t params = 0;
  std::size_t flops = 0;
  std::size_t total = 0;
};

// Unweighted mean of per-point accuracies inside a segment.
inline std::optional<double> segment_mean(const std::vector<SnrAccuracy>& per_snr, Segment seg) {
  double sum = 0.0;
  int n = 0;
  for (const auto& p : per_snr) {
    if (p.total == 0 || segment_of(p.snr_db) != seg) continue;
    sum += p.accuracy();
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

// `grid` lists the SNR points to report (one row each, even when empty).
inline MetricsReport compute_metrics(std::span<const std::uint32_t> labels, std::span<const int> predictions,
                                     std::span<const float> snrs, std::size_t num_classes,
                                     std::span<const float> grid) {
  if (labels.size() != predictions.size() || labels.size() != snrs.size()) {
    throw ShapeError("labels, predictions and SNRs must have equal lengths");
  }
  MetricsReport r;
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (float s : grid) r.per_snr.push_back({static_cast<double>(s), 0, 0});
  std::size_t correct = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= num_classes || predictions[k] < 0 || static_cast<std::size_t>(predictions[k]) >= num_classes) {
      throw ConfigError("label or prediction outside the class range");
    }
    ++r.confusion[labels[k]][static_cast<std::size_t>(predictions[k])];
    const bool hit = static_cast<int>(labels[k]) == predictions[k];
    correct += hit;
    SnrAccuracy* cell = nullptr;
    for (auto& p : r.per_snr) {
      if (static_cast<float>(p.snr_db) == snrs[k]) cell = &p;
    }
    if (!cell) throw ConfigError("example SNR " + std::to_string(snrs[k]) + " is not on the reporting grid");
    ++cell->total;
    cell->correct += hit;
  }
  r.total = labels.size();
  r.overall_accuracy =
      labels.empty() ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(correct) / labels.size();
  r.low = segment_mean(r.per_snr, Segment::low);
  r.mid = segment_mean(r.per_snr, Segment::mid);
  r.high = segment_mean(r.per_snr, Segment::high);
  return r;
}

// Analytic FLOPs for one 1 x 2 x T input. One multiply-accumulate is 2 FLOPs,
// elementwise ops 1, and tanh/sigmoid/exp/log/sqrt-with-log 4 each. The
// term-by-term breakdown lives in docs/formula_sheet.md.
struct FlopBreakdown {
  std::size_t frontend = 0, phase_motion = 0, batch_norm = 0, mix = 0, gru = 0, attention = 0, mlp = 0;
  std::size_t total() const { return frontend + phase_motion + batch_norm + mix + gru + attention + mlp; }
};

inline FlopBreakdown flop_breakdown(const ModelConfig& c) {
  c.validate();
  using U = std::size_t;
  const U T = static_cast<U>(c.length), S = static_cast<U>(c.effective_subbands()), K = static_cast<U>(c.kernel);
  const U Cf = static_cast<U>(c.feature_channels()), Cm = static_cast<U>(c.mix_channels),
          km = static_cast<U>(c.mix_kernel);
  const U H = static_cast<U>(c.hidden), A = static_cast<U>(c.attention), Hm = static_cast<U>(c.mlp_hidden),
          C = static_cast<U>(c.classes);
  FlopBreakdown f;
  // Complex "same" correlation: 4 real MACs per tap.
  if (c.variant != Variant::phase_motion_only) f.frontend = 8 * S * K * T;
  // Base triplet: |z| (3) + log1p (4) + 1 pass-through add. Products: complex
  // multiply (6) + log-magnitude (8) for every n >= lag.
  f.phase_motion = 8 * S * T;
  for (int lag : c.lags) f.phase_motion += 14 * S * (T - static_cast<U>(lag));
  f.batch_norm = 4 * Cf * T;
  f.mix = 2 * Cf * Cm * km * T + Cm * T;
  // Per step and direction: 3H-wide input and hidden GEMMs, two bias adds,
  // two sigmoids and one tanh over H, reset product, and the blend (4 ops).
  f.gru = 2 * T * (6 * (Cm * H + H * H) + 26 * H);
  const U D = 2 * H;
  f.attention = 2 * D * A * T + A * T + 4 * A * T + 2 * A * T + T + 4 * T + 2 * D * T;
  f.mlp = 2 * D * Hm + 2 * Hm + 2 * Hm * C + C;
  return f;
}

inline std::size_t count_flops(const ModelConfig& c) { return flop_breakdown(c).total(); }

// Closed-form trainable-parameter count; must agree with Model::count_params.
inline std::size_t closed_form_params(const ModelConfig& c) {
  c.validate();
  using U = std::size_t;
  const U S = static_cast<U>(c.subbands), K = static_cast<U>(c.kernel), Cf = static_cast<U>(c.feature_channels());
  const U Cm = static_cast<U>(c.mix_channels), km = static_cast<U>(c.mix_kernel), H = static_cast<U>(c.hidden);
  const U A = static_cast<U>(c.attention), Hm = static_cast<U>(c.mlp_hidden), C = static_cast<U>(c.classes);
  U front = 0;
  if (c.variant == Variant::full) front = 2 * S * K;
  if (c.variant == Variant::learnable_morlet) front = 2 * S;
  const U bn = 2 * Cf;
  const U mix = km * Cf * Cm + Cm;
  const U gru = 2 * (3 * H * Cm + 3 * H * H + 6 * H);
  const U attn = 2 * H * A + 2 * A;
  const U mlp = 2 * H * Hm + Hm + Hm * C + C;
  return front + bn + mix + gru + attn + mlp;
}

template <typename Scalar>
MetricsReport evaluate(Model<Scalar>& model, const Dataset& ds, std::size_t batch_size = 512) {
  const auto& cfg = model.config();
  if (static_cast<std::size_t>(cfg.classes) != ds.num_classes()) {
    throw ConfigError("checkpoint has " + std::to_string(cfg.classes) + " classes but the dataset has " +
                      std::to_string(ds.num_classes()));
  }
  if (static_cast<std::size_t>(cfg.length) != ds.length) {
    throw ShapeError("checkpoint expects length " + std::to_string(cfg.length) + " but the dataset has " +
                     std::to_string(ds.length));
  }
  const auto preds = predict(model, ds, batch_size);
  model.release_cache();
  std::vector<std::uint32_t> labels;
  std::vector<float> snrs;
  for (const auto& ex : ds.examples) {
    labels.push_back(ex.label);
    snrs.push_back(ex.snr_db);
  }
  auto r = compute_metrics(labels, preds, snrs, ds.num_classes(), ds.snr_grid);
  r.class_names = ds.class_names;
  r.params = model.count_params();
  r.flops = count_flops(cfg);
  return r;
}

inline nlohmann::json report_to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json per_snr = nlohmann::json::array();
  for (const auto& p : r.per_snr) {
    per_snr.push_back({{"snr_db", p.snr_db},
                       {"accuracy", p.total ? nlohmann::json(p.accuracy()) : nlohmann::json(nullptr)},
                       {"correct", p.correct},
                       {"total", p.total}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"overall_accuracy", r.overall_accuracy},
          {"segment_accuracy", {{"low", opt(r.low)}, {"mid", opt(r.mid)}, {"high", opt(r.high)}}},
          {"per_snr", per_snr},
          {"confusion", r.confusion},
          {"class_names", r.class_names},
          {"params", r.params},
          {"flops", r.flops},
          {"total", r.total}};
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    auto opt = [](const nlohmann::json& v) { return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>()); };
    r.overall_accuracy = j.at("overall_accuracy").get<double>();
    r.low = opt(j.at("segment_accuracy").at("low"));
    r.mid = opt(j.at("segment_accuracy").at("mid"));
    r.high = opt(j.at("segment_accuracy").at("high"));
    for (const auto& p : j.at("per_snr")) {
      r.per_snr.push_back({p.at("snr_db").get<double>(), p.at("correct").get<std::size_t>(),
                           p.at("total").get<std::size_t>()});
    }
    j.at("confusion").get_to(r.confusion);
    j.at("class_names").get_to(r.class_names);
    j.at("params").get_to(r.params);
    j.at("flops").get_to(r.flops);
    j.at("total").get_to(r.total);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed metrics report: ") + e.what());
  }
  return r;
}

inline std::string per_snr_csv(const MetricsReport& r) {
  std::string out = "snr_db,accuracy,correct,total\n";
  char line[128];
  for (const auto& p : r.per_snr) {
    std::snprintf(line, sizeof(line), "%g,%.17g,%zu,%zu\n", p.snr_db, p.accuracy(), p.correct, p.total);
    out += line;
  }
  return out;
}

inline std::string confusion_csv(const MetricsReport& r) {
  std::string out = "true\\pred";
  for (std::size_t c = 0; c < r.confusion.size(); ++c) {
    out += "," + (c < r.class_names.size() ? r.class_names[c] : std::to_string(c));
  }
  out += "\n";
  for (std::size_t t = 0; t < r.confusion.size(); ++t) {
    out += t < r.class_names.size() ? r.class_names[t] : std::to_string(t);
    for (auto v : r.confusion[t]) out += "," + std::to_string(v);
    out += "\n";
  }
  return out;
}

enum class ReportFormat { json, csv, both };

// Writes report.json and/or per_snr.csv + confusion.csv into `dir`.
inline std::vector<std::filesystem::path> emit_report(const MetricsReport& r, const std::filesystem::path& dir,
                                                      ReportFormat format = ReportFormat::both) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create report directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    const auto path = dir / name;
    detail::write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
    written.push_back(path);
  };
  if (format != ReportFormat::csv) put("report.json", report_to_json(r).dump(2) + "\n");
  if (format != ReportFormat::json) {
    put("per_snr.csv", per_snr_csv(r));
    put("confusion.csv", confusion_csv(r));
  }
  return written;
}

}  // namespace cspm
