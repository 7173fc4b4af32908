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

// cspm: dataset generation, training, evaluation, ablations and gradient
// checks for the CSPMNet modulation classifier.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "cspm/cspm.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

// Written next to every output so a run can be repeated from it.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  json config;
  json seeds = json::object();
  json inputs = json::object();
  json outputs = json::object();
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void write(const fs::path& path) const {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    const json j{{"command", command},
                 {"argv", argv},
                 {"tool_version", kToolVersion},
                 {"config", config},
                 {"seeds", seeds},
                 {"inputs", inputs},
                 {"outputs", outputs},
                 {"finished_utc", stamp},
                 {"wall_clock_seconds",
                  std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    const auto text = j.dump(2) + "\n";
    cspm::detail::write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw cspm::IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
  cspm::detail::write_file_atomic(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

std::vector<cspm::Modulation> parse_class_list(const std::string& text) {
  std::vector<cspm::Modulation> out;
  if (text == "all") {
    for (int k = 0; k < cspm::kModulationCount; ++k) out.push_back(cspm::modulation_from_id(k));
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(cspm::parse_modulation(item));
    } catch (const cspm::ConfigError& e) {
      throw cspm::UsageError(e.what());
    }
  }
  if (out.empty()) throw cspm::UsageError("empty class list");
  return out;
}

// Model architecture flags shared by train and ablate.
struct ModelFlags {
  std::string variant = "full";
  int subbands = 8, kernel = 33, mix = 64, mix_kernel = 3, hidden = 128, attention = 64, mlp_hidden = 128;
  std::vector<int> lags{1, 2, 4, 8};

  void add(CLI::App* app) {
    app->add_option("--variant", variant, "full | phase_motion_only | fixed_morlet | learnable_morlet")
        ->capture_default_str();
    app->add_option("--subbands", subbands, "Number of complex subbands S")->capture_default_str();
    app->add_option("--kernel", kernel, "Filter length K (odd)")->capture_default_str();
    app->add_option("--lags", lags, "Phase-motion lags")->delimiter(',')->capture_default_str();
    app->add_option("--mix", mix, "Mixing-conv channels")->capture_default_str();
    app->add_option("--mix-kernel", mix_kernel, "Mixing-conv kernel (odd)")->capture_default_str();
    app->add_option("--hidden", hidden, "GRU hidden size per direction")->capture_default_str();
    app->add_option("--attention", attention, "Attention width")->capture_default_str();
    app->add_option("--mlp-hidden", mlp_hidden, "MLP hidden width")->capture_default_str();
  }

  cspm::ModelConfig resolve(const cspm::Dataset& ds, std::uint64_t seed) const {
    cspm::ModelConfig c;
    c.variant = cspm::parse_variant(variant);
    c.length = static_cast<int>(ds.length);
    c.subbands = subbands;
    c.kernel = kernel;
    c.lags = lags;
    c.mix_channels = mix;
    c.mix_kernel = mix_kernel;
    c.hidden = hidden;
    c.attention = attention;
    c.mlp_hidden = mlp_hidden;
    c.classes = static_cast<int>(ds.num_classes());
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct TrainFlags {
  int epochs = 50;
  std::size_t batch = 512;
  double lr = 1e-3;
  std::uint64_t seed = 42;
  std::uint64_t split_seed = 42;
  std::size_t budget = cspm::kDefaultParamBudget;
  double clip = 0.0;

  void add(CLI::App* app) {
    app->add_option("--epochs", epochs)->capture_default_str();
    app->add_option("--batch", batch)->capture_default_str();
    app->add_option("--lr", lr, "Adam learning rate")->capture_default_str();
    app->add_option("--seed", seed, "Initialization and shuffle seed")->capture_default_str();
    app->add_option("--split-seed", split_seed, "Seed of the stratified 60/20/20 split")->capture_default_str();
    app->add_option("--budget", budget, "Trainable-parameter budget (0 disables)")->capture_default_str();
    app->add_option("--clip", clip, "Global gradient-norm clip (0 disables)")->capture_default_str();
  }

  cspm::TrainConfig resolve(std::uint64_t run_seed) const {
    cspm::TrainConfig t;
    t.epochs = epochs;
    t.batch_size = batch;
    t.adam.learning_rate = lr;
    t.seed = run_seed;
    t.param_budget = budget;
    t.clip_norm = clip;
    t.validate();
    return t;
  }
};

json train_config_json(const cspm::TrainConfig& t, std::uint64_t split_seed) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.adam.learning_rate},
          {"beta1", t.adam.beta1},
          {"beta2", t.adam.beta2},
          {"epsilon", t.adam.epsilon},
          {"seed", t.seed},
          {"split_seed", split_seed},
          {"split", {0.6, 0.2, 0.2}},
          {"param_budget", t.param_budget},
          {"clip_norm", t.clip_norm}};
}

void print_epoch(const cspm::EpochRecord& r) {
  std::printf("epoch %3d  train_loss %.4f  val_loss %.4f  val_acc %.4f  (%.1fs)\n", r.epoch, r.train_loss, r.val_loss,
              r.val_acc, r.seconds);
  std::fflush(stdout);
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f%%", 100.0 * *v);
  return buf;
}

void print_report(const cspm::MetricsReport& r) {
  std::printf("OA %.2f%%  low %s  mid %s  high %s  params %zu  flops %zu\n", 100.0 * r.overall_accuracy,
              fmt_opt(r.low).c_str(), fmt_opt(r.mid).c_str(), fmt_opt(r.high).c_str(), r.params, r.flops);
}

cspm::Dataset pick_split(const cspm::Dataset& ds, const std::string& which, std::uint64_t split_seed) {
  if (which == "all") return ds;
  const auto parts = cspm::split_dataset(ds, {}, split_seed);
  if (which == "train") return parts[0];
  if (which == "val") return parts[1];
  return parts[2];
}

// -- subcommands -----------------------------------------------------------

int cmd_generate(const std::string& classes, const std::string& snr, std::size_t per_cell, std::size_t length,
                 int sps, std::uint64_t seed, const std::string& out, RunManifest& m) {
  if (out.empty()) throw cspm::UsageError("generate: --out is required");
  cspm::GenerationConfig g;
  g.classes = parse_class_list(classes);
  g.snr_grid = cspm::parse_snr_grid(snr);
  g.per_cell = per_cell;
  g.length = length;
  g.samples_per_symbol = sps;
  g.seed = seed;
  g.validate();
  const auto ds = cspm::synthesize_dataset(g);
  cspm::write_container(ds, out);
  std::vector<std::string> names;
  for (auto c : g.classes) names.emplace_back(cspm::modulation_name(c));
  m.config = {{"classes", names},    {"snr_grid", g.snr_grid},
              {"per_cell", per_cell}, {"length", length},
              {"samples_per_symbol", sps}, {"random_phase", g.random_phase},
              {"max_carrier_offset", g.max_carrier_offset}, {"max_timing_offset", g.max_timing_offset}};
  m.seeds = {{"seed", seed}};
  m.outputs = {{"container", out}};
  m.write(fs::path(out).string() + ".manifest.json");
  std::printf("wrote %zu examples (%zu classes x %zu SNR points x %zu) to %s\n", ds.size(), g.classes.size(),
              g.snr_grid.size(), per_cell, out.c_str());
  return 0;
}

int cmd_train(const std::string& data, const std::string& out, const ModelFlags& mf, const TrainFlags& tf,
              RunManifest& m) {
  if (data.empty() || out.empty()) throw cspm::UsageError("train: --data and --out are required");
  const auto ds = cspm::read_container(data);
  const auto parts = cspm::split_dataset(ds, {}, tf.split_seed);
  const auto mc = mf.resolve(ds, tf.seed);
  const auto tc = tf.resolve(tf.seed);
  cspm::Model<float> model(mc);
  std::printf("%s: %zu trainable parameters, %zu FLOPs per example\n", cspm::variant_name(mc.variant).data(),
              model.count_params(), cspm::count_flops(mc));
  ensure_dir(out);
  const auto result = cspm::train(model, parts[0], parts[1], tc, print_epoch);
  const fs::path dir(out);
  cspm::save_checkpoint(model, dir / "last.ckpt");
  cspm::restore(model, result.best);
  cspm::save_checkpoint(model, dir / "best.ckpt");
  cspm::write_history_csv(result.history, dir / "history.csv");
  std::printf("best epoch %d (val_acc %.4f)\n", result.history.best_epoch,
              result.history.epochs[static_cast<std::size_t>(result.history.best_epoch - 1)].val_acc);
  m.config = {{"model", mc}, {"train", train_config_json(tc, tf.split_seed)}};
  m.seeds = {{"seed", tf.seed}, {"split_seed", tf.split_seed}};
  m.inputs = {{"data", data}};
  m.outputs = {{"best", (dir / "best.ckpt").string()},
               {"last", (dir / "last.ckpt").string()},
               {"history", (dir / "history.csv").string()}};
  m.write(dir / "manifest.json");
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& out, const std::string& format,
             const std::string& split, std::uint64_t split_seed, RunManifest& m) {
  if (ckpt.empty() || data.empty() || out.empty()) {
    throw cspm::UsageError("eval: --checkpoint, --data and --out are required");
  }
  auto model = cspm::load_checkpoint<float>(ckpt);
  const auto ds = pick_split(cspm::read_container(data), split, split_seed);
  const auto report = cspm::evaluate(model, ds);
  const auto fmt = format == "json" ? cspm::ReportFormat::json
                   : format == "csv" ? cspm::ReportFormat::csv
                                     : cspm::ReportFormat::both;
  const auto files = cspm::emit_report(report, out, fmt);
  print_report(report);
  m.config = {{"model", model.config()}, {"format", format}, {"split", split}};
  m.seeds = {{"split_seed", split_seed}};
  m.inputs = {{"checkpoint", ckpt}, {"data", data}};
  for (const auto& f : files) m.outputs[f.filename().string()] = f.string();
  m.write(fs::path(out) / "manifest.json");
  return 0;
}

int cmd_ablate(const std::string& data, const std::string& out, ModelFlags mf, const TrainFlags& tf,
               const std::vector<std::uint64_t>& seeds, RunManifest& m) {
  if (data.empty() || out.empty()) throw cspm::UsageError("ablate: --data and --out are required");
  if (seeds.empty()) throw cspm::UsageError("ablate: --seeds must not be empty");
  const auto ds = cspm::read_container(data);
  // One split for every variant and seed.
  const auto parts = cspm::split_dataset(ds, {}, tf.split_seed);
  ensure_dir(out);
  std::string csv = "variant,params,flops,seeds,oa,low,mid,high,delta_oa\n";
  double full_oa = std::numeric_limits<double>::quiet_NaN();
  json runs = json::array();
  for (auto v : cspm::kAllVariants) {
    mf.variant = std::string(cspm::variant_name(v));
    double oa = 0.0, low = 0.0, mid = 0.0, high = 0.0;
    bool has_low = true, has_mid = true, has_high = true;
    std::size_t params = 0, flops = 0;
    for (auto seed : seeds) {
      const auto mc = mf.resolve(ds, seed);
      cspm::Model<float> model(mc);
      std::printf("== %s seed %llu\n", mf.variant.c_str(), static_cast<unsigned long long>(seed));
      const auto result = cspm::train(model, parts[0], parts[1], tf.resolve(seed), print_epoch);
      cspm::restore(model, result.best);
      const auto r = cspm::evaluate(model, parts[2]);
      print_report(r);
      oa += r.overall_accuracy;
      has_low = has_low && r.low.has_value();
      has_mid = has_mid && r.mid.has_value();
      has_high = has_high && r.high.has_value();
      low += r.low.value_or(0.0);
      mid += r.mid.value_or(0.0);
      high += r.high.value_or(0.0);
      params = r.params;
      flops = r.flops;
      runs.push_back({{"variant", mf.variant}, {"seed", seed}, {"report", cspm::report_to_json(r)}});
    }
    const double n = static_cast<double>(seeds.size());
    oa /= n;
    if (v == cspm::Variant::full) full_oa = oa;
    auto cell = [&](bool has, double sum) {
      if (!has) return std::string();
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.6f", sum / n);
      return std::string(buf);
    };
    char line[256];
    std::snprintf(line, sizeof(line), "%s,%zu,%zu,%zu,%.6f,%s,%s,%s,%.6f\n", mf.variant.c_str(), params, flops,
                  seeds.size(), oa, cell(has_low, low).c_str(), cell(has_mid, mid).c_str(),
                  cell(has_high, high).c_str(), oa - full_oa);
    csv += line;
  }
  const fs::path dir(out);
  write_text(dir / "ablation.csv", csv);
  write_text(dir / "runs.json", runs.dump(2) + "\n");
  std::cout << csv;
  m.config = {{"model", mf.resolve(ds, seeds.front())}, {"train", train_config_json(tf.resolve(seeds.front()), tf.split_seed)}};
  m.seeds = {{"seeds", seeds}, {"split_seed", tf.split_seed}};
  m.inputs = {{"data", data}};
  m.outputs = {{"ablation", (dir / "ablation.csv").string()}, {"runs", (dir / "runs.json").string()}};
  m.write(dir / "manifest.json");
  return 0;
}

int cmd_gradcheck(const std::string& precision, std::optional<double> tol, double step, const std::string& variant,
                  bool inject_fault, const std::string& out, RunManifest& m) {
  cspm::GradCheckOptions o;
  if (precision != "f32" && precision != "f64") throw cspm::UsageError("--precision must be f32 or f64");
  o.precision = precision == "f32" ? cspm::Precision::f32 : cspm::Precision::f64;
  o.tolerance = tol.value_or(o.precision == cspm::Precision::f32 ? 1e-4 : 1e-6);
  o.step = step;
  o.inject_fault = inject_fault;
  const auto cfg = cspm::tiny_model_config(cspm::parse_variant(variant));
  const auto report = cspm::grad_check(cfg, o);
  json groups = json::array();
  for (const auto& g : report.groups) {
    const bool ok = g.max_rel_error < report.tolerance;
    std::printf("%-20s n=%-4zu max_rel %.3e  max_abs %.3e  %s\n", g.name.c_str(), g.count, g.max_rel_error,
                g.max_abs_error, ok ? "ok" : "FAIL");
    groups.push_back({{"name", g.name}, {"count", g.count}, {"max_rel_error", g.max_rel_error},
                      {"max_abs_error", g.max_abs_error}, {"passed", ok}});
  }
  std::printf("%s: max relative error %.3e (tolerance %.1e, %s)\n", report.passed() ? "PASS" : "FAIL",
              report.max_rel_error(), report.tolerance, precision.c_str());
  if (!out.empty()) {
    ensure_dir(out);
    const fs::path dir(out);
    write_text(dir / "gradcheck.json",
               json{{"passed", report.passed()}, {"tolerance", report.tolerance}, {"groups", groups}}.dump(2) + "\n");
    m.config = {{"model", cfg}, {"precision", precision}, {"tolerance", o.tolerance}, {"step", o.step},
                {"floor", o.floor}, {"batch", o.batch}, {"inject_fault", inject_fault}};
    m.seeds = {{"input_seed", o.seed}, {"model_seed", cfg.seed}};
    m.outputs = {{"report", (dir / "gradcheck.json").string()}};
    m.write(dir / "manifest.json");
  }
  return report.passed() ? 0 : static_cast<int>(cspm::ExitCode::numeric);
}

int cmd_inspect_bank(const std::string& ckpt, const std::string& out, int points, RunManifest& m) {
  if (ckpt.empty() || out.empty()) throw cspm::UsageError("inspect-bank: --checkpoint and --out are required");
  if (points < 2) throw cspm::UsageError("--points must be at least 2");
  auto model = cspm::load_checkpoint<double>(ckpt);
  if (model.config().variant == cspm::Variant::phase_motion_only) {
    throw cspm::ConfigError("the phase_motion_only variant has no filter bank");
  }
  const auto& bank = model.bank();
  ensure_dir(out);
  const fs::path dir(out);
  std::string taps = "subband,tap,real,imag\n";
  std::string resp = "subband,freq,magnitude\n";
  char line[128];
  const int K = bank.taps(), half = (K - 1) / 2;
  for (int s = 0; s < bank.subbands(); ++s) {
    for (int k = 0; k < K; ++k) {
      std::snprintf(line, sizeof(line), "%d,%d,%.9g,%.9g\n", s, k, bank.w_real(s, k), bank.w_imag(s, k));
      taps += line;
    }
    // Correlation taps h[k] act as an FIR with impulse response w[-k]; its
    // frequency response is sum_k w[k] e^{+j 2 pi f (k - half)}.
    for (int p = 0; p < points; ++p) {
      const double f = -0.5 + static_cast<double>(p) / points;
      std::complex<double> acc = 0.0;
      for (int k = 0; k < K; ++k) {
        acc += std::complex<double>(bank.w_real(s, k), bank.w_imag(s, k)) *
               std::polar(1.0, 2.0 * M_PI * f * (k - half));
      }
      std::snprintf(line, sizeof(line), "%d,%.6f,%.9g\n", s, f, std::abs(acc));
      resp += line;
    }
  }
  write_text(dir / "taps.csv", taps);
  write_text(dir / "response.csv", resp);
  m.config = {{"model", model.config()}, {"points", points}};
  m.inputs = {{"checkpoint", ckpt}};
  m.outputs = {{"taps", (dir / "taps.csv").string()}, {"response", (dir / "response.csv").string()}};
  m.write(dir / "manifest.json");
  std::printf("wrote %d subbands x %d taps\n", bank.subbands(), K);
  return 0;
}

int cmd_dump_features(const std::string& ckpt, const std::string& data, std::size_t index, const std::string& out,
                      RunManifest& m) {
  if (ckpt.empty() || data.empty() || out.empty()) {
    throw cspm::UsageError("dump-features: --checkpoint, --data and --out are required");
  }
  auto model = cspm::load_checkpoint<double>(ckpt);
  const auto ds = cspm::read_container(data);
  if (index >= ds.size()) throw cspm::UsageError("--index is out of range");
  const auto& sig = ds.examples[index].signal;
  std::vector<double> xr(sig.i.begin(), sig.i.end()), xi(sig.q.begin(), sig.q.end());
  const auto fm = model.features(xr, xi);
  std::string csv;
  char cell[40];
  for (Eigen::Index c = 0; c < fm.channels.rows(); ++c) {
    for (Eigen::Index n = 0; n < fm.channels.cols(); ++n) {
      std::snprintf(cell, sizeof(cell), n ? ",%.9g" : "%.9g", fm.channels(c, n));
      csv += cell;
    }
    csv += "\n";
  }
  write_text(out, csv);
  m.config = {{"model", model.config()}, {"index", index}};
  m.inputs = {{"checkpoint", ckpt}, {"data", data}};
  m.outputs = {{"features", out}};
  m.write(out + ".manifest.json");
  std::printf("wrote %lld x %lld feature map\n", static_cast<long long>(fm.channels.rows()),
              static_cast<long long>(fm.channels.cols()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // Results must not depend on the thread count, so GEMMs stay single-threaded
  // and CSPM_THREADS is only recorded.
  Eigen::setNbThreads(1);

  CLI::App app{"CSPMNet automatic modulation classifier"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  RunManifest manifest;
  manifest.argv.assign(argv, argv + argc);
  if (const char* t = std::getenv("CSPM_THREADS")) manifest.config["threads_hint"] = t;

  // generate
  std::string g_classes = "all", g_snr = "-20:2:20", g_out;
  std::size_t g_per_cell = 100, g_length = 128;
  int g_sps = 8;
  std::uint64_t g_seed = 42;
  auto* gen = app.add_subcommand("generate", "Synthesize a labeled I/Q dataset container");
  gen->add_option("--classes", g_classes, "'all' or comma-separated modulation names")->capture_default_str();
  gen->add_option("--snr", g_snr, "SNR grid start:step:stop (inclusive) or a single value")->capture_default_str();
  gen->add_option("--per-cell", g_per_cell, "Examples per (class, SNR) cell")->capture_default_str();
  gen->add_option("--length", g_length, "Samples per example")->capture_default_str();
  gen->add_option("--sps", g_sps, "Samples per symbol")->capture_default_str();
  gen->add_option("--seed", g_seed)->capture_default_str();
  gen->add_option("--out", g_out, "Output container path");

  // train
  std::string t_data, t_out;
  ModelFlags t_model;
  TrainFlags t_train;
  auto* tr = app.add_subcommand("train", "Train a model on the 60/20/20 split of a container");
  tr->add_option("--data", t_data, "Dataset container");
  tr->add_option("--out", t_out, "Output directory (best.ckpt, last.ckpt, history.csv)");
  t_model.add(tr);
  t_train.add(tr);

  // eval
  std::string e_ckpt, e_data, e_out, e_format = "both", e_split = "test";
  std::uint64_t e_split_seed = 42;
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint and write report files");
  ev->add_option("--checkpoint", e_ckpt);
  ev->add_option("--data", e_data);
  ev->add_option("--out", e_out, "Report directory");
  ev->add_option("--format", e_format)->check(CLI::IsMember({"json", "csv", "both"}))->capture_default_str();
  ev->add_option("--split", e_split, "Portion of the container to score")
      ->check(CLI::IsMember({"train", "val", "test", "all"}))
      ->capture_default_str();
  ev->add_option("--split-seed", e_split_seed)->capture_default_str();

  // ablate
  std::string a_data, a_out;
  ModelFlags a_model;
  TrainFlags a_train;
  std::vector<std::uint64_t> a_seeds{42};
  auto* ab = app.add_subcommand("ablate", "Train and score every variant on one shared split");
  ab->add_option("--data", a_data);
  ab->add_option("--out", a_out);
  ab->add_option("--seeds", a_seeds, "Seeds averaged per variant")->delimiter(',')->capture_default_str();
  a_model.add(ab);
  a_train.add(ab);
  ab->remove_option(ab->get_option("--variant"));
  ab->remove_option(ab->get_option("--seed"));

  // gradcheck
  std::string gc_precision = "f32", gc_variant = "full", gc_out;
  std::optional<double> gc_tol;
  double gc_step = 1e-5;
  bool gc_fault = false;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of the tiny model");
  gc->add_option("--precision", gc_precision)->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();
  gc->add_option("--tol", gc_tol, "Relative-error tolerance (default 1e-4 f32, 1e-6 f64)");
  gc->add_option("--step", gc_step)->capture_default_str();
  gc->add_option("--variant", gc_variant)->capture_default_str();
  gc->add_option("--out", gc_out, "Optional report directory");
  gc->add_flag("--inject-fault", gc_fault, "Corrupt one backward path (negative control)")->group("");

  // inspect-bank
  std::string ib_ckpt, ib_out;
  int ib_points = 256;
  auto* ib = app.add_subcommand("inspect-bank", "Export filter taps and magnitude responses");
  ib->add_option("--checkpoint", ib_ckpt);
  ib->add_option("--out", ib_out, "Output directory");
  ib->add_option("--points", ib_points, "Frequency grid size")->capture_default_str();

  // dump-features
  std::string df_ckpt, df_data, df_out;
  std::size_t df_index = 0;
  auto* df = app.add_subcommand("dump-features", "Write one example's phase-motion feature map as CSV");
  df->add_option("--checkpoint", df_ckpt);
  df->add_option("--data", df_data);
  df->add_option("--index", df_index)->capture_default_str();
  df->add_option("--out", df_out, "Output CSV (channels x time)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(cspm::ExitCode::usage);
  }

  try {
    auto* sub = app.get_subcommands().front();
    manifest.command = sub->get_name();
    if (sub == gen) return cmd_generate(g_classes, g_snr, g_per_cell, g_length, g_sps, g_seed, g_out, manifest);
    if (sub == tr) return cmd_train(t_data, t_out, t_model, t_train, manifest);
    if (sub == ev) return cmd_eval(e_ckpt, e_data, e_out, e_format, e_split, e_split_seed, manifest);
    if (sub == ab) return cmd_ablate(a_data, a_out, a_model, a_train, a_seeds, manifest);
    if (sub == gc) return cmd_gradcheck(gc_precision, gc_tol, gc_step, gc_variant, gc_fault, gc_out, manifest);
    if (sub == ib) return cmd_inspect_bank(ib_ckpt, ib_out, ib_points, manifest);
    if (sub == df) return cmd_dump_features(df_ckpt, df_data, df_index, df_out, manifest);
  } catch (const cspm::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(e.exit_code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
