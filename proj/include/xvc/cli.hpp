// Copyright 2026 The xviewcorr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "xvc/checkpoint.hpp"
#include "xvc/dataset_io.hpp"
#include "xvc/evaluation.hpp"
#include "xvc/training.hpp"

namespace xvc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline std::string sha1_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw IoError("SHA-1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 15]);
  }
  return out;
}

/// Git blob id of `content`.
inline std::string git_blob_hash(const std::string& content) {
  return sha1_hex("blob " + std::to_string(content.size()) + std::string(1, '\0') + content);
}

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Content hash over the parameters and every input file. Files are named by
/// their path relative to their root, so moving a dataset keeps its hash.
inline std::string content_hash(const nlohmann::json& parameters,
                                const std::vector<std::pair<std::string, std::string>>& roots_and_files) {
  std::string listing = git_blob_hash(parameters.dump()) + " parameters\n";
  for (const auto& [root, rel] : roots_and_files) {
    listing += git_blob_hash(read_file_bytes((std::filesystem::path(root) / rel).string())) + " " + rel + "\n";
  }
  return git_blob_hash(listing);
}

/// Files under `dir`, relative and sorted.
inline std::vector<std::pair<std::string, std::string>> files_under(const std::string& dir) {
  namespace fs = std::filesystem;
  std::vector<std::pair<std::string, std::string>> out;
  if (!fs::is_directory(dir)) throw IoError(dir + " is not a directory");
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out.emplace_back(dir, fs::relative(e.path(), dir).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// UTC timestamp; SOURCE_DATE_EPOCH wins over the clock when set.
inline std::string timestamp_utc() {
  std::time_t t = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) {
    char* end = nullptr;
    const long long v = std::strtoll(sde, &end, 10);
    if (end != sde && *end == '\0') t = static_cast<std::time_t>(v);
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Writes via a temporary file and rename.
inline void write_atomic(const std::string& path, const std::string& text) {
  const auto tmp = path + ".tmp";
  write_text_file(tmp, text);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

struct RunManifest {
  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string input_hash;
  std::vector<std::string> outputs;
  std::string started_at;
};

inline nlohmann::json to_json(const RunManifest& m) {
  return {{"command", m.command},
          {"config_path", m.config_path.empty() ? nlohmann::json(nullptr) : nlohmann::json(m.config_path)},
          {"seed", m.seed},
          {"input_hash", m.input_hash},
          {"outputs", m.outputs},
          {"started_at", m.started_at}};
}

inline void write_run_manifest(const std::string& out_dir, const RunManifest& m) {
  std::filesystem::create_directories(out_dir);
  write_atomic((std::filesystem::path(out_dir) / "run_manifest.json").string(), to_json(m).dump(2) + "\n");
}

inline std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

// ---------------------------------------------------------------------------
// generate-data

struct GenerateArgs {
  std::optional<int> n_scenes;
  std::optional<int> height, width;
  std::optional<double> train, val, test;
};

inline int cmd_generate(const GlobalOptions& g, const GenerateArgs& a, std::ostream& out) {
  GenerateOptions opts;
  if (!g.config.empty()) {
    const auto j = read_json_file(g.config);
    if (!j.is_object()) throw SchemaError(g.config + ": generation config must be an object");
    for (const auto& [key, value] : j.items()) {
      if (key == "seed" && value.is_number_unsigned()) opts.seed = value.get<std::uint64_t>();
      else if (key == "n_scenes" && value.is_number_integer()) opts.n_scenes = value.get<int>();
      else if (key == "height" && value.is_number_integer()) opts.height = value.get<int>();
      else if (key == "width" && value.is_number_integer()) opts.width = value.get<int>();
      else if (key == "train" && value.is_number()) opts.fractions.train = value.get<double>();
      else if (key == "val" && value.is_number()) opts.fractions.val = value.get<double>();
      else if (key == "test" && value.is_number()) opts.fractions.test = value.get<double>();
      else throw SchemaError(g.config + ": unknown or mistyped field '" + key + "'");
    }
  }
  if (g.seed) opts.seed = *g.seed;
  if (a.n_scenes) opts.n_scenes = *a.n_scenes;
  if (a.height) opts.height = *a.height;
  if (a.width) opts.width = *a.width;
  if (a.train) opts.fractions.train = *a.train;
  if (a.val) opts.fractions.val = *a.val;
  if (a.test) opts.fractions.test = *a.test;

  const nlohmann::json params = {{"command", "generate-data"},   {"seed", opts.seed},
                                 {"n_scenes", opts.n_scenes},     {"height", opts.height},
                                 {"width", opts.width},           {"train", opts.fractions.train},
                                 {"val", opts.fractions.val},     {"test", opts.fractions.test}};
  write_run_manifest(g.out, {"generate-data", g.config, opts.seed, content_hash(params, {}),
                             {"frames/", "annotations/ego.json", "annotations/exo.json", "manifest.json"},
                             timestamp_utc()});
  write_dataset(g.out, opts);
  const auto manifest = read_json_file(join(g.out, "manifest.json"));
  out << "wrote " << opts.n_scenes << " scenes to " << g.out << " (train " << manifest["counts"]["train"]
      << ", val " << manifest["counts"]["val"] << ", test " << manifest["counts"]["test"] << " samples)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
};

inline TrainData load_train_data(const TrainConfig& cfg) {
  if (cfg.data_dir.empty()) {
    BenchmarkConfig bc;
    bc.seed = cfg.data_seed;
    bc.n_train = cfg.n_train;
    bc.n_val = cfg.n_val;
    auto b = make_benchmark(bc);
    return {std::move(b.train), std::move(b.val)};
  }
  const auto d = load_dataset(cfg.data_dir);
  TrainData data{d.subset("train"), d.subset("val")};
  if (data.train.empty()) throw ConfigError(cfg.data_dir + ": no training samples");
  return data;
}

inline int cmd_train(const GlobalOptions& g, const TrainArgs& a, std::ostream& out) {
  TrainConfig cfg;
  if (!g.config.empty()) cfg = train_config_from_json(read_json_file(g.config), g.config);
  cfg = apply_env_overrides(cfg);
  if (g.seed) cfg.seed = *g.seed;
  if (!a.data.empty()) cfg.data_dir = a.data;
  cfg.validate();

  std::vector<std::pair<std::string, std::string>> inputs;
  if (!cfg.data_dir.empty()) inputs = files_under(cfg.data_dir);
  write_run_manifest(g.out, {"train", g.config, cfg.seed, content_hash(to_json(cfg), inputs),
                             {"config.json", "train_log.jsonl", "history.json", "checkpoint.xvck"},
                             timestamp_utc()});
  write_text_file(join(g.out, "config.json"), to_json(cfg).dump(2) + "\n");

  const auto data = load_train_data(cfg);
  if (data.val.empty()) throw ConfigError("no validation samples");
  std::ofstream log(join(g.out, "train_log.jsonl"), std::ios::binary);
  if (!log) throw IoError("cannot write " + join(g.out, "train_log.jsonl"));
  const auto ckpt = train<float>(cfg, data, [&](const StepLog& s) { log << to_json(s).dump() << "\n"; });
  log.close();

  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : ckpt.history) history.push_back(to_json(r));
  write_text_file(join(g.out, "history.json"), history.dump(2) + "\n");
  save_checkpoint(join(g.out, "checkpoint.xvck"), ckpt);
  const auto& last = ckpt.history.back();
  out << "trained " << ckpt.step << " steps; val IoU " << last.val_iou << ", fusion weight " << last.fusion_weight
      << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
  std::string checkpoint;
  std::string data;
  std::string split = "val";
};

inline int cmd_predict(const GlobalOptions& g, const PredictArgs& a, std::ostream& out) {
  if (a.split != "train" && a.split != "val" && a.split != "test" && a.split != "all") {
    throw ConfigError("--split must be train, val, test or all");
  }
  std::vector<std::pair<std::string, std::string>> inputs = files_under(a.data);
  const auto ckpt_dir = std::filesystem::path(a.checkpoint).parent_path().string();
  inputs.emplace_back(ckpt_dir.empty() ? "." : ckpt_dir, std::filesystem::path(a.checkpoint).filename().string());
  const nlohmann::json params = {{"command", "predict"}, {"split", a.split}};
  write_run_manifest(g.out, {"predict", g.config, g.seed.value_or(0), content_hash(params, inputs),
                             {"predictions_ego2exo.json", "predictions_exo2ego.json"}, timestamp_utc()});

  const auto ckpt = load_checkpoint<float>(a.checkpoint);
  const auto dataset = load_dataset(a.data);
  const auto samples = dataset.subset(a.split);
  FeatureCache<float> cache;
  const auto preds = predict_samples(ckpt.model, cache, samples, inference_options(ckpt.config));

  for (const Direction d : {Direction::Ego2Exo, Direction::Exo2Ego}) {
    AnnotationFile file;
    file.height = dataset.height;
    file.width = dataset.width;
    file.direction = to_string(d);
    file.split = a.split;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].direction != d) continue;
      MaskTrack track;
      track.object_id = samples[i].object_id;
      track.frames[preds[i].frame_index] = TrackFrame{preds[i].predicted_mask, preds[i].predicted_visible};
      file.tracks.push_back(std::move(track));
    }
    write_annotation(join(g.out, "predictions_" + to_string(d) + ".json"), file);
  }
  out << "wrote predictions for " << samples.size() << " samples to " << g.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string data;
  std::vector<std::string> predictions;
  std::string direction;
  std::string split;
};

/// Scores prediction files against a dataset directory. Objects without a
/// prediction count as predicted invisible.
inline DirectionalReport evaluate_files(const DatasetDirectory& dataset, const std::vector<std::string>& files,
                                        const std::string& direction_override, const std::string& split_override) {
  std::vector<CorrespondenceSample> samples;
  std::vector<FramePrediction> preds;
  std::set<Direction> seen;
  for (const auto& path : files) {
    const auto file = read_annotation(path, AnnotationKind::Prediction);
    if (file.height != dataset.height || file.width != dataset.width) {
      throw SchemaError(path + ": height/width do not match the dataset");
    }
    std::string dir_name = !direction_override.empty() ? direction_override : file.direction.value_or("");
    if (dir_name.empty()) throw SchemaError(path + ": field 'direction' missing; pass --direction");
    Direction d;
    try {
      d = parse_direction(dir_name);
    } catch (const InvalidSpec& e) {
      throw SchemaError(path + ": field 'direction': " + e.what());
    }
    if (!seen.insert(d).second) throw ConfigError("more than one prediction file for " + dir_name);
    const std::string split_name = !split_override.empty() ? split_override : file.split.value_or("all");
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
      const auto& s = dataset.samples[i];
      if (s.direction != d || (split_name != "all" && dataset.splits[i] != split_name)) continue;
      FramePrediction p;
      p.frame_index = s.frame_index;
      if (const auto* track = file.find(s.object_id)) {
        if (auto it = track->frames.find(s.frame_index); it != track->frames.end()) {
          p.predicted_visible = it->second.visible;
          if (p.predicted_visible) p.predicted_mask = it->second.mask;
        }
      }
      samples.push_back(s);
      preds.push_back(std::move(p));
    }
  }
  return evaluate_predictions(samples, preds);
}

inline int cmd_evaluate(const GlobalOptions& g, const EvaluateArgs& a, std::ostream& out) {
  auto inputs = files_under(a.data);
  for (const auto& p : a.predictions) {
    const auto dir = std::filesystem::path(p).parent_path().string();
    inputs.emplace_back(dir.empty() ? "." : dir, std::filesystem::path(p).filename().string());
  }
  const nlohmann::json params = {{"command", "evaluate"}, {"direction", a.direction}, {"split", a.split}};
  write_run_manifest(g.out, {"evaluate", g.config, g.seed.value_or(0), content_hash(params, inputs),
                             {"report.json"}, timestamp_utc()});
  const auto report = to_json(evaluate_files(load_dataset(a.data), a.predictions, a.direction, a.split));
  write_text_file(join(g.out, "report.json"), report.dump(2) + "\n");
  out << report.dump(2) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string eval;
  bool plot = false;
};

struct ScenarioRow {
  std::string scenario;
  std::optional<double> ego2exo, exo2ego;

  std::optional<double> mean() const {
    if (ego2exo && exo2ego) return (*ego2exo + *exo2ego) / 2.0;
    return ego2exo ? ego2exo : exo2ego;
  }
};

inline std::vector<ScenarioRow> scenario_rows(const nlohmann::json& report, const std::string& where) {
  std::vector<ScenarioRow> rows;
  for (const auto& name : kScenarios) {
    ScenarioRow row{name, {}, {}};
    for (const char* d : {"ego2exo", "exo2ego"}) {
      if (!report.contains(d) || report[d].is_null()) continue;
      const auto& per = report[d];
      if (!per.contains("per_scenario") || !per["per_scenario"].is_object()) {
        throw SchemaError(where + ": field '" + std::string(d) + ".per_scenario' missing");
      }
      if (!per["per_scenario"].contains(name)) continue;
      const auto& iou = per["per_scenario"][name]["iou"];
      if (iou.is_null()) continue;
      if (!iou.is_number()) throw SchemaError(where + ": per-scenario 'iou' must be a number or null");
      (std::string(d) == "ego2exo" ? row.ego2exo : row.exo2ego) = iou.get<double>();
    }
    rows.push_back(row);
  }
  return rows;
}

inline std::string scenario_csv(const std::vector<ScenarioRow>& rows) {
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  std::string out = "scenario,iou_ego2exo,iou_exo2ego,iou_mean\n";
  for (const auto& r : rows) out += r.scenario + "," + cell(r.ego2exo) + "," + cell(r.exo2ego) + "," + cell(r.mean()) + "\n";
  return out;
}

/// Grouped bar chart: one group per scenario, one bar per direction.
inline Image scenario_bar_chart(const std::vector<ScenarioRow>& rows) {
  constexpr int kBar = 14, kGap = 4, kGroupGap = 16, kHeight = 160, kMargin = 10;
  const int width = kMargin * 2 + static_cast<int>(rows.size()) * (2 * kBar + kGap + kGroupGap);
  Image img(kHeight, width);
  for (auto& v : img.data()) v = 1.0f;
  auto fill = [&](int r0, int r1, int c0, int c1, Rgb color) {
    for (int r = std::max(r0, 0); r < std::min(r1, kHeight); ++r) {
      for (int c = std::max(c0, 0); c < std::min(c1, width); ++c) {
        img.at(r, c, 0) = color.r;
        img.at(r, c, 1) = color.g;
        img.at(r, c, 2) = color.b;
      }
    }
  };
  const int base = kHeight - kMargin, top = kMargin;
  fill(base, base + 1, kMargin / 2, width - kMargin / 2, Rgb{});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int x = kMargin + static_cast<int>(i) * (2 * kBar + kGap + kGroupGap);
    for (const auto& [v, color] : {std::pair{rows[i].ego2exo, Rgb{0.22f, 0.42f, 0.69f}},
                                   std::pair{rows[i].exo2ego, Rgb{0.90f, 0.55f, 0.20f}}}) {
      if (v) {
        const int h = static_cast<int>(std::lround(std::clamp(*v, 0.0, 1.0) * (base - top)));
        fill(base - h, base, x, x + kBar, color);
      }
      x += kBar + kGap;
    }
  }
  return img;
}

inline int cmd_report(const GlobalOptions& g, const ReportArgs& a, std::ostream& out) {
  std::vector<std::string> outputs{"scenario_iou.csv"};
  if (a.plot) outputs.emplace_back("scenario_iou.ppm");
  const auto dir = std::filesystem::path(a.eval).parent_path().string();
  write_run_manifest(g.out, {"report", g.config, g.seed.value_or(0),
                             content_hash({{"command", "report"}, {"plot", a.plot}},
                                          {{dir.empty() ? "." : dir, std::filesystem::path(a.eval).filename().string()}}),
                             outputs, timestamp_utc()});
  const auto rows = scenario_rows(read_json_file(a.eval), a.eval);
  const auto csv = scenario_csv(rows);
  write_text_file(join(g.out, "scenario_iou.csv"), csv);
  if (a.plot) write_ppm(join(g.out, "scenario_iou.ppm"), scenario_bar_chart(rows));
  out << csv;
  return kExitOk;
}

// ---------------------------------------------------------------------------

/// Parses and runs one command. Usage errors return 2, runtime errors 1.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cross-view object correspondence: data generation, training, prediction and evaluation", "xvc"};
  app.fallthrough();
  app.require_subcommand(1);
  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--config", g.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate-data", "Render a synthetic ego/exo dataset");
  generate->add_option("--n-scenes", gen.n_scenes, "Number of scenes")->check(CLI::PositiveNumber);
  generate->add_option("--height", gen.height, "Frame height (multiple of 8)");
  generate->add_option("--width", gen.width, "Frame width (multiple of 8)");
  generate->add_option("--train-fraction", gen.train, "Share of samples in train");
  generate->add_option("--val-fraction", gen.val, "Share of samples in val");
  generate->add_option("--test-fraction", gen.test, "Share of samples in test");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Two-stage training");
  train_cmd->add_option("--data", tr.data, "Dataset directory (default: built-in benchmark)");

  PredictArgs pr;
  auto* predict = app.add_subcommand("predict", "Predict target-view masks");
  predict->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required()->check(CLI::ExistingFile);
  predict->add_option("--data", pr.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--split", pr.split, "train, val, test or all")->capture_default_str();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Score prediction files");
  evaluate->add_option("--data", ev.data, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  evaluate->add_option("--pred", ev.predictions, "Prediction file (repeatable)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--direction", ev.direction, "Override the direction of the prediction files")
      ->check(CLI::IsMember({"ego2exo", "exo2ego"}));
  evaluate->add_option("--split", ev.split, "Override the split of the prediction files")
      ->check(CLI::IsMember({"train", "val", "test", "all"}));

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "Per-scenario IoU table from an evaluation report");
  report->add_option("--eval", rp.eval, "report.json written by evaluate")->required()->check(CLI::ExistingFile);
  report->add_flag("--plot", rp.plot, "Also write a bar chart (PPM)");

  try {
    app.parse(argc, argv);
    if (g.out.empty()) throw CLI::RequiredError("--out");
    if (generate->parsed() && !gen.n_scenes && g.config.empty()) throw CLI::RequiredError("--n-scenes");
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << "run 'xvc --help' for usage\n";
    return kExitUsage;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (generate->parsed()) return cmd_generate(g, gen, out);
    if (train_cmd->parsed()) return cmd_train(g, tr, out);
    if (predict->parsed()) return cmd_predict(g, pr, out);
    if (evaluate->parsed()) return cmd_evaluate(g, ev, out);
    return cmd_report(g, rp, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace xvc::cli
