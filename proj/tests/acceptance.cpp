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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>

#include "support/toy_model.hpp"
#include "xvc/cli.hpp"
#include "xvc/xvc.hpp"

namespace {

using namespace xvc;
using testing::TestRng;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrainData benchmark(std::uint64_t seed) {
  BenchmarkConfig bc;
  bc.seed = seed;
  auto b = make_benchmark(bc);
  return {std::move(b.train), std::move(b.val)};
}

TrainConfig default_config(std::uint64_t seed) {
  TrainConfig cfg;
  cfg.seed = seed;
  cfg.data_seed = seed;
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  TestRng rng(1001);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int h = testing::rand_int(rng, 1, 32), w = testing::rand_int(rng, 1, 32);
    const auto p = testing::random_mask(rng, h, w);
    const auto g = testing::random_nonempty_mask(rng, h, w);
    worst = std::max(worst, std::fabs(iou(p, g) - testing::oracle_iou(p, g)));
    worst = std::max(worst, std::fabs(location_error(p, g) - testing::oracle_location_error(p, g)));
    worst = std::max(worst, std::fabs(contour_accuracy(p, g) - testing::oracle_contour_accuracy(p, g)));
    const int n = testing::rand_int(rng, 1, 40);
    std::vector<bool> vp(n), vg(n);
    for (int k = 0; k < n; ++k) vp[k] = testing::rand_int(rng, 0, 1), vg[k] = testing::rand_int(rng, 0, 1);
    worst = std::max(worst, std::fabs(visibility_accuracy(vp, vg).value - testing::oracle_visibility_accuracy(vp, vg)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-12 && secs < 30.0, fmt("1000 pairs, max |diff| %.3g (tol 1e-12), %.2fs (limit 30s)", worst, secs)};
}

Outcome rle_round_trip() {
  const auto t0 = std::chrono::steady_clock::now();
  TestRng rng(1002);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto m = testing::random_mask(rng, testing::rand_int(rng, 1, 64), testing::rand_int(rng, 1, 64));
    if (!(rle_decode(rle_encode(m)) == m)) ++bad;
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 5.0, fmt("1000 masks, %d mismatches, %.2fs (limit 5s)", bad, secs)};
}

Outcome gradient_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  TestRng rng(1003);
  std::int64_t checked = 0, bad = 0;
  auto check = [&](double analytic, double numeric) {
    ++checked;
    if (!testing::gradient_close(analytic, numeric)) ++bad;
  };

  // Fusion, including the fusion logit.
  for (int trial = 0; trial < 10; ++trial) {
    auto visual = testing::random_vector(rng, 8), text = testing::random_vector(rng, 8);
    auto proj = testing::random_vector(rng, 64);
    double logit = testing::rand_real(rng, -3, 3);
    const auto r = testing::random_vector(rng, 8);
    auto loss = [&] {
      const auto f = residual_fuse<double>(visual, text, proj, logit);
      double s = 0;
      for (int k = 0; k < 8; ++k) s += r[k] * f[k] * f[k];
      return s;
    };
    const auto f = residual_fuse<double>(visual, text, proj, logit);
    std::vector<double> g_out(8);
    for (int k = 0; k < 8; ++k) g_out[k] = 2 * r[k] * f[k];
    const auto g = residual_fuse_backward<double>(g_out, text, proj, logit);
    for (int k = 0; k < 8; ++k) {
      check(g.visual[k], testing::central_difference(loss, visual[k]));
      check(g.text[k], testing::central_difference(loss, text[k]));
    }
    for (int k = 0; k < 64; ++k) check(g.projection[k], testing::central_difference(loss, proj[k]));
    check(g.logit, testing::central_difference(loss, logit));
  }

  // Alignment loss outside the near-coincident zone.
  for (int trial = 0; trial < 10; ++trial) {
    AlignmentBatch<double> b{8, 8, testing::random_vector(rng, 64), testing::random_vector(rng, 64)};
    bool far = true;
    for (int i = 0; i < 8; ++i) {
      double sq = 0;
      for (int k = 0; k < 8; ++k) sq += std::pow(b.query[i * 8 + k] - b.target[i * 8 + k], 2);
      far = far && std::sqrt(sq) > 1e-2;
    }
    if (!far) continue;
    const auto g = xobj_loss_backward(b);
    auto loss = [&] { return xobj_loss(b); };
    for (int i = 0; i < 64; ++i) {
      check(g.query[i], testing::central_difference(loss, b.query[i]));
      check(g.target[i], testing::central_difference(loss, b.target[i]));
    }
  }

  // Mask loss on its logits.
  for (int trial = 0; trial < 10; ++trial) {
    SegPrediction<double> p;
    p.logit_height = p.logit_width = 4;
    p.mask_logits = testing::random_vector(rng, 16, 2.0);
    p.visibility_logit = testing::rand_real(rng, -3, 3);
    const auto gt = testing::random_mask(rng, 8, 8);
    const auto l = mask_loss(p, &gt, true);
    auto f = [&] { return mask_loss(p, &gt, true).value; };
    for (int i = 0; i < 16; ++i) check(l.d_logits[i], testing::central_difference(f, p.mask_logits[i]));
    check(l.d_visibility, testing::central_difference(f, p.visibility_logit));
  }

  // Whole toy model (d = 8, 8x8 frames): decoder, mask token, visibility
  // head, fusion, text embedding, projector and backbone.
  for (const double lambda : {0.0, 1.0}) {
    for (const bool visible : {true, false}) {
      Model<double> model(testing::toy_config(), 7);
      const auto e = testing::smooth_example(rng, model, 13, visible);
      auto grad = model.params().zeros();
      testing::toy_loss(model, e, &grad, lambda);
      auto loss = [&] { return testing::toy_loss<double>(model, e, nullptr, lambda); };
      const auto mismatches = testing::check_all_parameters(model, loss, grad);
      checked += static_cast<std::int64_t>(model.parameter_count());
      bad += static_cast<std::int64_t>(mismatches.size());
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 60.0,
          fmt("%lld gradient entries, %lld outside 1e-4 relative, %.2fs (limit 60s)", static_cast<long long>(checked),
              static_cast<long long>(bad), secs)};
}

Outcome zero_parameter_claim(const TrainData& data) {
  auto with = default_config(0), without = default_config(0);
  without.enable_xobjalign = false;
  const auto a = init_checkpoint<float>(with), b = init_checkpoint<float>(without);
  const auto ca = a.model.parameter_count(), cb = b.model.parameter_count();
  // Instrument a trained model's prediction pass over the whole val set.
  const auto trained = train<float>(with, {std::vector<CorrespondenceSample>(data.train.begin(), data.train.begin() + 120), data.val});
  FeatureCache<float> cache;
  trained.model.reset_instrumentation();
  predict_samples(trained.model, cache, data.val, inference_options(with));
  const auto calls = trained.model.target_embedding_calls();
  return {ca == cb && calls == 0,
          fmt("parameters %zu with vs %zu without; target-embedding calls during predict: %lld", ca, cb,
              static_cast<long long>(calls))};
}

struct FullRun {
  Checkpoint<float> init, stage1, stage2;
};

std::vector<float> groups_of(const Model<float>& m, const std::function<bool(ParamGroup)>& pick) {
  std::vector<float> out;
  for (const auto& slot : m.params().slots()) {
    if (!pick(slot.group)) continue;
    const auto s = slice(m.params().values(), slot);
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

Outcome freeze_contracts(const FullRun& run) {
  const auto non_fusion = [](ParamGroup g) { return g != ParamGroup::Fusion; };
  const auto backbone = [](ParamGroup g) { return g == ParamGroup::Backbone; };
  const bool s1 = groups_of(run.init.model, non_fusion) == groups_of(run.stage1.model, non_fusion);
  const bool s1_moved = groups_of(run.init.model, std::not_fn(non_fusion)) !=
                        groups_of(run.stage1.model, std::not_fn(non_fusion));
  const bool s2 = groups_of(run.stage1.model, backbone) == groups_of(run.stage2.model, backbone);
  const bool s2_moved = groups_of(run.stage1.model, std::not_fn(backbone)) !=
                        groups_of(run.stage2.model, std::not_fn(backbone));
  return {s1 && s2 && s1_moved && s2_moved,
          fmt("stage 1 non-fusion bit-identical: %s (fusion moved: %s); stage 2 backbone bit-identical: %s "
              "(others moved: %s)",
              s1 ? "yes" : "no", s1_moved ? "yes" : "no", s2 ? "yes" : "no", s2_moved ? "yes" : "no")};
}

Outcome ablation_direction() {
  const auto t0 = std::chrono::steady_clock::now();
  std::array<double, 4> mean{};
  std::string per_seed;
  for (const std::uint64_t seed : {0u, 1u, 2u}) {
    const auto table = run_ablation(default_config(seed), benchmark(seed));
    per_seed += fmt(" s%llu[", static_cast<unsigned long long>(seed));
    for (int i = 0; i < 4; ++i) {
      mean[i] += table.rows[i].val_iou / 3.0;
      per_seed += fmt(i ? " %.3f" : "%.3f", table.rows[i].val_iou);
    }
    per_seed += "]";
  }
  const double secs = seconds_since(t0);
  const double base = mean[0], mcfuse = mean[1], xobj = mean[2], full = mean[3];
  const bool gain = full >= base + 0.01;
  const bool near_best = full >= std::max(mcfuse, xobj) - 0.02;
  return {gain && near_best && secs < 1800.0,
          fmt("3-seed mean IoU Base %.4f, +MCFuse %.4f, +XObjAlign %.4f, Full %.4f; Full-Base %+.4f (need >= 0.01), "
              "Full-max %+.4f (need >= -0.02); %.0fs (limit 1800s);",
              base, mcfuse, xobj, full, full - base, full - std::max(mcfuse, xobj), secs) +
              per_seed};
}

Outcome alignment_efficacy(const FullRun& run, const TrainData& data) {
  auto cfg = default_config(0);
  cfg.enable_xobjalign = false;
  const auto no_xobj = train<float>(cfg, data);
  const EpochRecord* start = nullptr;
  for (const auto& r : run.stage2.history) {
    if (r.stage == "stage2" && r.epoch == 0) start = &r;
  }
  const auto& end = run.stage2.history.back();
  const auto& other = no_xobj.history.back();
  if (start == nullptr) return {false, "no stage-2 start record"};
  const bool same_step = end.step == other.step;
  return {end.val_embed_distance < start->val_embed_distance && end.val_embed_distance < other.val_embed_distance &&
              same_step,
          fmt("val embedding distance with alignment %.4f -> %.4f; without alignment %.4f at step %lld (aligned run at "
              "step %lld)",
              start->val_embed_distance, end.val_embed_distance, other.val_embed_distance,
              static_cast<long long>(other.step), static_cast<long long>(end.step))};
}

Outcome fusion_weight_behavior(const TrainData& data) {
  auto clean = default_config(0), noisy = default_config(0);
  clean.text_noise_rate = 0.0;
  noisy.text_noise_rate = 1.0;
  const double w_clean = train<float>(clean, data).history.back().fusion_weight;
  const double w_noisy = train<float>(noisy, data).history.back().fusion_weight;
  return {w_noisy < w_clean, fmt("final fusion weight %.4f with noise 0 vs %.4f with noise 1", w_clean, w_noisy)};
}

Outcome trained_vs_untrained(const FullRun& run, const TrainData& data) {
  const auto opts = inference_options(run.init.config);
  FeatureCache<float> cache;
  const double before = evaluate_model(run.init.model, cache, data.val, opts).headline_iou();
  const double after = evaluate_model(run.stage2.model, cache, data.val, opts).headline_iou();
  return {after >= before + 0.2, fmt("val IoU untrained %.4f, trained Full %.4f, gain %+.4f (need >= 0.2)", before, after,
                                     after - before)};
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "xvc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "xvc %s failed: %s", args[1].c_str(), err.str().c_str());
  return code;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome end_to_end_determinism() {
  namespace fs = std::filesystem;
  std::string tmpl = (fs::temp_directory_path() / "xvc_accept_XXXXXX").string();
  if (mkdtemp(tmpl.data()) == nullptr) return {false, "cannot create a temporary directory"};
  const fs::path root = tmpl;
  std::array<std::string, 2> reports;
  bool ok = true;
  for (int i = 0; i < 2 && ok; ++i) {
    const auto dir = root / ("run" + std::to_string(i));
    const auto data = (dir / "data").string(), model = (dir / "model").string();
    const auto pred = (dir / "pred").string(), eval = (dir / "eval").string();
    ok = run_cli({"generate-data", "--seed", "11", "--n-scenes", "60", "--out", data}) == 0 &&
         run_cli({"train", "--seed", "5", "--data", data, "--out", model}) == 0 &&
         run_cli({"predict", "--checkpoint", model + "/checkpoint.xvck", "--data", data, "--out", pred}) == 0 &&
         run_cli({"evaluate", "--data", data, "--pred", pred + "/predictions_ego2exo.json", "--pred",
                  pred + "/predictions_exo2ego.json", "--out", eval}) == 0;
    if (ok) reports[i] = slurp(dir / "eval" / "report.json");
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  if (!ok) return {false, "pipeline command failed"};
  const auto j = nlohmann::json::parse(reports[0]);
  return {reports[0] == reports[1] && !reports[0].empty(),
          fmt("two generate/train/predict/evaluate runs: report.json %s (final_score %.4f)",
              reports[0] == reports[1] ? "byte-identical" : "DIFFERS", j["final_score"].get<double>())};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "metric-oracle equivalence", metric_oracles);
  report(2, "RLE round-trip", rle_round_trip);
  report(3, "gradient suite", gradient_suite);

  const auto data = benchmark(0);
  report(4, "zero-parameter alignment", [&] { return zero_parameter_claim(data); });

  // One Full run on the default benchmark, kept stage by stage.
  std::optional<FullRun> full;
  std::string full_error;
  try {
    const auto cfg = default_config(0);
    FeatureCache<float> cache;
    auto init = init_checkpoint<float>(cfg);
    auto s1 = train_stage1<float>(cfg, data, {}, &cache);
    auto s2 = train_stage2<float>(cfg, data, s1, {}, &cache);
    full = FullRun{std::move(init), std::move(s1), std::move(s2)};
  } catch (const std::exception& e) {
    full_error = e.what();
  }
  auto needs_full = [&](const std::function<Outcome(const FullRun&)>& fn) {
    return [&, fn] { return full ? fn(*full) : Outcome{false, "training failed: " + full_error}; };
  };

  report(5, "freeze contracts", needs_full(freeze_contracts));
  report(6, "ablation direction", ablation_direction);
  report(7, "alignment efficacy", needs_full([&](const FullRun& r) { return alignment_efficacy(r, data); }));
  report(8, "fusion-weight behavior", [&] { return fusion_weight_behavior(data); });
  report(9, "trained vs untrained", needs_full([&](const FullRun& r) { return trained_vs_untrained(r, data); }));
  report(10, "end-to-end determinism", end_to_end_determinism);

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
