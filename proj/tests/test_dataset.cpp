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

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "support/oracles.hpp"
#include "xvc/dataset.hpp"
#include "xvc/metrics.hpp"

namespace xvc {
namespace {

bool same_samples(const std::vector<CorrespondenceSample>& a, const std::vector<CorrespondenceSample>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].id != b[i].id || !(*a[i].query_frame == *b[i].query_frame) ||
        !(*a[i].target_frame == *b[i].target_frame) || !(a[i].query_mask == b[i].query_mask) ||
        a[i].gt_target_mask != b[i].gt_target_mask || a[i].gt_visible != b[i].gt_visible ||
        a[i].category != b[i].category) {
      return false;
    }
  }
  return true;
}

TEST(SceneSpec, Validation) {
  SceneSpec s;
  EXPECT_NO_THROW(validate(s));
  s.n_objects = 0;
  EXPECT_THROW(generate_scene(s), InvalidSpec);
  s = SceneSpec{};
  s.scale_ratio = 1.0;
  EXPECT_THROW(generate_scene(s), InvalidSpec);
  s = SceneSpec{};
  s.scenario = "juggling";
  EXPECT_THROW(generate_scene(s), InvalidSpec);
  EXPECT_EQ(kScenarios.size(), 6u);
  EXPECT_EQ(categories().size(), 32u);
}

TEST(GenerateScene, Deterministic) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SceneSpec s;
    s.seed = seed;
    s.occlusion_rate = 0.5;
    EXPECT_TRUE(same_samples(generate_scene(s), generate_scene(s)));
  }
}

TEST(GenerateScene, SampleInvariants) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto spec = scenario_spec(kScenarios[seed % 6], seed);
    for (const auto& s : generate_scene(spec)) {
      EXPECT_GT(area(s.query_mask), 0);
      EXPECT_EQ(s.gt_visible, s.gt_target_mask.has_value() && area(*s.gt_target_mask) > 0);
      EXPECT_EQ(s.scenario, spec.scenario);
      EXPECT_GE(s.category, 0);
      EXPECT_LT(s.category, kNumCategories);
      for (const float v : s.query_frame->data()) {
        ASSERT_GE(v, 0.0f);
        ASSERT_LE(v, 1.0f);
      }
    }
  }
}

TEST(GenerateScene, NoOcclusionMeansAllVisible) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    auto spec = scenario_spec(kScenarios[seed % 6], seed);
    spec.occlusion_rate = 0.0;
    const auto samples = generate_scene(spec);
    EXPECT_EQ(samples.size(), 2u * static_cast<std::size_t>(spec.n_objects));
    for (const auto& s : samples) EXPECT_TRUE(s.gt_visible) << s.id;
  }
}

TEST(GenerateScene, FullOcclusionHidesOneViewPerObject) {
  SceneSpec spec;
  spec.occlusion_rate = 1.0;
  int hidden = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = seed;
    for (const auto& s : generate_scene(spec)) hidden += s.gt_visible ? 0 : 1;
  }
  EXPECT_GT(hidden, 20);
}

TEST(GenerateScene, ZoomSetsAreaRatio) {
  double ego_area = 0, exo_area = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    SceneSpec spec;
    spec.seed = seed;
    spec.scale_ratio = 4.0;
    spec.occlusion_rate = 0.0;
    spec.clutter_density = 0.0;
    for (const auto& s : generate_scene(spec)) {
      if (s.direction != Direction::Ego2Exo) continue;
      ego_area += static_cast<double>(area(s.query_mask));
      exo_area += static_cast<double>(area(*s.gt_target_mask));
    }
  }
  const double ratio = exo_area / ego_area;
  EXPECT_NEAR(ratio, 1.0 / 16.0, 0.2 / 16.0);
}

TEST(RenderScene, MasksLieInsideTheObjectRenderedAlone) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto scene = render_scene(scenario_spec(kScenarios[seed % 6], seed));
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      for (const View v : {View::Ego, View::Exo}) {
        const auto alone = render_object_alone(scene, i, v);
        const auto& mask = scene.objects[i].masks[static_cast<int>(v)];
        for (const auto& [r, c] : testing::pixels_of(mask)) ASSERT_TRUE(alone(r, c));
      }
    }
  }
}

TEST(RenderScene, VisibilityMatchesCompositedArea) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    auto spec = scenario_spec(kScenarios[seed % 6], seed);
    spec.occlusion_rate = 0.5;
    const auto scene = render_scene(spec);
    for (const auto& o : scene.objects) {
      for (const View v : {View::Ego, View::Exo}) {
        EXPECT_EQ(o.visible[static_cast<int>(v)], area(o.masks[static_cast<int>(v)]) > 0);
      }
      if (o.occluded_in) {
        EXPECT_FALSE(o.visible[static_cast<int>(*o.occluded_in)]);
      }
    }
  }
}

// The ego mask pulled back through the known warp reproduces the exo mask up
// to rasterization. Checked on a 192x192 canvas, where exo objects span
// enough pixels for boundary rounding to stay below the tolerance.
TEST(RenderScene, CrossViewCorrespondence) {
  constexpr int n = 192;
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    auto spec = scenario_spec(kScenarios[seed % 6], seed, n, n);
    spec.occlusion_rate = 0.0;
    const auto scene = render_scene(spec);
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
      const auto& o = scene.objects[i];
      const auto& ego = o.masks[0];
      const auto& exo = o.masks[1];
      if (!(ego == render_object_alone(scene, i, View::Ego)) || !(exo == render_object_alone(scene, i, View::Exo))) {
        continue;  // partly covered by another object
      }
      BinaryMask warped(n, n);
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          const auto q = scene.ego.to_pixel({static_cast<double>(r), static_cast<double>(c)});
          const int qr = static_cast<int>(std::lround(q.y)), qc = static_cast<int>(std::lround(q.x));
          if (ego.contains(qr, qc) && ego(qr, qc)) warped.set(r, c);
        }
      }
      EXPECT_GE(iou(warped, exo), 0.9) << "seed " << seed << " object " << i;
      ++checked;
    }
  }
  EXPECT_GT(checked, 40);
}

TEST(ViewTransform, PixelWorldRoundTrip) {
  const auto t = ViewTransform::ego({30, 20}, {31.5, 31.5}, 0.4, 2.7, 2.1);
  for (double y : {0.0, 10.0, 63.0}) {
    for (double x : {0.0, 33.0, 63.0}) {
      const auto p = t.to_pixel(t.to_world({y, x}));
      EXPECT_NEAR(p.y, y, 1e-9);
      EXPECT_NEAR(p.x, x, 1e-9);
    }
  }
}

std::vector<CorrespondenceSample> fake_samples(int n) {
  std::vector<CorrespondenceSample> out(n);
  for (int i = 0; i < n; ++i) {
    out[i].id = "s" + std::to_string(i);
    out[i].scenario = kScenarios[(i * 7 + i / 3) % kScenarios.size()];
  }
  return out;
}

TEST(Split, AllTrain) {
  const auto parts = split(fake_samples(37), {1.0, 0.0, 0.0}, 4);
  EXPECT_EQ(parts.train.size(), 37u);
  EXPECT_TRUE(parts.val.empty());
  EXPECT_TRUE(parts.test.empty());
}

TEST(Split, SizesFollowFractions) {
  const auto parts = split(fake_samples(1000), {0.8, 0.1, 0.1}, 4);
  EXPECT_EQ(parts.train.size(), 800u);
  EXPECT_EQ(parts.val.size(), 100u);
  EXPECT_EQ(parts.test.size(), 100u);
}

TEST(Split, RejectsBadFractions) {
  EXPECT_THROW(split(fake_samples(10), {0.5, 0.2, 0.2}), InvalidSpec);
  EXPECT_THROW(split(fake_samples(10), {1.2, -0.1, -0.1}), InvalidSpec);
}

TEST(Split, DisjointDeterministicAndStratified) {
  testing::TestRng rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = testing::rand_int(rng, 1, 400);
    double a = testing::rand_real(rng), b = testing::rand_real(rng);
    if (a > b) std::swap(a, b);
    const SplitFractions f{a, b - a, 1.0 - b};
    const auto samples = fake_samples(n);
    const auto parts = split(samples, f, static_cast<std::uint64_t>(trial));
    const auto again = split(samples, f, static_cast<std::uint64_t>(trial));

    std::set<std::string> seen;
    std::map<std::string, int> total;
    for (const auto& s : samples) ++total[s.scenario];
    const std::array<const std::vector<CorrespondenceSample>*, 3> lists{&parts.train, &parts.val, &parts.test};
    const std::array<const std::vector<CorrespondenceSample>*, 3> lists2{&again.train, &again.val, &again.test};
    const std::array<double, 3> fr{f.train, f.val, f.test};
    for (int k = 0; k < 3; ++k) {
      std::map<std::string, int> per;
      for (std::size_t i = 0; i < lists[k]->size(); ++i) {
        EXPECT_TRUE(seen.insert((*lists[k])[i].id).second);
        EXPECT_EQ((*lists[k])[i].id, (*lists2[k])[i].id);
        ++per[(*lists[k])[i].scenario];
      }
      EXPECT_LE(std::fabs(static_cast<double>(lists[k]->size()) - fr[k] * n), 1.0);
      for (const auto& [name, count] : total) {
        EXPECT_LE(std::fabs(per[name] - fr[k] * count), 1.0 + 1e-9) << name;
      }
    }
    EXPECT_EQ(seen.size(), samples.size());
  }
}

TEST(Benchmark, SizesAndDisjointScenes) {
  BenchmarkConfig cfg;
  cfg.n_train = 60;
  cfg.n_val = 12;
  const auto b = make_benchmark(cfg);
  EXPECT_EQ(b.train.size(), 60u);
  EXPECT_EQ(b.val.size(), 12u);
  std::set<const Image*> train_frames;
  for (const auto& s : b.train) train_frames.insert(s.query_frame.get());
  for (const auto& s : b.val) EXPECT_FALSE(train_frames.contains(s.query_frame.get()));
  std::set<std::string> scenarios;
  for (const auto& s : b.train) scenarios.insert(s.scenario);
  EXPECT_EQ(scenarios.size(), 6u);
}

}  // namespace
}  // namespace xvc
