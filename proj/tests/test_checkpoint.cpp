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

#include <cstring>
#include <filesystem>

#include "xvc/checkpoint.hpp"

namespace xvc {
namespace {

struct Trained {
  Checkpoint<float> ckpt;
  TrainData data;
};

const Trained& trained() {
  static const Trained t = [] {
    BenchmarkConfig bc;
    bc.n_train = 24;
    bc.n_val = 12;
    auto b = make_benchmark(bc);
    TrainConfig cfg;
    cfg.embed_dim = 16;
    cfg.epochs_per_stage = 1;
    cfg.stage1_fraction = 0.5;
    cfg.seed = 9;
    TrainData data{std::move(b.train), std::move(b.val)};
    auto ckpt = train<float>(cfg, data);
    return Trained{std::move(ckpt), std::move(data)};
  }();
  return t;
}

TEST(Checkpoint, RoundTripReproducesForwardOutputsExactly) {
  const auto& t = trained();
  const auto back = deserialize_checkpoint<float>(serialize_checkpoint(t.ckpt));
  EXPECT_EQ(back.model.params().values(), t.ckpt.model.params().values());
  EXPECT_EQ(to_json(back.config), to_json(t.ckpt.config));
  EXPECT_EQ(back.stage, "stage2");
  EXPECT_EQ(back.step, t.ckpt.step);
  EXPECT_EQ(back.history, t.ckpt.history);
  EXPECT_EQ(back.model.config().fusion_enabled, t.ckpt.model.config().fusion_enabled);
  for (const auto& s : t.data.val) {
    const auto a = t.ckpt.model.predict(t.ckpt.model.features(*s.query_frame), s.query_mask, s.category,
                                        t.ckpt.model.features(*s.target_frame));
    const auto b = back.model.predict(back.model.features(*s.query_frame), s.query_mask, s.category,
                                      back.model.features(*s.target_frame));
    ASSERT_EQ(a.mask_logits, b.mask_logits);
    ASSERT_EQ(a.visibility_logit, b.visibility_logit);
  }
}

TEST(Checkpoint, FileRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "xvc_test_checkpoint.xvck").string();
  save_checkpoint(path, trained().ckpt);
  const auto back = load_checkpoint<float>(path);
  EXPECT_EQ(back.model.params().values(), trained().ckpt.model.params().values());
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint<float>(path), IoError);
}

TEST(Checkpoint, Layout) {
  const auto bytes = serialize_checkpoint(trained().ckpt);
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 4), "XVCK");
  std::uint32_t version = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  EXPECT_EQ(version, 1u);  // little-endian host
  std::uint64_t head = 0;
  std::memcpy(&head, bytes.data() + 8, 8);
  const auto header = nlohmann::json::parse(bytes.substr(16, head));
  for (const char* key : {"arch", "config", "stage", "step", "history", "tensors"}) EXPECT_TRUE(header.contains(key));
  EXPECT_EQ(bytes.size(), 16 + head + 4 * trained().ckpt.model.parameter_count());
  EXPECT_EQ(header["tensors"][0]["name"], "backbone.stage1.weight");
  EXPECT_EQ(header["tensors"][0]["shape"], nlohmann::json({3, 3, 3, 16}));
}

TEST(Checkpoint, RejectsDamagedFiles) {
  const auto bytes = serialize_checkpoint(trained().ckpt);
  auto bad = bytes;
  bad[0] = 'Y';
  EXPECT_THROW(deserialize_checkpoint<float>(bad), IoError);
  EXPECT_THROW(deserialize_checkpoint<float>(bytes.substr(0, bytes.size() - 4)), IoError);
  EXPECT_THROW(deserialize_checkpoint<float>(bytes.substr(0, 20)), IoError);

  bad = bytes;
  const auto at = bad.find("\"backbone.stage1.weight\"");
  ASSERT_NE(at, std::string::npos);
  bad[at + 1] = 'B';
  try {
    deserialize_checkpoint<float>(bad, "model.xvck");
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("model.xvck"), std::string::npos);
  }
}

}  // namespace
}  // namespace xvc
