// Copyright 2026 The zcforge Authors.
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

#include <fstream>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_util.hpp"
#include "zcforge/dataset.hpp"
#include "zcforge/error.hpp"

namespace zcforge {
namespace {

namespace fs = std::filesystem;

std::vector<BlockStats> small_blocks() {
  return testing::capture("RCB/r8/in3/cls4/4k3-4k1", 21);
}

TEST(Blob, RoundTripIsBitwise) {
  const auto blocks = small_blocks();
  const auto bytes = encode_blob(blocks);
  ASSERT_GT(bytes.size(), 4u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "EZT1");
  const auto back = decode_blob(bytes.data(), bytes.size());
  ASSERT_EQ(back.size(), blocks.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_TRUE(back[i].bitwise_equal(blocks[i]));
}

TEST(Blob, NonFiniteValuesSurvive) {
  auto blocks = small_blocks();
  blocks[0][StatSlot::kT4G_N] = Tensor({2}, {NAN, INFINITY});
  const auto bytes = encode_blob(blocks);
  const auto back = decode_blob(bytes.data(), bytes.size());
  EXPECT_TRUE(back[0].bitwise_equal(blocks[0]));
}

TEST(Blob, TruncationReportsOffset) {
  const auto bytes = encode_blob(small_blocks());
  const std::size_t cut = bytes.size() - 3;
  try {
    decode_blob(bytes.data(), cut);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("offset"), std::string::npos) << e.what();
  }
  EXPECT_THROW(decode_blob(bytes.data(), 2), FormatError);
}

TEST(Blob, BadMagic) {
  auto bytes = encode_blob(small_blocks());
  bytes[0] = 'X';
  EXPECT_THROW(decode_blob(bytes.data(), bytes.size()), FormatError);
}

TEST(DatasetDir, WriteReadRoundTrip) {
  const fs::path dir = testing::temp_dir("roundtrip");
  std::vector<NetworkRecord> recs = {testing::record("a-0", "a", 0.5, small_blocks()),
                                     testing::record("b-0", "b", 0.75, small_blocks())};
  recs[1].meta = {123, 456, "CBR/r8/in3/cls4/4k3-4k1"};
  write_dataset(recs, dir);
  const DatasetReader reader(dir);
  ASSERT_EQ(reader.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    const NetworkRecord r = reader.load(i);
    EXPECT_EQ(r.id, recs[i].id);
    EXPECT_EQ(r.space, recs[i].space);
    EXPECT_EQ(r.accuracy, recs[i].accuracy);
    EXPECT_EQ(r.meta.params, recs[i].meta.params);
    EXPECT_EQ(r.meta.arch, recs[i].meta.arch);
    for (std::size_t b = 0; b < r.blocks.size(); ++b) {
      EXPECT_TRUE(r.blocks[b].bitwise_equal(recs[i].blocks[b]));
    }
  }
  const TaskDataset td = read_dataset(dir);
  EXPECT_EQ(td.total_records(), 2u);
  EXPECT_EQ(td.spaces.size(), 2u);
  fs::remove_all(dir);
}

TEST(DatasetDir, RejectsInvalidRecords) {
  const fs::path dir = testing::temp_dir("invalid");
  EXPECT_THROW(write_dataset({testing::record("a", "s", 1.2, small_blocks())}, dir), DataError);
  EXPECT_THROW(write_dataset({testing::record("a", "s", 0.5, {})}, dir), DataError);
  EXPECT_THROW(write_dataset({testing::record("a", "s", 0.5, small_blocks()),
                              testing::record("a", "s", 0.5, small_blocks())},
                             dir),
               DataError);
  EXPECT_THROW(write_dataset({testing::record("../a", "s", 0.5, small_blocks())}, dir),
               DataError);
  fs::remove_all(dir);
}

TEST(DatasetDir, TamperedManifestAccuracy) {
  const fs::path dir = testing::temp_dir("tamper");
  write_dataset({testing::record("a-0", "a", 0.5, small_blocks())}, dir);
  nlohmann::json m;
  {
    std::ifstream in(dir / "manifest.json");
    in >> m;
  }
  std::function<bool(nlohmann::json&)> patch = [&](nlohmann::json& j) {
    if (j.is_object() && j.contains("accuracy")) {
      j["accuracy"] = 1.2;
      return true;
    }
    for (auto& v : j) {
      if ((v.is_object() || v.is_array()) && patch(v)) return true;
    }
    return false;
  };
  ASSERT_TRUE(patch(m));
  std::ofstream(dir / "manifest.json") << m.dump();
  EXPECT_THROW(DatasetReader{dir}, ManifestMismatch);
  fs::remove_all(dir);
}

TEST(DatasetDir, MissingManifest) {
  const fs::path dir = testing::temp_dir("missing");
  fs::create_directories(dir);
  EXPECT_THROW(DatasetReader{dir}, DataError);
  fs::remove_all(dir);
}

TaskDataset four_spaces() {
  std::vector<NetworkRecord> recs;
  const auto blocks = small_blocks();
  for (int s = 0; s < 4; ++s) {
    for (int i = 0; i < 6; ++i) {
      const std::string sp = "s" + std::to_string(s);
      recs.push_back(testing::record(sp + "-" + std::to_string(i), sp, 0.1 * i, blocks));
    }
  }
  return make_task_dataset(std::move(recs));
}

TEST(FitnessBatch, FullDrawCoversEverything) {
  const TaskDataset td = four_spaces();
  Rng rng = make_rng(22, {});
  const auto batch = sample_fitness_batch(td, 4, 6, rng);
  std::set<std::string> spaces, ids;
  for (const auto& s : batch) {
    spaces.insert(s.space);
    for (const auto* r : s.records) {
      EXPECT_EQ(r->space, s.space);
      ids.insert(r->id);
    }
  }
  EXPECT_EQ(spaces.size(), 4u);
  EXPECT_EQ(ids.size(), 24u);
}

TEST(FitnessBatch, ReproducibleAndCoversAllPairs) {
  const TaskDataset td = four_spaces();
  std::set<std::set<std::string>> pairs;
  for (std::uint64_t g = 0; g < 200; ++g) {
    Rng r1 = make_rng(23, {g}), r2 = make_rng(23, {g});
    const auto a = sample_fitness_batch(td, 2, 3, r1);
    const auto b = sample_fitness_batch(td, 2, 3, r2);
    ASSERT_EQ(a.size(), 2u);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].space, b[i].space);
      EXPECT_EQ(a[i].records, b[i].records);
      std::set<const NetworkRecord*> distinct(a[i].records.begin(), a[i].records.end());
      EXPECT_EQ(distinct.size(), 3u);
    }
    pairs.insert({a[0].space, a[1].space});
  }
  EXPECT_EQ(pairs.size(), 6u);  // C(4, 2)
}

TEST(FitnessBatch, Errors) {
  const TaskDataset td = four_spaces();
  Rng rng = make_rng(24, {});
  EXPECT_THROW(sample_fitness_batch(td, 5, 2, rng), InsufficientSpaces);
  EXPECT_THROW(sample_fitness_batch(td, 2, 7, rng), InsufficientRecords);
}

}  // namespace
}  // namespace zcforge
