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

// Statistics datasets on disk.
//
//   DIR/manifest.json   ids, spaces, accuracy labels, metadata, blob refs
//   DIR/<id>.ezt        tensors of one network
//
// Blob layout (all integers u32 little-endian, floats f32 little-endian):
//
//   "EZT1"
//   repeated per tensor:
//     name length, name bytes (ASCII slot name, e.g. "T3G_N")
//     block index
//     rank, extents[rank]
//     data, row-major
//
// Accuracy labels live only in the manifest.

#ifndef ZCFORGE_DATASET_HPP_
#define ZCFORGE_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "zcforge/block_stats.hpp"
#include "zcforge/rng.hpp"

namespace zcforge {

struct NetworkMeta {
  std::int64_t params = 0;
  std::int64_t flops = 0;
  std::string arch;
};

struct NetworkRecord {
  std::string id;
  std::string space;
  std::string dataset_name;
  double accuracy = 0.0;
  NetworkMeta meta;
  std::vector<BlockStats> blocks;
};

// Manifest entry: everything but the tensors.
struct RecordInfo {
  std::string id;
  std::string space;
  std::string dataset_name;
  double accuracy = 0.0;
  NetworkMeta meta;
  std::string blob;
  std::uint64_t offset = 0;
  std::uint64_t length = 0;
  std::uint32_t num_blocks = 0;
};

// --- blob codec ---------------------------------------------------------------

std::vector<std::uint8_t> encode_blob(const std::vector<BlockStats>& blocks);
// Throws FormatError (bad magic, truncation, unknown slot, duplicate or
// missing tensors) with the byte offset of the problem.
std::vector<BlockStats> decode_blob(const std::uint8_t* data, std::size_t size);

// --- directory I/O ------------------------------------------------------------

// Writes manifest and blobs into `dir` (created if missing). Throws DataError
// on invalid records (empty blocks, accuracy outside [0,1], duplicate ids,
// ids unusable as file names).
void write_dataset(const std::vector<NetworkRecord>& records,
                   const std::filesystem::path& dir);

// Streams records one at a time; only the manifest is held in memory.
class DatasetReader {
 public:
  // Parses and checks the manifest. Throws FormatError / ManifestMismatch.
  explicit DatasetReader(std::filesystem::path dir);

  const std::vector<RecordInfo>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  // Reads, decodes and cross-checks one blob against its manifest entry.
  NetworkRecord load(std::size_t i) const;

 private:
  std::filesystem::path dir_;
  std::vector<RecordInfo> records_;
};

struct TaskDataset {
  std::map<std::string, std::vector<NetworkRecord>> spaces;

  std::size_t total_records() const;
  std::vector<std::string> ids() const;
};

// Loads every record (opt-in preload).
TaskDataset read_dataset(const std::filesystem::path& dir);
TaskDataset make_task_dataset(std::vector<NetworkRecord> records);

struct SpaceSample {
  std::string space;
  std::vector<const NetworkRecord*> records;
};

// s distinct spaces, then k records without replacement from each. Spaces are
// returned in sampling order. Throws InsufficientSpaces / InsufficientRecords.
std::vector<SpaceSample> sample_fitness_batch(const TaskDataset& td, std::size_t s,
                                              std::size_t k, Rng& rng);

}  // namespace zcforge

#endif  // ZCFORGE_DATASET_HPP_
