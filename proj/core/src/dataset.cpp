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

#include "zcforge/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace zcforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'E', 'Z', 'T', '1'};
constexpr const char* kManifestFormat = "zcforge-dataset";
constexpr int kManifestVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

class Cursor {
 public:
  Cursor(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ == size_; }

  const std::uint8_t* take(std::size_t n, const char* what) {
    if (size_ - pos_ < n) {
      throw FormatError(std::string("truncated blob while reading ") + what, pos_);
    }
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::uint32_t u32(const char* what) { return get_u32(take(4, what)); }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

bool valid_id(const std::string& id) {
  if (id.empty() || id.size() > 200 || id.front() == '.') return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ManifestMismatch("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const fs::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw DataError("cannot write " + path.string());
}

template <typename T>
T field(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ManifestMismatch(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ManifestMismatch(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_blob(const std::vector<BlockStats>& blocks) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  for (const BlockStats& b : blocks) {
    for (int s = 0; s < kNumSlots; ++s) {
      const StatSlot slot = static_cast<StatSlot>(s);
      const Tensor& t = b[slot];
      const std::string_view name = slot_name(slot);
      put_u32(out, static_cast<std::uint32_t>(name.size()));
      out.insert(out.end(), name.begin(), name.end());
      put_u32(out, b.block_index);
      put_u32(out, static_cast<std::uint32_t>(t.rank()));
      for (std::size_t e : t.shape()) put_u32(out, static_cast<std::uint32_t>(e));
      for (float f : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
  }
  return out;
}

std::vector<BlockStats> decode_blob(const std::uint8_t* data, std::size_t size) {
  Cursor c(data, size);
  if (std::memcmp(c.take(4, "magic"), kMagic, 4) != 0) {
    throw FormatError("bad magic, expected EZT1", 0);
  }
  std::map<std::uint32_t, BlockStats> blocks;
  std::map<std::uint32_t, std::array<bool, kNumSlots>> seen;
  while (!c.done()) {
    const std::size_t start = c.pos();
    const std::uint32_t name_len = c.u32("name length");
    if (name_len == 0 || name_len > 64) {
      throw FormatError("implausible slot name length " + std::to_string(name_len), start);
    }
    const std::uint8_t* name_bytes = c.take(name_len, "slot name");
    const std::string name(reinterpret_cast<const char*>(name_bytes), name_len);
    const auto slot = slot_from_name(name);
    if (!slot) throw FormatError("unknown slot name '" + name + "'", start + 4);
    const std::uint32_t block = c.u32("block index");
    const std::size_t rank_at = c.pos();
    const std::uint32_t rank = c.u32("rank");
    if (rank > kMaxRank) {
      throw FormatError("rank " + std::to_string(rank) + " exceeds 4", rank_at);
    }
    Shape shape(rank);
    std::uint64_t numel = 1;
    for (auto& e : shape) {
      e = c.u32("extent");
      numel *= e;
    }
    if (numel > (size - c.pos()) / 4) {
      throw FormatError("truncated blob while reading tensor data", c.pos());
    }
    const std::uint8_t* payload = c.take(static_cast<std::size_t>(numel) * 4, "tensor data");
    std::vector<float> values(static_cast<std::size_t>(numel));
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] = std::bit_cast<float>(get_u32(payload + 4 * i));
    }
    auto& flags = seen[block];
    const auto si = static_cast<std::size_t>(*slot);
    if (flags[si]) {
      throw FormatError("duplicate tensor " + name + " for block " + std::to_string(block),
                        start);
    }
    flags[si] = true;
    BlockStats& bs = blocks[block];
    bs.block_index = block;
    bs[*slot] = Tensor(std::move(shape), std::move(values));
  }
  std::vector<BlockStats> out;
  std::uint32_t expect = 0;
  for (auto& [index, bs] : blocks) {
    if (index != expect) {
      throw FormatError("block indices are not contiguous from 0 (missing block " +
                            std::to_string(expect) + ")",
                        size);
    }
    const auto& flags = seen[index];
    for (int s = 0; s < kNumSlots; ++s) {
      if (!flags[static_cast<std::size_t>(s)]) {
        throw FormatError("block " + std::to_string(index) + " lacks " +
                              std::string(slot_name(static_cast<StatSlot>(s))),
                          size);
      }
    }
    out.push_back(std::move(bs));
    ++expect;
  }
  return out;
}

void write_dataset(const std::vector<NetworkRecord>& records, const fs::path& dir) {
  std::set<std::string> ids;
  for (const auto& r : records) {
    if (!valid_id(r.id)) throw DataError("record id '" + r.id + "' is not a valid file name");
    if (!ids.insert(r.id).second) throw DataError("duplicate record id '" + r.id + "'");
    if (!(r.accuracy >= 0.0 && r.accuracy <= 1.0)) {
      throw DataError("record " + r.id + ": accuracy outside [0,1]");
    }
    if (r.blocks.empty()) throw DataError("record " + r.id + " has no blocks");
    for (std::size_t b = 0; b < r.blocks.size(); ++b) {
      if (r.blocks[b].block_index != b) {
        throw DataError("record " + r.id + ": block indices must be 0..n-1 in order");
      }
    }
  }
  fs::create_directories(dir);
  json entries = json::array();
  for (const auto& r : records) {
    const std::vector<std::uint8_t> blob = encode_blob(r.blocks);
    const std::string name = r.id + ".ezt";
    write_file(dir / name, blob.data(), blob.size());
    entries.push_back({{"id", r.id},
                       {"space", r.space},
                       {"dataset_name", r.dataset_name},
                       {"accuracy", r.accuracy},
                       {"meta",
                        {{"params", r.meta.params},
                         {"flops", r.meta.flops},
                         {"arch", r.meta.arch}}},
                       {"blob", name},
                       {"offset", 0},
                       {"length", blob.size()},
                       {"num_blocks", r.blocks.size()}});
  }
  const json manifest = {
      {"format", kManifestFormat}, {"version", kManifestVersion}, {"records", entries}};
  const std::string text = manifest.dump(1) + "\n";
  write_file(dir / "manifest.json", text.data(), text.size());
}

DatasetReader::DatasetReader(fs::path dir) : dir_(std::move(dir)) {
  const fs::path path = dir_ / "manifest.json";
  if (!fs::exists(path)) throw ManifestMismatch("no manifest.json in " + dir_.string());
  const std::vector<std::uint8_t> bytes = read_file(path);
  json manifest;
  try {
    manifest = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("manifest.json is not valid JSON: ") + e.what(), e.byte);
  }
  if (!manifest.is_object()) throw ManifestMismatch("manifest.json: not an object");
  if (field<std::string>(manifest, "format", "manifest") != kManifestFormat) {
    throw ManifestMismatch("manifest.json: unknown format tag");
  }
  if (field<int>(manifest, "version", "manifest") != kManifestVersion) {
    throw ManifestMismatch("manifest.json: unsupported version");
  }
  const json records = manifest.value("records", json());
  if (!records.is_array()) throw ManifestMismatch("manifest.json: 'records' is not an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& e = records[i];
    const std::string where = "manifest record " + std::to_string(i);
    RecordInfo info;
    info.id = field<std::string>(e, "id", where);
    info.space = field<std::string>(e, "space", where);
    info.dataset_name = field<std::string>(e, "dataset_name", where);
    info.accuracy = field<double>(e, "accuracy", where);
    const json meta = e.value("meta", json::object());
    info.meta.params = meta.value("params", std::int64_t{0});
    info.meta.flops = meta.value("flops", std::int64_t{0});
    info.meta.arch = meta.value("arch", std::string());
    info.blob = field<std::string>(e, "blob", where);
    info.offset = field<std::uint64_t>(e, "offset", where);
    info.length = field<std::uint64_t>(e, "length", where);
    info.num_blocks = field<std::uint32_t>(e, "num_blocks", where);
    if (!valid_id(info.id)) throw ManifestMismatch(where + ": invalid id '" + info.id + "'");
    if (!ids.insert(info.id).second) {
      throw ManifestMismatch(where + ": duplicate id '" + info.id + "'");
    }
    if (!(info.accuracy >= 0.0 && info.accuracy <= 1.0)) {
      throw ManifestMismatch(where + " (" + info.id + "): accuracy " +
                             std::to_string(info.accuracy) + " outside [0,1]");
    }
    if (info.num_blocks == 0) throw ManifestMismatch(where + ": num_blocks is 0");
    if (!valid_id(info.blob)) throw ManifestMismatch(where + ": invalid blob name");
    records_.push_back(std::move(info));
  }
}

NetworkRecord DatasetReader::load(std::size_t i) const {
  const RecordInfo& info = records_.at(i);
  const fs::path path = dir_ / info.blob;
  if (!fs::exists(path)) throw ManifestMismatch("record " + info.id + ": blob missing");
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (info.offset > bytes.size() || info.length > bytes.size() - info.offset) {
    throw ManifestMismatch("record " + info.id + ": blob is " + std::to_string(bytes.size()) +
                           " bytes, manifest expects " +
                           std::to_string(info.offset + info.length));
  }
  NetworkRecord r;
  r.id = info.id;
  r.space = info.space;
  r.dataset_name = info.dataset_name;
  r.accuracy = info.accuracy;
  r.meta = info.meta;
  try {
    r.blocks = decode_blob(bytes.data() + info.offset, static_cast<std::size_t>(info.length));
  } catch (const FormatError& e) {
    throw FormatError(info.blob + ": " + e.what(), e.offset());
  }
  if (r.blocks.size() != info.num_blocks) {
    throw ManifestMismatch("record " + info.id + ": blob holds " +
                           std::to_string(r.blocks.size()) + " blocks, manifest says " +
                           std::to_string(info.num_blocks));
  }
  return r;
}

std::size_t TaskDataset::total_records() const {
  std::size_t n = 0;
  for (const auto& [_, v] : spaces) n += v.size();
  return n;
}

std::vector<std::string> TaskDataset::ids() const {
  std::vector<std::string> out;
  for (const auto& [_, v] : spaces) {
    for (const auto& r : v) out.push_back(r.id);
  }
  return out;
}

TaskDataset make_task_dataset(std::vector<NetworkRecord> records) {
  TaskDataset td;
  for (auto& r : records) td.spaces[r.space].push_back(std::move(r));
  return td;
}

TaskDataset read_dataset(const fs::path& dir) {
  DatasetReader reader(dir);
  std::vector<NetworkRecord> records;
  records.reserve(reader.size());
  for (std::size_t i = 0; i < reader.size(); ++i) records.push_back(reader.load(i));
  return make_task_dataset(std::move(records));
}

std::vector<SpaceSample> sample_fitness_batch(const TaskDataset& td, std::size_t s,
                                              std::size_t k, Rng& rng) {
  if (s == 0 || k == 0) throw InsufficientRecords("s and k must be positive");
  if (s > td.spaces.size()) {
    throw InsufficientSpaces("need " + std::to_string(s) + " spaces, dataset has " +
                             std::to_string(td.spaces.size()));
  }
  std::vector<const std::pair<const std::string, std::vector<NetworkRecord>>*> pools;
  for (const auto& entry : td.spaces) pools.push_back(&entry);
  // Partial Fisher-Yates for both draws.
  for (std::size_t i = 0; i < s; ++i) {
    std::swap(pools[i], pools[i + uniform_index(rng, pools.size() - i)]);
  }
  std::vector<SpaceSample> out;
  for (std::size_t i = 0; i < s; ++i) {
    const auto& [name, records] = *pools[i];
    if (k > records.size()) {
      throw InsufficientRecords("space " + name + " has " + std::to_string(records.size()) +
                                " records, need " + std::to_string(k));
    }
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    SpaceSample sample{name, {}};
    for (std::size_t j = 0; j < k; ++j) {
      std::swap(idx[j], idx[j + uniform_index(rng, idx.size() - j)]);
      sample.records.push_back(&records[idx[j]]);
    }
    out.push_back(std::move(sample));
  }
  return out;
}

}  // namespace zcforge
