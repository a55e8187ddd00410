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

// Proxy programs: expression trees whose leaves are statistic slots and
// whose internal nodes are primitives. The same tree is applied to every
// block of a network; the per-block outputs are reduced to scalars
// (`to_scalar`) and then aggregated into the network score.
//
// Text format:
//
//   # zcforge-program to_scalar=mean aggregation=mean
//   (abs (eltwise_mul T3 T3G_D))
//
// The header is optional when parsing (defaults: mean/mean). A corpus file is
// a sequence of such programs, each header carrying a `name=` field.

#ifndef ZCFORGE_PROGRAM_HPP_
#define ZCFORGE_PROGRAM_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "zcforge/block_stats.hpp"
#include "zcforge/primitives.hpp"
#include "zcforge/rng.hpp"

namespace zcforge {

enum class ToScalar : std::uint8_t { kMean, kL2 };
enum class Aggregation : std::uint8_t { kMean };

std::string_view to_scalar_name(ToScalar t);
std::optional<ToScalar> to_scalar_from_name(std::string_view name);

// Tree depth counts edges: a lone terminal has depth 0, (op T3) depth 1.
inline constexpr int kMinTreeDepth = 2;
inline constexpr int kMaxTreeDepth = 10;

struct Node {
  bool terminal = true;
  std::uint8_t code = 0;  // StatSlot for terminals, Op otherwise

  static Node slot(StatSlot s) { return {true, static_cast<std::uint8_t>(s)}; }
  static Node op(Op o) { return {false, static_cast<std::uint8_t>(o)}; }
  StatSlot as_slot() const { return static_cast<StatSlot>(code); }
  Op as_op() const { return static_cast<Op>(code); }
  int arity() const { return terminal ? 0 : ::zcforge::arity(as_op()); }

  bool operator==(const Node&) const = default;
};

// Immutable tree stored in prefix order.
class ExprProgram {
 public:
  // Throws std::invalid_argument when `prefix` is not exactly one tree.
  explicit ExprProgram(std::vector<Node> prefix,
                       ToScalar to_scalar = ToScalar::kMean,
                       Aggregation aggregation = Aggregation::kMean);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  int depth() const { return depth_; }
  ToScalar to_scalar() const { return to_scalar_; }
  Aggregation aggregation() const { return aggregation_; }

  // One past the last node of the subtree rooted at `i`.
  std::size_t subtree_end(std::size_t i) const;
  // Depth of every node (root = 0).
  std::vector<int> node_depths() const;

  ExprProgram with_to_scalar(ToScalar t) const;
  // Copy with nodes [i, subtree_end(i)) replaced by `subtree`.
  ExprProgram replace_subtree(std::size_t i, std::span<const Node> subtree) const;
  std::span<const Node> subtree(std::size_t i) const;

  bool operator==(const ExprProgram& o) const {
    return nodes_ == o.nodes_ && to_scalar_ == o.to_scalar_ &&
           aggregation_ == o.aggregation_;
  }

 private:
  std::vector<Node> nodes_;
  ToScalar to_scalar_;
  Aggregation aggregation_;
  int depth_;
};

// --- generation and variation ---------------------------------------------

// Grow-style subtree: a target height is drawn uniformly from [min, max];
// below `min` only primitives are placed, at the target height only
// terminals, and in between a node is a terminal with probability
// 22 / (22 + 34). Primitives and slots are chosen uniformly. 0 <= min <= max.
std::vector<Node> grow_subtree(Rng& rng, int min_depth, int max_depth);

// Requires 2 <= min_depth <= max_depth <= 10 (std::invalid_argument
// otherwise).
ExprProgram random_tree(Rng& rng, int min_depth = kMinTreeDepth,
                        int max_depth = kMaxTreeDepth,
                        ToScalar to_scalar = ToScalar::kMean);

// Maximum number of extra draws when a variation lands outside the depth
// bounds; afterwards the first parent is returned unchanged.
inline constexpr int kVariationRetries = 8;

// Subtree crossover with uniformly chosen points (terminals included);
// returns the first child only.
ExprProgram crossover(const ExprProgram& a, const ExprProgram& b, Rng& rng);
// Child of `a` with its subtree at `i` replaced by b's subtree at `j`. No
// depth check.
ExprProgram crossover_at(const ExprProgram& a, const ExprProgram& b,
                         std::size_t i, std::size_t j);

// Height cap of the subtree grown by mutation (further limited by the depth
// budget left below the chosen node).
inline constexpr int kMutationMaxHeight = 2;

// Replaces one uniformly chosen subtree with a grown one of height
// 0..min(kMutationMaxHeight, budget).
ExprProgram mutate(const ExprProgram& a, Rng& rng);
ExprProgram mutate_at(const ExprProgram& a, std::size_t i, Rng& rng);

// --- evaluation -------------------------------------------------------------

// Raw tree output on one block. Throws ExecutionFailure (including when a
// terminal resolves to an empty tensor).
Tensor evaluate_tree(const ExprProgram& p, const BlockStats& block);

// evaluate_tree followed by to_scalar, rounded to float32. nullopt when
// evaluation fails or the scalar is not finite.
std::optional<double> block_scalar(const ExprProgram& p, const BlockStats& block);

// True iff every probe block yields a finite scalar and so does their
// aggregate. An empty probe is never valid.
bool check_validity(const ExprProgram& p, std::span<const BlockStats> probe);

// --- text format ------------------------------------------------------------

std::string format_expression(const ExprProgram& p);  // body only
std::string format_program(const ExprProgram& p);     // header + body
// Throws ParseError.
ExprProgram parse_program(std::string_view text);

struct NamedProgram {
  std::string name;
  ExprProgram program;
};

std::string format_corpus(std::span<const NamedProgram> programs);
std::vector<NamedProgram> parse_corpus(std::string_view text);

// synflow, snip and fisher written with eltwise_mul, abs and square.
std::vector<NamedProgram> baseline_proxies();

}  // namespace zcforge

#endif  // ZCFORGE_PROGRAM_HPP_
