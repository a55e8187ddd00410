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

#include "zcforge/program.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace zcforge {

std::string_view to_scalar_name(ToScalar t) {
  return t == ToScalar::kMean ? "mean" : "l2";
}

std::optional<ToScalar> to_scalar_from_name(std::string_view name) {
  if (name == "mean") return ToScalar::kMean;
  if (name == "l2") return ToScalar::kL2;
  return std::nullopt;
}

// --- ExprProgram ------------------------------------------------------------

ExprProgram::ExprProgram(std::vector<Node> prefix, ToScalar to_scalar,
                         Aggregation aggregation)
    : nodes_(std::move(prefix)), to_scalar_(to_scalar), aggregation_(aggregation) {
  if (nodes_.empty()) throw std::invalid_argument("empty expression tree");
  // Walk the prefix sequence with a stack of pending child counts.
  std::vector<int> pending;
  int max_depth = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (!n.terminal && n.code >= kNumPrimitives) {
      throw std::invalid_argument("unknown primitive id in tree");
    }
    if (n.terminal && n.code >= kNumSlots) {
      throw std::invalid_argument("unknown slot id in tree");
    }
    if (i > 0) {
      if (pending.empty()) throw std::invalid_argument("trailing nodes after tree");
      --pending.back();
    }
    const int depth = static_cast<int>(pending.size());
    max_depth = std::max(max_depth, depth);
    if (n.arity() > 0) pending.push_back(n.arity());
    while (!pending.empty() && pending.back() == 0) pending.pop_back();
  }
  if (!pending.empty()) throw std::invalid_argument("truncated expression tree");
  depth_ = max_depth;
}

std::size_t ExprProgram::subtree_end(std::size_t i) const {
  std::size_t need = 1;
  while (need > 0) {
    need += static_cast<std::size_t>(nodes_.at(i).arity());
    --need;
    ++i;
  }
  return i;
}

std::vector<int> ExprProgram::node_depths() const {
  std::vector<int> depths(nodes_.size());
  std::vector<int> pending;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (i > 0) --pending.back();
    depths[i] = static_cast<int>(pending.size());
    if (nodes_[i].arity() > 0) pending.push_back(nodes_[i].arity());
    while (!pending.empty() && pending.back() == 0) pending.pop_back();
  }
  return depths;
}

ExprProgram ExprProgram::with_to_scalar(ToScalar t) const {
  return ExprProgram(nodes_, t, aggregation_);
}

std::span<const Node> ExprProgram::subtree(std::size_t i) const {
  return std::span<const Node>(nodes_).subspan(i, subtree_end(i) - i);
}

ExprProgram ExprProgram::replace_subtree(std::size_t i,
                                         std::span<const Node> subtree) const {
  const std::size_t end = subtree_end(i);
  std::vector<Node> out;
  out.reserve(nodes_.size() - (end - i) + subtree.size());
  out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
  out.insert(out.end(), subtree.begin(), subtree.end());
  out.insert(out.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
  return ExprProgram(std::move(out), to_scalar_, aggregation_);
}

// --- generation ---------------------------------------------------------------

namespace {

constexpr double kTerminalRatio =
    static_cast<double>(kNumSlots) / (kNumSlots + kNumPrimitives);

void grow_into(Rng& rng, int depth, int min_depth, int height,
               std::vector<Node>& out) {
  const bool leaf =
      depth >= height || (depth >= min_depth && uniform01(rng) < kTerminalRatio);
  if (leaf) {
    out.push_back(Node::slot(static_cast<StatSlot>(uniform_index(rng, kNumSlots))));
    return;
  }
  const Op op = static_cast<Op>(uniform_index(rng, kNumPrimitives));
  out.push_back(Node::op(op));
  for (int c = 0; c < arity(op); ++c) grow_into(rng, depth + 1, min_depth, height, out);
}

bool depth_ok(const ExprProgram& p) {
  return p.depth() >= kMinTreeDepth && p.depth() <= kMaxTreeDepth;
}

}  // namespace

std::vector<Node> grow_subtree(Rng& rng, int min_depth, int max_depth) {
  if (min_depth < 0 || min_depth > max_depth) {
    throw std::invalid_argument("grow_subtree needs 0 <= min <= max");
  }
  const int height = std::uniform_int_distribution<int>(min_depth, max_depth)(rng);
  std::vector<Node> out;
  grow_into(rng, 0, min_depth, height, out);
  return out;
}

ExprProgram random_tree(Rng& rng, int min_depth, int max_depth, ToScalar to_scalar) {
  if (min_depth < kMinTreeDepth || max_depth > kMaxTreeDepth || min_depth > max_depth) {
    throw std::invalid_argument("random_tree needs 2 <= min_depth <= max_depth <= 10");
  }
  return ExprProgram(grow_subtree(rng, min_depth, max_depth), to_scalar);
}

ExprProgram crossover_at(const ExprProgram& a, const ExprProgram& b, std::size_t i,
                         std::size_t j) {
  return a.replace_subtree(i, b.subtree(j));
}

ExprProgram crossover(const ExprProgram& a, const ExprProgram& b, Rng& rng) {
  for (int attempt = 0; attempt <= kVariationRetries; ++attempt) {
    const std::size_t i = uniform_index(rng, a.size());
    const std::size_t j = uniform_index(rng, b.size());
    ExprProgram child = crossover_at(a, b, i, j);
    if (depth_ok(child)) return child;
  }
  return a;
}

ExprProgram mutate_at(const ExprProgram& a, std::size_t i, Rng& rng) {
  const int node_depth = a.node_depths().at(i);
  const int height = std::min(kMutationMaxHeight, kMaxTreeDepth - node_depth);
  const std::vector<Node> sub = grow_subtree(rng, 0, height);
  return a.replace_subtree(i, sub);
}

ExprProgram mutate(const ExprProgram& a, Rng& rng) {
  for (int attempt = 0; attempt <= kVariationRetries; ++attempt) {
    ExprProgram child = mutate_at(a, uniform_index(rng, a.size()), rng);
    if (depth_ok(child)) return child;
  }
  return a;
}

// --- evaluation -------------------------------------------------------------

namespace {

Tensor eval_node(const std::vector<Node>& nodes, std::size_t& pos,
                 const BlockStats& block) {
  const Node n = nodes[pos++];
  if (n.terminal) {
    const Tensor& t = block[n.as_slot()];
    if (t.numel() == 0) {
      throw ExecutionFailure(std::string(slot_name(n.as_slot())) + " is empty");
    }
    return t;
  }
  const Op op = n.as_op();
  if (arity(op) == 1) {
    const Tensor a = eval_node(nodes, pos, block);
    return eval_primitive(op, a);
  }
  const Tensor a = eval_node(nodes, pos, block);
  const Tensor b = eval_node(nodes, pos, block);
  return eval_primitive(op, a, b);
}

}  // namespace

Tensor evaluate_tree(const ExprProgram& p, const BlockStats& block) {
  std::size_t pos = 0;
  return eval_node(p.nodes(), pos, block);
}

std::optional<double> block_scalar(const ExprProgram& p, const BlockStats& block) {
  Tensor out;
  try {
    out = evaluate_tree(p, block);
  } catch (const ExecutionFailure&) {
    return std::nullopt;
  }
  double v;
  if (out.rank() == 0) {
    v = out.item();
  } else if (out.numel() == 0) {
    return std::nullopt;
  } else if (p.to_scalar() == ToScalar::kMean) {
    double s = 0.0;
    for (float x : out.data()) s += x;
    v = s / static_cast<double>(out.numel());
  } else {
    double s = 0.0;
    for (float x : out.data()) s += static_cast<double>(x) * x;
    v = std::sqrt(s);
  }
  const float f = static_cast<float>(v);
  if (!std::isfinite(f)) return std::nullopt;
  return static_cast<double>(f);
}

bool check_validity(const ExprProgram& p, std::span<const BlockStats> probe) {
  if (probe.empty()) return false;
  double sum = 0.0;
  for (const BlockStats& b : probe) {
    const auto s = block_scalar(p, b);
    if (!s) return false;
    sum += *s;
  }
  return std::isfinite(sum / static_cast<double>(probe.size()));
}

// --- text format ------------------------------------------------------------

namespace {

void format_node(const std::vector<Node>& nodes, std::size_t& pos, std::string& out) {
  const Node n = nodes[pos++];
  if (n.terminal) {
    out += slot_name(n.as_slot());
    return;
  }
  out += '(';
  out += primitive_name(n.as_op());
  for (int c = 0; c < n.arity(); ++c) {
    out += ' ';
    format_node(nodes, pos, out);
  }
  out += ')';
}

std::string header_line(const ExprProgram& p, std::string_view name) {
  std::string h = "# zcforge-program";
  if (!name.empty()) {
    h += " name=";
    h += name;
  }
  h += " to_scalar=";
  h += to_scalar_name(p.to_scalar());
  h += " aggregation=mean\n";
  return h;
}

class Parser {
 public:
  Parser(std::string_view text, std::size_t base) : text_(text), base_(base) {}

  struct Header {
    std::string name;
    ToScalar to_scalar = ToScalar::kMean;
  };

  // Consumes '#' lines and blank space before the body.
  Header parse_headers() {
    Header h;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] != '#') return h;
      const std::size_t eol = std::min(text_.find('\n', pos_), text_.size());
      parse_header_fields(text_.substr(pos_ + 1, eol - pos_ - 1), pos_ + 1, h);
      pos_ = eol;
    }
  }

  std::vector<Node> parse_body() {
    skip_space();
    std::vector<Node> nodes;
    parse_expr(nodes, 0);
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return nodes;
  }

 private:
  [[noreturn]] void fail(const std::string& why) const { fail_at(why, pos_); }
  [[noreturn]] void fail_at(const std::string& why, std::size_t pos) const {
    throw ParseError(why, base_ + pos);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  std::string_view read_atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != '(' && text_[pos_] != ')') {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  void parse_header_fields(std::string_view line, std::size_t offset, Header& h) {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      const std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      const std::string_view tok = line.substr(start, i - start);
      if (tok.empty() || tok == "zcforge-program") continue;
      const auto eq = tok.find('=');
      if (eq == std::string_view::npos) {
        fail_at("header field '" + std::string(tok) + "' is not key=value", offset + start);
      }
      const std::string_view key = tok.substr(0, eq);
      const std::string_view value = tok.substr(eq + 1);
      if (key == "name") {
        h.name = std::string(value);
      } else if (key == "to_scalar") {
        const auto t = to_scalar_from_name(value);
        if (!t) fail_at("unknown to_scalar '" + std::string(value) + "'", offset + start);
        h.to_scalar = *t;
      } else if (key == "aggregation") {
        if (value != "mean") {
          fail_at("unknown aggregation '" + std::string(value) + "'", offset + start);
        }
      } else {
        fail_at("unknown header key '" + std::string(key) + "'", offset + start);
      }
    }
  }

  void parse_expr(std::vector<Node>& nodes, int depth) {
    if (depth > kMaxTreeDepth) fail("tree deeper than " + std::to_string(kMaxTreeDepth));
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (text_[pos_] == ')') fail("unexpected ')'");
    if (text_[pos_] != '(') {
      const std::size_t at = pos_;
      const std::string_view atom = read_atom();
      const auto slot = slot_from_name(atom);
      if (!slot) fail_at("unknown statistic slot '" + std::string(atom) + "'", at);
      nodes.push_back(Node::slot(*slot));
      return;
    }
    const std::size_t open = pos_++;
    skip_space();
    const std::size_t at = pos_;
    const std::string_view name = read_atom();
    const auto op = primitive_from_name(name);
    if (!op) fail_at("unknown primitive '" + std::string(name) + "'", at);
    nodes.push_back(Node::op(*op));
    int children = 0;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) fail_at("unclosed '('", open);
      if (text_[pos_] == ')') break;
      if (children == arity(*op)) {
        fail(std::string(name) + " takes " + std::to_string(arity(*op)) + " argument(s)");
      }
      parse_expr(nodes, depth + 1);
      ++children;
    }
    if (children != arity(*op)) {
      fail(std::string(name) + " takes " + std::to_string(arity(*op)) +
           " argument(s), got " + std::to_string(children));
    }
    ++pos_;  // ')'
  }

  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

ExprProgram parse_one(std::string_view text, std::size_t base, std::string* name) {
  Parser parser(text, base);
  const Parser::Header h = parser.parse_headers();
  std::vector<Node> nodes = parser.parse_body();
  if (name) *name = h.name;
  return ExprProgram(std::move(nodes), h.to_scalar);
}

}  // namespace

std::string format_expression(const ExprProgram& p) {
  std::string out;
  std::size_t pos = 0;
  format_node(p.nodes(), pos, out);
  return out;
}

std::string format_program(const ExprProgram& p) {
  return header_line(p, "") + format_expression(p) + "\n";
}

ExprProgram parse_program(std::string_view text) {
  return parse_one(text, 0, nullptr);
}

std::string format_corpus(std::span<const NamedProgram> programs) {
  std::string out;
  for (const auto& np : programs) {
    out += header_line(np.program, np.name);
    out += format_expression(np.program);
    out += '\n';
  }
  return out;
}

std::vector<NamedProgram> parse_corpus(std::string_view text) {
  // Split at lines starting with '#': each chunk is one program.
  std::vector<std::size_t> starts;
  std::size_t line = 0;
  while (line < text.size()) {
    std::size_t p = line;
    while (p < text.size() && (text[p] == ' ' || text[p] == '\t')) ++p;
    if (p < text.size() && text[p] == '#') starts.push_back(line);
    const std::size_t eol = text.find('\n', line);
    if (eol == std::string_view::npos) break;
    line = eol + 1;
  }
  std::vector<NamedProgram> out;
  if (starts.empty()) {
    bool blank = true;
    for (char c : text) blank = blank && std::isspace(static_cast<unsigned char>(c));
    if (!blank) throw ParseError("corpus entry lacks a '#' header", 0);
    return out;
  }
  for (char c : text.substr(0, starts.front())) {
    if (!std::isspace(static_cast<unsigned char>(c))) {
      throw ParseError("corpus entry lacks a '#' header", 0);
    }
  }
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::size_t begin = starts[k];
    // Consecutive header lines belong to the same entry.
    if (k + 1 < starts.size()) {
      const std::string_view between = text.substr(begin, starts[k + 1] - begin);
      const auto nl = between.find('\n');
      bool only_header = true;
      for (char c : between.substr(nl + 1)) {
        only_header = only_header && std::isspace(static_cast<unsigned char>(c));
      }
      if (only_header) {
        throw ParseError("corpus entry has no expression", begin);
      }
    }
    const std::size_t end = k + 1 < starts.size() ? starts[k + 1] : text.size();
    std::string name;
    ExprProgram p = parse_one(text.substr(begin, end - begin), begin, &name);
    if (name.empty()) throw ParseError("corpus entry lacks name=", begin);
    out.push_back({std::move(name), std::move(p)});
  }
  return out;
}

std::vector<NamedProgram> baseline_proxies() {
  using S = StatSlot;
  auto abs_mul = [](S x, S y) {
    return ExprProgram({Node::op(Op::kAbs), Node::op(Op::kEltwiseMul), Node::slot(x),
                        Node::slot(y)});
  };
  return {
      {"synflow", abs_mul(S::kT3, S::kT3G_N)},
      {"snip", abs_mul(S::kT3, S::kT3G_D)},
      {"fisher", ExprProgram({Node::op(Op::kSquare), Node::op(Op::kEltwiseMul),
                              Node::slot(S::kT4_D), Node::slot(S::kT4G_D)})},
  };
}

}  // namespace zcforge
