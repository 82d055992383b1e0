// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/dfg.h"

#include "rtap/errors.h"

#include <algorithm>
#include <map>
#include <sstream>
#include <tuple>

namespace rtap {

int twos_complement_width(Interval r) {
  int w = 1;
  while (w < 63) {
    const int64_t lo = -(int64_t{1} << (w - 1));
    const int64_t hi = (int64_t{1} << (w - 1)) - 1;
    if (r.lo >= lo && r.hi <= hi)
      return w;
    ++w;
  }
  return w;
}

Interval activation_range(int bits) {
  return {0, (int64_t{1} << bits) - 1};
}

int DataFlowGraph::op_count() const {
  return static_cast<int>(std::count_if(
      nodes.begin(), nodes.end(), [](const DfgNode &n) { return n.is_op(); }));
}

int DataFlowGraph::op_uses(int id) const {
  int uses = 0;
  for (const DfgNode &n : nodes)
    if (n.is_op())
      uses += (n.lhs == id) + (n.rhs == id);
  return uses;
}

int DataFlowGraph::zero_node() const {
  for (const DfgNode &n : nodes)
    if (n.kind == NodeKind::Zero)
      return n.id;
  return -1;
}

namespace {

class GraphBuilder {
public:
  GraphBuilder(int channel, int slots) {
    g_.channel = channel;
    g_.slots = slots;
    for (int k = 0; k < slots; ++k) {
      DfgNode n;
      n.id = k;
      n.kind = NodeKind::Input;
      n.slot = k;
      g_.nodes.push_back(n);
    }
  }

  int zero() {
    if (zero_ < 0) {
      DfgNode n;
      n.id = static_cast<int>(g_.nodes.size());
      n.kind = NodeKind::Zero;
      zero_ = n.id;
      g_.nodes.push_back(n);
    }
    return zero_;
  }

  int op(NodeKind kind, int lhs, int rhs) {
    DfgNode n;
    n.id = static_cast<int>(g_.nodes.size());
    n.kind = kind;
    n.lhs = lhs;
    n.rhs = rhs;
    g_.nodes.push_back(n);
    return n.id;
  }

  /// a*sa + b*sb as one node with a sign, first operand kept positive.
  OutputTag combine(OutputTag a, OutputTag b) {
    if (a.sign > 0 && b.sign > 0)
      return {op(NodeKind::Add, a.node, b.node), 1};
    if (a.sign > 0)
      return {op(NodeKind::Sub, a.node, b.node), 1};
    if (b.sign > 0)
      return {op(NodeKind::Sub, b.node, a.node), 1};
    return {op(NodeKind::Add, a.node, b.node), -1};
  }

  /// Left-to-right chain over terms ordered by node id.
  OutputTag chain(const std::vector<OutputTag> &terms) {
    if (terms.empty())
      return {zero(), 1};
    OutputTag acc = terms.front();
    for (std::size_t i = 1; i < terms.size(); ++i)
      acc = combine(acc, terms[i]);
    return acc;
  }

  DataFlowGraph finish(std::vector<OutputTag> outputs) {
    g_.outputs = std::move(outputs);
    for (DfgNode &n : g_.nodes)
      n.use_count = 0;
    for (const DfgNode &n : g_.nodes)
      if (n.is_op()) {
        ++g_.nodes[n.lhs].use_count;
        ++g_.nodes[n.rhs].use_count;
      }
    for (const OutputTag &t : g_.outputs)
      ++g_.nodes[t.node].use_count;
    return std::move(g_);
  }

private:
  DataFlowGraph g_;
  int zero_ = -1;
};

} // namespace

DataFlowGraph build_dfg(const LinearSystem &sys) {
  GraphBuilder b(sys.channel, sys.cols);
  std::vector<OutputTag> outputs;
  for (int r = 0; r < sys.rows; ++r) {
    std::vector<OutputTag> terms;
    for (int k = 0; k < sys.cols; ++k)
      if (sys.at(r, k) != 0)
        terms.push_back({k, sys.at(r, k)});
    outputs.push_back(b.chain(terms));
  }
  return b.finish(std::move(outputs));
}

std::vector<std::vector<int64_t>> dfg_linear_forms(const DataFlowGraph &g) {
  std::vector<std::vector<int64_t>> form(g.nodes.size());
  for (const DfgNode &n : g.nodes) {
    std::vector<int64_t> &f = form[n.id];
    f.assign(static_cast<std::size_t>(g.slots), 0);
    switch (n.kind) {
    case NodeKind::Input:
      f[n.slot] = 1;
      break;
    case NodeKind::Zero:
      break;
    case NodeKind::Add:
    case NodeKind::Sub: {
      const int64_t s = n.kind == NodeKind::Add ? 1 : -1;
      for (int k = 0; k < g.slots; ++k)
        f[k] = form[n.lhs][k] + s * form[n.rhs][k];
      break;
    }
    }
  }
  std::vector<std::vector<int64_t>> rows;
  rows.reserve(g.outputs.size());
  for (const OutputTag &t : g.outputs) {
    std::vector<int64_t> f = form[t.node];
    for (int64_t &v : f)
      v *= t.sign;
    rows.push_back(std::move(f));
  }
  return rows;
}

DataFlowGraph eliminate_common_subexpressions(const DataFlowGraph &g) {
  const std::vector<std::vector<int64_t>> forms = dfg_linear_forms(g);
  for (const auto &f : forms)
    for (int64_t v : f)
      if (v < -1 || v > 1)
        return g; // not a ternary system; nothing this pass can do

  GraphBuilder b(g.channel, g.slots);
  // Each row is a signed sum over node ids, kept sorted by id.
  std::vector<std::map<int, int>> rows(forms.size());
  for (std::size_t r = 0; r < forms.size(); ++r)
    for (int k = 0; k < g.slots; ++k)
      if (forms[r][k] != 0)
        rows[r][k] = static_cast<int>(forms[r][k]);

  // Key (i, j, rel): terms x_i and x_j (i < j) with relative sign rel
  // (0: same sign, 1: opposite). x_i + x_j and -x_i - x_j share a key.
  using Key = std::tuple<int, int, int>;
  for (;;) {
    std::map<Key, int> counts;
    for (const auto &row : rows) {
      for (auto a = row.begin(); a != row.end(); ++a)
        for (auto c = std::next(a); c != row.end(); ++c)
          ++counts[{a->first, c->first, a->second == c->second ? 0 : 1}];
    }
    const Key *best = nullptr;
    int best_count = 1;
    for (const auto &[key, n] : counts)
      if (n > best_count) {
        best = &key;
        best_count = n;
      }
    if (!best)
      break;

    const auto [i, j, rel] = *best;
    const int t = b.op(rel == 0 ? NodeKind::Add : NodeKind::Sub, i, j);
    for (auto &row : rows) {
      auto a = row.find(i);
      auto c = row.find(j);
      if (a == row.end() || c == row.end())
        continue;
      if ((a->second == c->second ? 0 : 1) != rel)
        continue;
      const int sign = a->second;
      row.erase(a);
      row.erase(c);
      row[t] = sign;
    }
  }

  std::vector<OutputTag> outputs;
  outputs.reserve(rows.size());
  for (const auto &row : rows) {
    std::vector<OutputTag> terms;
    for (const auto &[node, sign] : row)
      terms.push_back({node, sign});
    outputs.push_back(b.chain(terms));
  }
  DataFlowGraph out = b.finish(std::move(outputs));
  if (out.op_count() > g.op_count())
    return g;
  return out;
}

DataFlowGraph annotate_bitwidths(const DataFlowGraph &g, Interval input_range) {
  DataFlowGraph out = g;
  for (DfgNode &n : out.nodes) {
    switch (n.kind) {
    case NodeKind::Input:
      n.range = input_range;
      break;
    case NodeKind::Zero:
      n.range = {0, 0};
      break;
    case NodeKind::Add: {
      const Interval a = out.nodes[n.lhs].range, b = out.nodes[n.rhs].range;
      n.range = {a.lo + b.lo, a.hi + b.hi};
      break;
    }
    case NodeKind::Sub: {
      const Interval a = out.nodes[n.lhs].range, b = out.nodes[n.rhs].range;
      n.range = {a.lo - b.hi, a.hi - b.lo};
      break;
    }
    }
    n.width = twos_complement_width(n.range);
  }
  return out;
}

std::vector<int64_t> dfg_node_values(const DataFlowGraph &g,
                                     std::span<const int64_t> patch) {
  if (static_cast<int>(patch.size()) != g.slots)
    throw ShapeError("patch length does not match the graph inputs");
  std::vector<int64_t> v(g.nodes.size(), 0);
  for (const DfgNode &n : g.nodes) {
    switch (n.kind) {
    case NodeKind::Input:
      v[n.id] = patch[n.slot];
      break;
    case NodeKind::Zero:
      v[n.id] = 0;
      break;
    case NodeKind::Add:
      v[n.id] = v[n.lhs] + v[n.rhs];
      break;
    case NodeKind::Sub:
      v[n.id] = v[n.lhs] - v[n.rhs];
      break;
    }
  }
  return v;
}

std::vector<int64_t> dfg_evaluate(const DataFlowGraph &g,
                                  std::span<const int64_t> patch) {
  const std::vector<int64_t> v = dfg_node_values(g, patch);
  std::vector<int64_t> y;
  y.reserve(g.outputs.size());
  for (const OutputTag &t : g.outputs)
    y.push_back(t.sign * v[t.node]);
  return y;
}

std::string dump_dfg(const DataFlowGraph &g) {
  std::ostringstream os;
  os << "dfg channel=" << g.channel << " slots=" << g.slots
     << " ops=" << g.op_count() << "\n";
  for (const DfgNode &n : g.nodes) {
    os << 'n' << n.id << ' ';
    switch (n.kind) {
    case NodeKind::Input:
      os << "input x" << n.slot;
      break;
    case NodeKind::Zero:
      os << "zero";
      break;
    case NodeKind::Add:
      os << "add n" << n.lhs << " n" << n.rhs;
      break;
    case NodeKind::Sub:
      os << "sub n" << n.lhs << " n" << n.rhs;
      break;
    }
    os << " [" << n.range.lo << ',' << n.range.hi << "] w" << n.width
       << " uses " << n.use_count << "\n";
  }
  for (std::size_t r = 0; r < g.outputs.size(); ++r)
    os << 'y' << r << " = " << (g.outputs[r].sign < 0 ? "-" : "+") << 'n'
       << g.outputs[r].node << "\n";
  return os.str();
}

} // namespace rtap
