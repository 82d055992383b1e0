// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Add/sub data-flow graphs for one ternary linear system.

#ifndef RTAP_DFG_H
#define RTAP_DFG_H

#include "rtap/lowering.h"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rtap {

struct Interval {
  int64_t lo = 0;
  int64_t hi = 0;
  bool operator==(const Interval &) const = default;
};

/// Smallest two's-complement width holding every value of `r` (>= 1).
int twos_complement_width(Interval r);

enum class NodeKind { Input, Zero, Add, Sub };

/// add: lhs + rhs, sub: lhs - rhs. Inputs carry the patch slot they read.
struct DfgNode {
  int id = 0;
  NodeKind kind = NodeKind::Input;
  int slot = -1;
  int lhs = -1;
  int rhs = -1;
  Interval range;
  int width = 0;
  int use_count = 0; // op consumers plus output references

  bool is_op() const { return kind == NodeKind::Add || kind == NodeKind::Sub; }
};

/// Output row r reads `node`, negated when sign < 0.
struct OutputTag {
  int node = 0;
  int sign = 1;
  bool operator==(const OutputTag &) const = default;
};

/// Nodes are topologically ordered; nodes [0, slots) are the inputs.
struct DataFlowGraph {
  int channel = 0;
  int slots = 0;
  std::vector<DfgNode> nodes;
  std::vector<OutputTag> outputs;

  int op_count() const;
  /// Number of op nodes consuming node `id`.
  int op_uses(int id) const;
  /// Id of the constant-zero node, or -1.
  int zero_node() const;
};

/// Left-to-right add/sub chain per row, no sharing.
DataFlowGraph build_dfg(const LinearSystem &sys);

/// Greedy signed-pair extraction over the rows of `g`; a pattern and its
/// negation count as the same subexpression. Never increases op_count.
DataFlowGraph eliminate_common_subexpressions(const DataFlowGraph &g);

/// Interval propagation from the input range; sets range and width of every
/// node (constant zero gets [0, 0]).
DataFlowGraph annotate_bitwidths(const DataFlowGraph &g, Interval input_range);

/// Convenience: [0, 2^bits - 1].
Interval activation_range(int bits);

std::vector<int64_t> dfg_evaluate(const DataFlowGraph &g,
                                  std::span<const int64_t> patch);

/// Value of every node for one patch.
std::vector<int64_t> dfg_node_values(const DataFlowGraph &g,
                                     std::span<const int64_t> patch);

/// Coefficient of every input slot in every output row, recovered
/// symbolically. Equal forms mean equal functions.
std::vector<std::vector<int64_t>> dfg_linear_forms(const DataFlowGraph &g);

/// One node per line: id, kind, operands, range, width, uses; then outputs.
std::string dump_dfg(const DataFlowGraph &g);

} // namespace rtap

#endif // RTAP_DFG_H
