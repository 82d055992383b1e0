// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Mapping of data-flow graphs onto associative processors: per-channel
// macro schedules, column allocation, layer placement, the cross-AP adder
// tree, and program emission.

#ifndef RTAP_SCHED_H
#define RTAP_SCHED_H

#include "rtap/dfg.h"
#include "rtap/program.h"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rtap {

/// One step of a channel schedule over virtual columns (vregs).
///
/// Define computes an op node: B op A, in place on b_vreg or into dest_vregs
/// (one per consumer when the value is used by several ops). Accumulate adds
/// or subtracts a node's value into output row `row`'s accumulator.
struct ChannelStep {
  enum Kind : uint8_t { Define, Accumulate };

  Kind kind = Define;
  int node = -1;
  OpKind op = OpKind::Add;
  Addressing addressing = Addressing::OutOfPlace;
  int a_node = -1;
  int a_vreg = -1; // -1: a graph input (patch column)
  int b_node = -1;
  int b_vreg = -1;
  std::vector<int> dest_vregs;
  int width = 0;
  int row = -1;
};

struct ChannelPlan {
  std::vector<ChannelStep> steps;
  /// Macro width of every node: its annotated width, widened to cover the
  /// in-place consumers that reuse its column.
  std::vector<int> macro_width;
  /// vreg -> [first step, last step] it holds a live value.
  std::vector<std::pair<int, int>> live;
  int vregs() const { return static_cast<int>(live.size()); }
};

/// Orders definitions topologically, accumulating each output row as soon
/// as its node exists. Values with several op consumers get one copy per
/// consumer; an op runs in place when an operand it owns can take the
/// result.
ChannelPlan plan_channel(const DataFlowGraph &g);

struct AllocationResult {
  /// vreg -> color (temp column offset); colors >= budget are spills.
  std::vector<int> color;
  int colors = 0;
  int spills = 0;
  bool ok() const { return spills == 0; }
};

/// Greedy largest-degree-first coloring of the vreg interference graph.
AllocationResult allocate_columns(const ChannelPlan &plan, int budget);
AllocationResult allocate_columns(const DataFlowGraph &g, int budget);

/// Empty when no two interfering vregs share a color.
std::optional<std::string> check_allocation(const ChannelPlan &plan,
                                            const AllocationResult &alloc);

/// in_place iff the result can overwrite an operand this op owns.
Addressing choose_addressing(const DataFlowGraph &g, int node);

/// Row/channel/tile split of one conv layer, before column allocation.
LayerPlacement place_layer(const LayerShape &shape, const QuantSpec &q,
                           const ApGeometry &geo, int tiles = 1);

/// Binary adder tree over channel groups; level l pairs (dst, src) indices.
struct AccumulationSchedule {
  std::vector<std::vector<std::pair<int, int>>> levels;
  int depth() const { return static_cast<int>(levels.size()); }
  int moves() const;
};

AccumulationSchedule schedule_accumulation(int channel_groups);

/// Lowers, optimizes (for UnrollCse), places and emits every layer. Throws
/// CapacityError when a layer cannot be mapped onto `geo`.
ApProgram emit_program(const TernaryNetwork &net, const ApGeometry &geo,
                       OptLevel opt);

} // namespace rtap

#endif // RTAP_SCHED_H
