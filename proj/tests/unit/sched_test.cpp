// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/errors.h"
#include "rtap/sched.h"
#include "support.h"

#include <doctest.h>

using namespace rtap;
using rtap::test::kEq1;

TEST_SUITE_BEGIN("sched");

namespace {

DataFlowGraph eq1_graph() {
  return annotate_bitwidths(
      eliminate_common_subexpressions(build_dfg(make_system(6, 6, kEq1))),
      activation_range(4));
}

/// Replays a channel plan on integers, one value per vreg, and returns the
/// accumulated rows.
std::vector<int64_t> replay(const DataFlowGraph &g, const ChannelPlan &plan,
                            const std::vector<int64_t> &x) {
  std::vector<int64_t> vreg(static_cast<std::size_t>(plan.vregs()), 0);
  std::vector<int64_t> rows(g.outputs.size(), 0);
  auto value = [&](int node, int v) {
    if (v >= 0)
      return vreg[v];
    const DfgNode &n = g.nodes[node];
    return n.kind == NodeKind::Input ? x[n.slot] : int64_t{0};
  };
  for (const ChannelStep &s : plan.steps) {
    const int64_t a = value(s.a_node, s.a_vreg);
    if (s.kind == ChannelStep::Accumulate) {
      rows[s.row] += s.op == OpKind::Add ? a : -a;
      continue;
    }
    const int64_t b = value(s.b_node, s.b_vreg);
    const int64_t r = s.op == OpKind::Add ? a + b : b - a;
    if (s.addressing == Addressing::InPlace)
      vreg[s.b_vreg] = r;
    else
      for (int d : s.dest_vregs)
        vreg[d] = r;
  }
  return rows;
}

} // namespace

TEST_CASE("worked example plan") {
  const DataFlowGraph g = eq1_graph();
  const ChannelPlan plan = plan_channel(g);
  const AllocationResult alloc = allocate_columns(plan, 256);
  CHECK(alloc.ok());
  CHECK_FALSE(check_allocation(plan, alloc));
  CHECK(replay(g, plan, {1, 2, 3, 4, 5, 6}) ==
        std::vector<int64_t>{-3, -5, 2, 0, -5, -6});

  // Shared values are defined into one copy per consumer by a single step.
  int shared = 0;
  for (const ChannelStep &s : plan.steps)
    if (s.kind == ChannelStep::Define && g.op_uses(s.node) >= 2) {
      ++shared;
      CHECK(s.addressing == Addressing::OutOfPlace);
      CHECK(static_cast<int>(s.dest_vregs.size()) == g.op_uses(s.node));
    }
  CHECK(shared >= 1);
}

TEST_CASE("plans replay the linear map") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 30; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 48);
    const std::vector<int8_t> m = test::ternary(rng, rows * 9, 0.5);
    DataFlowGraph g = build_dfg(make_system(rows, 9, m));
    if (trial % 2)
      g = eliminate_common_subexpressions(g);
    g = annotate_bitwidths(g, activation_range(4));
    const ChannelPlan plan = plan_channel(g);
    const AllocationResult alloc = allocate_columns(plan, 1000);
    CHECK_FALSE(check_allocation(plan, alloc));
    for (int t = 0; t < 10; ++t) {
      std::vector<int64_t> x(9);
      for (int64_t &v : x)
        v = static_cast<int64_t>(rng() % 16);
      CHECK(replay(g, plan, x) == test::mvm(m, rows, 9, x));
    }
    // In-place steps never narrow the column they reuse.
    for (const ChannelStep &s : plan.steps)
      if (s.kind == ChannelStep::Define && s.addressing == Addressing::InPlace)
        CHECK(plan.macro_width[s.b_node] >= s.width);
  }
}

TEST_CASE("column allocation") {
  ChannelPlan disjoint;
  disjoint.live = {{0, 1}, {2, 3}};
  const AllocationResult a = allocate_columns(disjoint, 1);
  CHECK(a.color[0] == a.color[1]);
  CHECK(a.ok());

  ChannelPlan overlap;
  overlap.live = {{0, 2}, {1, 3}, {2, 4}};
  const AllocationResult b = allocate_columns(overlap, 2);
  CHECK(b.colors == 3);
  CHECK(b.spills == 1);
  CHECK_FALSE(check_allocation(overlap, b));
  AllocationResult bad = b;
  bad.color = {0, 0, 1};
  CHECK(check_allocation(overlap, bad));

  // A 300-long chain needs few columns.
  std::vector<int8_t> chain(301, 1);
  const DataFlowGraph g = annotate_bitwidths(build_dfg(make_system(1, 301, chain)),
                                             activation_range(4));
  CHECK(g.op_count() == 300);
  const AllocationResult c = allocate_columns(g, 8);
  CHECK(c.spills == 0);
  CHECK(c.colors <= 8);
}

TEST_CASE("addressing choice") {
  // y0 = (x0 + x1) + x2: the inner sum's only use is the outer add.
  const DataFlowGraph g = build_dfg(make_system(1, 3, std::vector<int8_t>{1, 1, 1}));
  int inner = -1, outer = -1;
  for (const DfgNode &n : g.nodes)
    if (n.is_op())
      (inner < 0 ? inner : outer) = n.id;
  CHECK(choose_addressing(g, inner) == Addressing::OutOfPlace);
  CHECK(choose_addressing(g, outer) == Addressing::InPlace);

  const DataFlowGraph e = eq1_graph();
  for (const DfgNode &n : e.nodes)
    if (n.is_op()) {
      const Addressing a = choose_addressing(e, n.id);
      if (!e.nodes[n.lhs].is_op() && !e.nodes[n.rhs].is_op())
        CHECK(a == Addressing::OutOfPlace);
    }
}

TEST_CASE("placement") {
  const ApGeometry geo;
  QuantSpec q4;
  const LayerPlacement p =
      place_layer(LayerShape::make(1, 4, 1, 1, 30, 30, 1, 0), q4, geo);
  CHECK(p.row_groups == 4);
  CHECK(p.utilization == doctest::Approx(900.0 / 1024.0));

  QuantSpec q8;
  q8.activation_bits = 8;
  const LayerPlacement c =
      place_layer(LayerShape::make(16, 4, 3, 3, 8, 8, 1, 1), q8, geo);
  CHECK(c.channels_per_group == 8);
  CHECK(c.channel_groups == 2);
  CHECK(c.aps == 2);

  const LayerPlacement one =
      place_layer(LayerShape::make(1, 1, 1, 1, 1, 1, 1, 0), q4, geo);
  CHECK(one.row_groups == 1);
  CHECK(one.utilization == doctest::Approx(1.0 / 256));

  ApGeometry narrow;
  narrow.cols = 16;
  CHECK_THROWS_AS(place_layer(LayerShape::make(1, 8, 3, 3, 4, 4, 1, 1), q4, narrow),
                  CapacityError);
  CHECK(place_layer(LayerShape::make(1, 8, 3, 3, 4, 4, 1, 1), q4, narrow, 8)
            .tile_rows == 1);

  ApGeometry tiny;
  tiny.aps_per_tile = tiny.tiles_per_bank = tiny.banks = 1;
  CHECK_THROWS_AS(
      place_layer(LayerShape::make(1, 1, 1, 1, 30, 30, 1, 0), q4, tiny), CapacityError);
}

TEST_CASE("accumulation tree") {
  const AccumulationSchedule s8 = schedule_accumulation(8);
  CHECK(s8.depth() == 3);
  CHECK(s8.moves() == 7);
  CHECK(schedule_accumulation(1).moves() == 0);
  CHECK(schedule_accumulation(1).depth() == 0);
  for (int n = 1; n <= 33; ++n) {
    const AccumulationSchedule s = schedule_accumulation(n);
    CHECK(s.moves() == n - 1);
    // Every group's partial reaches group 0 exactly once.
    std::vector<int> alive(static_cast<std::size_t>(n), 1);
    for (const auto &level : s.levels)
      for (auto [dst, src] : level) {
        REQUIRE(alive[dst]);
        REQUIRE(alive[src]);
        alive[src] = 0;
      }
    CHECK(std::count(alive.begin(), alive.end(), 1) == 1);
    CHECK(alive[0] == 1);
  }
}

TEST_CASE("program emission") {
  TernaryNetwork empty;
  empty.name = "empty";
  empty.input = {1, 1, 1, 4};
  const ApProgram e = emit_program(empty, ApGeometry{}, OptLevel::UnrollCse);
  CHECK(e.layers.empty());

  const TernaryNetwork net =
      test::one_layer(LayerShape::make(1, 6, 1, 6, 1, 6, 1, 0), kEq1, 4, 0);
  const ApProgram cse = emit_program(net, ApGeometry{}, OptLevel::UnrollCse);
  const ApProgram unroll = emit_program(net, ApGeometry{}, OptLevel::Unroll);
  REQUIRE(cse.layers.size() == 1);
  CHECK(cse.layers[0].unroll_ops == 14);
  CHECK(unroll.layers[0].dfg_ops == 14);
  CHECK(cse.layers[0].dfg_ops <= 7);

  // Same input, same program.
  CHECK(emit_program(net, ApGeometry{}, OptLevel::UnrollCse) == cse);
}

TEST_SUITE_END();
