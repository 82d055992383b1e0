// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/dfg.h"
#include "support.h"

#include <doctest.h>

using namespace rtap;
using rtap::test::kEq1;

TEST_SUITE_BEGIN("dfg");

namespace {

void check_equivalent(const DataFlowGraph &g, const std::vector<int8_t> &m,
                      int rows, int cols, std::mt19937_64 &rng, int trials) {
  for (int t = 0; t < trials; ++t) {
    std::vector<int64_t> x(static_cast<std::size_t>(cols));
    for (int64_t &v : x)
      v = static_cast<int64_t>(rng() % 2001) - 1000;
    REQUIRE(dfg_evaluate(g, x) == test::mvm(m, rows, cols, x));
  }
}

} // namespace

TEST_CASE("worked example") {
  const LinearSystem sys = make_system(6, 6, kEq1);
  const DataFlowGraph g = build_dfg(sys);
  CHECK(g.op_count() == 14);
  const DataFlowGraph c = eliminate_common_subexpressions(g);
  CHECK(c.op_count() <= 7);

  const std::vector<int64_t> x = {1, 2, 3, 4, 5, 6};
  CHECK(dfg_evaluate(g, x) == std::vector<int64_t>{-3, -5, 2, 0, -5, -6});
  CHECK(dfg_evaluate(c, x) == std::vector<int64_t>{-3, -5, 2, 0, -5, -6});
  CHECK(dfg_evaluate(c, std::vector<int64_t>{0, 0, 0, 1, 0, 0}) ==
        std::vector<int64_t>{1, 1, -1, -1, -1, 1});
  CHECK(dfg_evaluate(c, std::vector<int64_t>(6, 0)) == std::vector<int64_t>(6, 0));

  std::mt19937_64 rng(4);
  check_equivalent(c, kEq1, 6, 6, rng, 1000);

  // Linear forms reproduce the matrix exactly.
  const auto forms = dfg_linear_forms(c);
  for (int r = 0; r < 6; ++r)
    for (int k = 0; k < 6; ++k)
      CHECK(forms[r][k] == kEq1[r * 6 + k]);
}

TEST_CASE("trivial rows") {
  const DataFlowGraph g =
      build_dfg(make_system(2, 3, std::vector<int8_t>{0, 0, 0, 0, 1, 0}));
  CHECK(g.op_count() == 0);
  CHECK(g.outputs[0].node == g.zero_node());
  CHECK(g.nodes[g.outputs[1].node].kind == NodeKind::Input);
  CHECK(g.nodes[g.outputs[1].node].slot == 1);
  CHECK(g.outputs[1].sign == 1);
}

TEST_CASE("maximal and no sharing") {
  std::mt19937_64 rng(8);
  std::vector<int8_t> row = test::ternary(rng, 9, 0.2);
  row[0] = 1;
  row[1] = -1;
  std::vector<int8_t> same;
  for (int r = 0; r < 64; ++r)
    same.insert(same.end(), row.begin(), row.end());
  int nz = 0;
  for (int8_t v : row)
    nz += v != 0;
  const DataFlowGraph g = eliminate_common_subexpressions(build_dfg(make_system(64, 9, same)));
  CHECK(g.op_count() == nz - 1);
  check_equivalent(g, same, 64, 9, rng, 50);

  // Disjoint supports leave nothing to share.
  std::vector<int8_t> disjoint(3 * 9, 0);
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k)
      disjoint[r * 9 + r * 3 + k] = (k % 2) ? -1 : 1;
  const DataFlowGraph d = build_dfg(make_system(3, 9, disjoint));
  CHECK(eliminate_common_subexpressions(d).op_count() == d.op_count());
}

TEST_CASE("CSE preserves the linear map on random matrices") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 40; ++trial) {
    const int rows = 1 + static_cast<int>(rng() % 64);
    const int cols = 1 + static_cast<int>(rng() % 9);
    const std::vector<int8_t> m =
        test::ternary(rng, static_cast<std::size_t>(rows) * cols, 0.3 + 0.1 * (trial % 6));
    const DataFlowGraph g = build_dfg(make_system(rows, cols, m));
    const DataFlowGraph c = eliminate_common_subexpressions(g);
    CHECK(c.op_count() <= g.op_count());
    check_equivalent(c, m, rows, cols, rng, 20);
  }
}

TEST_CASE("bitwidth annotation") {
  CHECK(twos_complement_width({-15, 15}) == 5);
  CHECK(twos_complement_width({0, 30}) == 6);
  CHECK(twos_complement_width({0, 0}) == 1);
  CHECK(twos_complement_width({-1, 0}) == 1);
  CHECK(twos_complement_width({-8, 7}) == 4);
  CHECK(twos_complement_width({-9, 7}) == 5);

  const DataFlowGraph sub = annotate_bitwidths(
      build_dfg(make_system(1, 2, std::vector<int8_t>{-1, 1})), activation_range(4));
  const DfgNode &s = sub.nodes[sub.outputs[0].node];
  CHECK(s.range == Interval{-15, 15});
  CHECK(s.width == 5);

  const DataFlowGraph add = annotate_bitwidths(
      build_dfg(make_system(1, 2, std::vector<int8_t>{1, 1})), activation_range(4));
  CHECK(add.nodes[add.outputs[0].node].width == 6);

  // Chains of k adds: width is the brute-force maximum over all inputs.
  for (int k = 1; k <= 3; ++k) {
    const DataFlowGraph g = annotate_bitwidths(
        build_dfg(make_system(1, k + 1, std::vector<int8_t>(k + 1, 1))),
        activation_range(4));
    int64_t hi = 0;
    std::vector<int64_t> x(static_cast<std::size_t>(k + 1), 0);
    for (int64_t n = 0; n < (int64_t{1} << (4 * (k + 1))); ++n) {
      for (int i = 0; i <= k; ++i)
        x[i] = (n >> (4 * i)) & 15;
      hi = std::max(hi, dfg_evaluate(g, x)[0]);
    }
    int w = 1;
    while ((int64_t{1} << (w - 1)) - 1 < hi)
      ++w;
    CHECK(g.nodes[g.outputs[0].node].width == w);
  }
}

TEST_CASE("node values stay inside their annotated ranges") {
  std::mt19937_64 rng(2);
  const std::vector<int8_t> m = test::ternary(rng, 32 * 9, 0.6);
  const DataFlowGraph g = annotate_bitwidths(
      eliminate_common_subexpressions(build_dfg(make_system(32, 9, m))),
      activation_range(4));
  for (int t = 0; t < 500; ++t) {
    std::vector<int64_t> x(9);
    for (int64_t &v : x)
      v = static_cast<int64_t>(rng() % 16);
    const std::vector<int64_t> vals = dfg_node_values(g, x);
    for (const DfgNode &n : g.nodes) {
      CHECK(vals[n.id] >= n.range.lo);
      CHECK(vals[n.id] <= n.range.hi);
      CHECK(twos_complement_width({vals[n.id], vals[n.id]}) <= n.width);
    }
  }
}

TEST_SUITE_END();
