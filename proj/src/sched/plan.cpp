// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/sched.h"

#include <algorithm>
#include <numeric>

namespace rtap {

namespace {

/// Op consumers of every node, in program order, lhs before rhs.
std::vector<std::vector<int>> consumers_of(const DataFlowGraph &g) {
  std::vector<std::vector<int>> uses(g.nodes.size());
  for (const DfgNode &n : g.nodes)
    if (n.is_op()) {
      uses[n.lhs].push_back(n.id);
      uses[n.rhs].push_back(n.id);
    }
  return uses;
}

bool overlaps(std::pair<int, int> x, std::pair<int, int> y) {
  return !(x.second < y.first || y.second < x.first);
}

} // namespace

Addressing choose_addressing(const DataFlowGraph &g, int node) {
  const DfgNode &n = g.nodes[node];
  // A value feeding several ops is written once into one copy per consumer.
  if (g.op_uses(node) >= 2)
    return Addressing::OutOfPlace;
  // Every op operand is owned by its consumer (sole use or private copy);
  // graph inputs stay live in their patch columns.
  const bool lhs_owned = g.nodes[n.lhs].is_op();
  const bool rhs_owned = g.nodes[n.rhs].is_op();
  if (lhs_owned)
    return Addressing::InPlace;
  // B - A only runs in place on the minuend.
  if (n.kind == NodeKind::Add && rhs_owned)
    return Addressing::InPlace;
  return Addressing::OutOfPlace;
}

ChannelPlan plan_channel(const DataFlowGraph &g) {
  const std::vector<std::vector<int>> uses = consumers_of(g);
  std::vector<std::vector<int>> vregs_of(g.nodes.size());
  std::vector<std::size_t> next_use(g.nodes.size(), 0);
  int vregs = 0;

  auto take = [&](int node) {
    if (!g.nodes[node].is_op())
      return -1;
    const std::vector<int> &v = vregs_of[node];
    const std::size_t i = next_use[node]++;
    return v.size() == 1 ? v.front() : v.at(i);
  };

  ChannelPlan plan;
  auto accumulate = [&](int node) {
    for (std::size_t r = 0; r < g.outputs.size(); ++r) {
      const OutputTag &t = g.outputs[r];
      if (t.node != node)
        continue;
      ChannelStep s;
      s.kind = ChannelStep::Accumulate;
      s.node = node;
      s.op = t.sign > 0 ? OpKind::Add : OpKind::Sub;
      s.a_node = node;
      s.a_vreg = g.nodes[node].is_op() ? vregs_of[node].front() : -1;
      s.row = static_cast<int>(r);
      plan.steps.push_back(s);
    }
  };

  for (const DfgNode &n : g.nodes)
    if (n.kind == NodeKind::Input)
      accumulate(n.id);

  for (const DfgNode &n : g.nodes) {
    if (!n.is_op())
      continue;
    ChannelStep s;
    s.kind = ChannelStep::Define;
    s.node = n.id;
    s.op = n.kind == NodeKind::Add ? OpKind::Add : OpKind::Sub;
    s.addressing = choose_addressing(g, n.id);
    const int lhs_vreg = take(n.lhs);
    const int rhs_vreg = take(n.rhs);
    if (s.addressing == Addressing::InPlace && g.nodes[n.lhs].is_op()) {
      s.b_node = n.lhs, s.b_vreg = lhs_vreg;
      s.a_node = n.rhs, s.a_vreg = rhs_vreg;
      vregs_of[n.id] = {lhs_vreg};
    } else if (s.addressing == Addressing::InPlace) {
      s.b_node = n.rhs, s.b_vreg = rhs_vreg;
      s.a_node = n.lhs, s.a_vreg = lhs_vreg;
      vregs_of[n.id] = {rhs_vreg};
    } else {
      s.b_node = n.lhs, s.b_vreg = lhs_vreg;
      s.a_node = n.rhs, s.a_vreg = rhs_vreg;
      const int copies = std::max<int>(1, static_cast<int>(uses[n.id].size()));
      for (int i = 0; i < copies; ++i)
        s.dest_vregs.push_back(vregs++);
      vregs_of[n.id] = s.dest_vregs;
    }
    plan.steps.push_back(std::move(s));
    accumulate(n.id);
  }

  // Widen each node to the widest in-place successor sharing its column.
  plan.macro_width.resize(g.nodes.size());
  for (const DfgNode &n : g.nodes)
    plan.macro_width[n.id] = std::max(1, n.width);
  for (auto it = plan.steps.rbegin(); it != plan.steps.rend(); ++it)
    if (it->kind == ChannelStep::Define && it->addressing == Addressing::InPlace)
      plan.macro_width[it->b_node] =
          std::max(plan.macro_width[it->b_node], plan.macro_width[it->node]);
  for (ChannelStep &s : plan.steps)
    if (s.kind == ChannelStep::Define)
      s.width = plan.macro_width[s.node];

  plan.live.assign(static_cast<std::size_t>(vregs), {-1, -1});
  for (int i = 0; i < static_cast<int>(plan.steps.size()); ++i) {
    const ChannelStep &s = plan.steps[i];
    for (int v : s.dest_vregs)
      plan.live[v] = {i, i};
    for (int v : {s.a_vreg, s.b_vreg})
      if (v >= 0)
        plan.live[v].second = i;
  }
  return plan;
}

AllocationResult allocate_columns(const ChannelPlan &plan, int budget) {
  const int n = plan.vregs();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (overlaps(plan.live[i], plan.live[j])) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }

  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    return adj[x].size() > adj[y].size();
  });

  AllocationResult out;
  out.color.assign(static_cast<std::size_t>(n), -1);
  std::vector<char> taken;
  for (int v : order) {
    taken.assign(adj[v].size() + 1, 0);
    for (int u : adj[v])
      if (out.color[u] >= 0 && out.color[u] < static_cast<int>(taken.size()))
        taken[out.color[u]] = 1;
    int c = 0;
    while (taken[c])
      ++c;
    out.color[v] = c;
    out.colors = std::max(out.colors, c + 1);
    if (c >= budget)
      ++out.spills;
  }
  return out;
}

AllocationResult allocate_columns(const DataFlowGraph &g, int budget) {
  return allocate_columns(plan_channel(g), budget);
}

std::optional<std::string> check_allocation(const ChannelPlan &plan,
                                            const AllocationResult &alloc) {
  if (static_cast<int>(alloc.color.size()) != plan.vregs())
    return "color count does not match vreg count";
  for (int i = 0; i < plan.vregs(); ++i)
    for (int j = i + 1; j < plan.vregs(); ++j)
      if (alloc.color[i] == alloc.color[j] &&
          overlaps(plan.live[i], plan.live[j]))
        return "vregs " + std::to_string(i) + " and " + std::to_string(j) +
               " are live together in column " + std::to_string(alloc.color[i]);
  return std::nullopt;
}

} // namespace rtap
