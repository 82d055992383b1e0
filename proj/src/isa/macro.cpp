// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/isa.h"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <stdexcept>

namespace rtap {

const char *to_string(MicroKind k) {
  switch (k) {
  case MicroKind::Search:
    return "search";
  case MicroKind::Write:
    return "write";
  case MicroKind::Shift:
    return "shift";
  case MicroKind::Clear:
    return "clear";
  case MicroKind::Move:
    return "move";
  case MicroKind::Read:
    return "read";
  case MicroKind::Load:
    return "load";
  }
  return "?";
}

const char *to_string(Phase p) {
  switch (p) {
  case Phase::Dfg:
    return "dfg";
  case Phase::Accumulation:
    return "accumulation";
  case Phase::Io:
    return "io";
  }
  return "?";
}

namespace {

struct BitSource {
  int column;
  int domain; // -1: the pinned zero column, read wherever it sits
};

BitSource source_of(const Operand &o, int bit, int zero_column) {
  switch (o.kind) {
  case OperandKind::Zero:
    return {zero_column, -1};
  case OperandKind::Unsigned:
    if (bit >= o.width)
      return {zero_column, -1};
    return {o.column, o.base + bit};
  case OperandKind::Signed:
    return {o.column, std::min(bit, o.width - 1)};
  }
  return {zero_column, -1};
}

void check_operand(const Operand &o, const char *name) {
  if (o.kind == OperandKind::Zero)
    return;
  if (o.column < 0 || o.width < 1 || o.base < 0)
    throw std::invalid_argument(std::string("macro operand ") + name +
                                " has no column or width");
}

} // namespace

std::vector<MicroOp> expand_macro(const MacroInstr &m, const LutSet &luts,
                                  ColumnAlignment &align) {
  const LutTable *t = luts.find(m.op, m.addressing, m.negated);
  if (!t)
    throw std::invalid_argument(std::string("no LUT for ") +
                                (m.negated ? "negated " : "") + to_string(m.op) +
                                ' ' + to_string(m.addressing));
  if (m.width < 1)
    throw std::invalid_argument("macro width must be positive");
  check_operand(m.a, "A");
  check_operand(m.b, "B");

  std::vector<int> dests;
  if (m.addressing == Addressing::InPlace) {
    if (m.b.kind != OperandKind::Signed)
      throw std::invalid_argument("in-place destination must be a signed value");
    if (m.b.width < m.width)
      throw std::invalid_argument("in-place destination narrower than macro");
    if (m.a.kind != OperandKind::Zero && m.a.column == m.b.column)
      throw std::invalid_argument("in-place operands share a column");
    dests = {m.b.column};
  } else {
    if (m.dests.empty())
      throw std::invalid_argument("out-of-place macro without destination");
    dests = m.dests;
    for (int d : dests)
      if (d == m.a.column || d == m.b.column || d == m.carry_column ||
          d == m.zero_column)
        throw std::invalid_argument("out-of-place destination aliases an operand");
  }

  int max_col = std::max({m.carry_column, m.zero_column, m.a.column, m.b.column});
  for (int d : dests)
    max_col = std::max(max_col, d);
  if (static_cast<int>(align.size()) <= max_col)
    align.resize(static_cast<std::size_t>(max_col) + 1, 0);

  std::vector<MicroOp> ops;
  {
    MicroOp init;
    init.kind = MicroKind::Clear;
    init.columns = {m.carry_column};
    init.key = {t->carry_init};
    init.tagged = false;
    ops.push_back(std::move(init));
  }

  const std::vector<LutEntry> order = t->pass_order();
  for (int bit = 0; bit < m.width; ++bit) {
    const BitSource a = source_of(m.a, bit, m.zero_column);
    const BitSource b = source_of(m.b, bit, m.zero_column);

    // Columns that must sit at a given domain for this bit.
    std::map<int, int> want; // column -> domain
    if (a.domain >= 0)
      want[a.column] = a.domain;
    if (b.domain >= 0)
      want[b.column] = b.domain;
    if (m.addressing == Addressing::OutOfPlace)
      for (int d : dests)
        want[d] = bit;
    for (const auto &[col, dom] : want)
      if (col == m.carry_column || col == m.zero_column)
        throw std::invalid_argument("operand aliases a reserved column");

    std::map<int, std::vector<int>> by_target;
    for (const auto &[col, dom] : want)
      if (align[col] != dom)
        by_target[dom].push_back(col);
    for (auto &[target, cols] : by_target) {
      MicroOp s;
      s.kind = MicroKind::Shift;
      s.target = target;
      for (int c : cols) {
        s.steps = std::max(s.steps, std::abs(align[c] - target));
        align[c] = target;
      }
      s.columns = std::move(cols);
      ops.push_back(std::move(s));
    }

    if (m.addressing == Addressing::OutOfPlace) {
      MicroOp clr;
      clr.kind = MicroKind::Clear;
      clr.columns = dests;
      clr.key.assign(dests.size(), 0);
      clr.tagged = false;
      ops.push_back(std::move(clr));
    }

    for (const LutEntry &e : order) {
      MicroOp s;
      s.kind = MicroKind::Search;
      s.columns = {m.carry_column, b.column, a.column};
      s.key = {static_cast<uint8_t>((e.key >> 2) & 1),
               static_cast<uint8_t>((e.key >> 1) & 1),
               static_cast<uint8_t>(e.key & 1)};
      ops.push_back(std::move(s));

      MicroOp w;
      w.kind = MicroKind::Write;
      w.columns.push_back(m.carry_column);
      w.key.push_back(static_cast<uint8_t>((e.write >> 1) & 1));
      for (int d : dests) {
        w.columns.push_back(d);
        w.key.push_back(static_cast<uint8_t>(e.write & 1));
      }
      ops.push_back(std::move(w));
    }
  }
  return ops;
}

std::vector<MicroOp> expand_macro(const MacroInstr &m, const LutSet &luts) {
  ColumnAlignment align;
  return expand_macro(m, luts, align);
}

int64_t cycle_count(std::span<const MicroOp> ops, const CycleModel &model) {
  int64_t cycles = 0;
  for (const MicroOp &op : ops) {
    switch (op.kind) {
    case MicroKind::Search:
    case MicroKind::Write:
    case MicroKind::Clear:
      cycles += 1;
      break;
    case MicroKind::Shift:
      cycles += int64_t{op.steps} * model.shift_cycles_per_step;
      break;
    case MicroKind::Move:
    case MicroKind::Read:
      cycles += int64_t{op.width} * model.move_cycles_per_bit;
      break;
    case MicroKind::Load:
      // One parallel write per domain plane of the loaded channels.
      cycles += int64_t{op.arg1} * op.width;
      break;
    }
  }
  return cycles;
}

int64_t compute_cycles(std::span<const MicroOp> ops) {
  return std::count_if(ops.begin(), ops.end(), [](const MicroOp &op) {
    return op.kind == MicroKind::Search || op.kind == MicroKind::Write;
  });
}

} // namespace rtap
