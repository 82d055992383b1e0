// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/sim.h"

#include "rtap/errors.h"
#include "rtap/lowering.h"

#include <algorithm>
#include <exception>
#include <ostream>
#include <set>
#include <stdexcept>
#include <thread>

namespace rtap {

const char *to_string(EventKind k) {
  switch (k) {
  case EventKind::Search:
    return "search";
  case EventKind::Write:
    return "write";
  case EventKind::Shift:
    return "shift";
  case EventKind::Move:
    return "move";
  case EventKind::Read:
    return "read";
  case EventKind::Macro:
    return "macro";
  }
  return "?";
}

CamArray &SimState::ap(int id) {
  if (id < 0 || id >= geometry.total_aps())
    throw SimulationError("AP " + std::to_string(id) + " does not exist");
  auto &slot = aps[id];
  if (!slot)
    slot = std::make_unique<CamArray>(geometry.rows, geometry.cols,
                                      geometry.domains);
  return *slot;
}

namespace {

void execute_micro(CamArray &ap, const MicroOp &op, const SimOptions &opt,
                   const Event &ctx, std::vector<Event> &events,
                   const CamArray *src) {
  Event e = ctx;
  switch (op.kind) {
  case MicroKind::Search:
    ap.masked_search(op.columns, op.key);
    e.kind = EventKind::Search;
    e.column = op.columns.empty() ? -1 : op.columns.front();
    e.bits = static_cast<int64_t>(op.columns.size()) * ap.rows();
    e.cycles = 1;
    events.push_back(e);
    return;
  case MicroKind::Write:
  case MicroKind::Clear: {
    const bool use_tag = op.kind == MicroKind::Write && op.tagged;
    const int64_t rows = ap.tagged_write(op.columns, op.key, use_tag);
    e.kind = EventKind::Write;
    for (std::size_t i = 0; i < op.columns.size(); ++i) {
      e.column = op.columns[i];
      e.bits = rows;
      e.cycles = i == 0 ? 1 : 0;
      events.push_back(e);
    }
    return;
  }
  case MicroKind::Shift: {
    int worst = 0;
    std::vector<Event> shifts;
    for (int c : op.columns) {
      const int steps = ap.shift(c, op.target);
      worst = std::max(worst, steps);
      if (steps == 0)
        continue;
      e.kind = EventKind::Shift;
      e.column = c;
      e.track_steps = int64_t{steps} * ap.rows();
      e.cycles = 0;
      shifts.push_back(e);
    }
    if (!shifts.empty())
      shifts.front().cycles = int64_t{worst} * opt.cycles.shift_cycles_per_step;
    events.insert(events.end(), shifts.begin(), shifts.end());
    return;
  }
  case MicroKind::Move: {
    if (!src)
      throw SimulationError("move without a source array");
    if (op.columns.size() != 1)
      throw SimulationError("move needs exactly one destination column");
    ap.copy_domains(op.columns.front(), *src, op.src_column, op.width);
    e.kind = EventKind::Move;
    e.column = op.columns.front();
    e.bits = int64_t{op.width} * ap.rows();
    e.cycles = int64_t{op.width} * opt.cycles.move_cycles_per_bit;
    events.push_back(e);
    return;
  }
  case MicroKind::Read:
  case MicroKind::Load:
    throw SimulationError(std::string(to_string(op.kind)) +
                          " needs the controller and cannot run on a bare array");
  }
}

} // namespace

void execute(CamArray &ap, const Instr &in, const LutSet &luts,
             const SimOptions &opt, const Event &context,
             std::vector<Event> &events, const CamArray *src) {
  Event ctx = context;
  ctx.phase = in.phase;
  if (!in.is_macro) {
    execute_micro(ap, in.micro, opt, ctx, events, src);
    return;
  }
  const MacroInstr &m = in.macro;
  if (m.width > ap.domains())
    throw SimulationError("macro width exceeds the nanowire length");
  ColumnAlignment align = ap.alignment();
  std::vector<MicroOp> ops;
  try {
    ops = expand_macro(m, luts, align);
  } catch (const std::invalid_argument &e) {
    throw SimulationError(std::string("malformed macro: ") + e.what());
  }
  Event mark = ctx;
  mark.kind = EventKind::Macro;
  mark.column = m.addressing == Addressing::InPlace ? m.b.column
                                                    : m.dests.front();
  mark.bits = m.width;
  events.push_back(mark);
  for (const MicroOp &op : ops)
    execute_micro(ap, op, opt, ctx, events, nullptr);
}

namespace {

/// Values a Read produced: output channel, row group, one value per row.
struct Readout {
  int channel;
  int row_group;
  std::vector<int64_t> values;
};

struct StreamResult {
  std::vector<Event> events;
  std::vector<Readout> reads;
  std::exception_ptr error;
};

class Runner {
public:
  Runner(SimState &state, const ApProgram &program, const SimOptions &opt)
      : state_(state), prog_(program), opt_(opt) {}

  RunResult run(const FeatureMap &input) {
    if (state_.geometry != prog_.geometry)
      throw SimulationError("program geometry does not match the simulator");
    if (input.shape != prog_.input)
      throw ShapeError("input feature map does not match the program input");
    input.validate();

    std::vector<FeatureMap> tensors{input};
    RunResult out;
    for (std::size_t i = 0; i < prog_.layers.size(); ++i) {
      const LayerProgram &l = prog_.layers[i];
      const FeatureMap &in = tensors.back();
      switch (l.kind) {
      case LayerKind::Conv:
        tensors.push_back(conv(static_cast<int>(i), l, in, out.events));
        break;
      case LayerKind::Pool:
        tensors.push_back(max_pool(l.shape, in, l.quant.activation_bits));
        break;
      case LayerKind::Add:
        if (l.skip_tensor < 0 || l.skip_tensor >= static_cast<int>(tensors.size()))
          throw SimulationError("add layer names a missing tensor");
        tensors.push_back(residual_add(
            in, tensors[static_cast<std::size_t>(l.skip_tensor)], l.quant));
        break;
      }
    }
    tensors.erase(tensors.begin());
    out.trace = std::move(tensors);
    return out;
  }

private:
  FeatureMap conv(int index, const LayerProgram &l, const FeatureMap &in,
                  std::vector<Event> &events) {
    const LayerShape &s = l.shape;
    if (in.shape.channels != s.c_in || in.shape.height != s.h_in ||
        in.shape.width != s.w_in)
      throw SimulationError("layer input does not match its program");
    patch_ = im2col_indices(s);
    const int positions = s.positions();
    AccTensor acc(s.c_out, s.h_out(), s.w_out());
    std::vector<char> seen(acc.values.size(), 0);

    for (const Epoch &ep : l.epochs) {
      // Arrays are created up front so workers never touch the map.
      for (const Stream &st : ep.streams) {
        state_.ap(st.ap);
        for (const Instr &in_ : st.instrs)
          if (!in_.is_macro && in_.micro.kind == MicroKind::Move) {
            auto it = state_.aps.find(in_.micro.src_ap);
            if (it == state_.aps.end())
              throw SimulationError("move reads an AP that holds no data");
          }
      }
      std::vector<StreamResult> results(ep.streams.size());
      auto work = [&](std::size_t k) {
        try {
          run_stream(index, ep, ep.streams[k], in, results[k]);
        } catch (...) {
          results[k].error = std::current_exception();
        }
      };
      const int threads =
          std::max(1, std::min<int>(opt_.threads, static_cast<int>(ep.streams.size())));
      if (threads == 1) {
        for (std::size_t k = 0; k < ep.streams.size(); ++k)
          work(k);
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t)
          pool.emplace_back([&, t] {
            for (std::size_t k = t; k < ep.streams.size(); k += threads)
              work(k);
          });
        for (std::thread &th : pool)
          th.join();
      }
      // Deterministic merge in stream order.
      for (StreamResult &r : results) {
        if (r.error)
          std::rethrow_exception(r.error);
        events.insert(events.end(), r.events.begin(), r.events.end());
        for (const Readout &ro : r.reads)
          for (int row = 0; row < static_cast<int>(ro.values.size()); ++row) {
            const int p = ro.row_group * state_.geometry.rows + row;
            if (p >= positions)
              break;
            if (ro.channel < 0 || ro.channel >= s.c_out)
              throw SimulationError("read names a missing output channel");
            const std::size_t at = acc.index(ro.channel, p / s.w_out(), p % s.w_out());
            acc.values[at] = ro.values[row];
            seen[at] = 1;
          }
      }
      ++epoch_;
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw SimulationError("layer " + std::to_string(index) +
                            " program leaves outputs unread");
    return requantize_tensor(acc, l.quant);
  }

  void run_stream(int layer, const Epoch &ep, const Stream &st,
                  const FeatureMap &in, StreamResult &out) {
    CamArray &ap = *state_.aps.at(st.ap);
    Event ctx;
    ctx.layer = layer;
    ctx.epoch = epoch_;
    ctx.ap = st.ap;
    ctx.phase = ep.phase;
    for (const Instr &instr : st.instrs) {
      if (!instr.is_macro && instr.micro.kind == MicroKind::Load) {
        load(ap, instr.micro, in, ctx, out.events);
        continue;
      }
      if (!instr.is_macro && instr.micro.kind == MicroKind::Read) {
        out.reads.push_back(read(ap, instr.micro, ctx, out.events));
        continue;
      }
      const CamArray *src = nullptr;
      Event c = ctx;
      if (!instr.is_macro && instr.micro.kind == MicroKind::Move) {
        src = state_.aps.at(instr.micro.src_ap).get();
        c.hop = state_.geometry.hop(instr.micro.src_ap, st.ap);
      }
      execute(ap, instr, prog_.luts, opt_, c, out.events, src);
    }
  }

  /// im2col load: patch column k of row r holds, at domains c*N + bit, the
  /// pixel that slot k of position (row group, r) reads in channel c.
  void load(CamArray &ap, const MicroOp &op, const FeatureMap &in,
            const Event &ctx, std::vector<Event> &events) {
    const int n = op.width;
    const int first = op.arg0, count = op.arg1, rg = op.target;
    if (n != in.shape.bits || first < 0 || count < 1 ||
        first + count > in.shape.channels || count * n > ap.domains())
      throw SimulationError("load does not match the layer input");
    if (static_cast<int>(op.columns.size()) != patch_.slots)
      throw SimulationError("load column count differs from the patch size");
    std::set<std::pair<int, int>> pixels;
    const uint32_t limit = uint32_t{1} << n;
    for (int row = 0; row < ap.rows(); ++row) {
      const int p = rg * ap.rows() + row;
      for (int k = 0; k < patch_.slots; ++k) {
        const int col = op.columns[k];
        const PatchCoord pc =
            p < patch_.positions ? patch_.at(p, k) : PatchCoord{};
        if (!pc.pad())
          pixels.insert({pc.y, pc.x});
        for (int c = 0; c < count; ++c) {
          const uint32_t v = pc.pad() ? 0 : in.at(first + c, pc.y, pc.x);
          if (v >= limit)
            throw SimulationError("activation exceeds its bit width");
          ap.write_value(row, col, c * n, n, v);
        }
      }
    }
    Event e = ctx;
    e.kind = EventKind::Write;
    for (std::size_t k = 0; k < op.columns.size(); ++k) {
      e.column = op.columns[k];
      e.bits = int64_t{ap.rows()} * count * n;
      e.cycles = k == 0 ? int64_t{count} * n : 0;
      events.push_back(e);
    }
    Event m = ctx;
    m.kind = EventKind::Move;
    m.hop = HopLevel::Global;
    m.bits = static_cast<int64_t>(pixels.size()) * count * n;
    events.push_back(m);
  }

  Readout read(CamArray &ap, const MicroOp &op, const Event &ctx,
               std::vector<Event> &events) {
    if (op.columns.size() != 1)
      throw SimulationError("read needs exactly one column");
    Readout r{op.arg0, op.target, {}};
    r.values.reserve(static_cast<std::size_t>(ap.rows()));
    for (int row = 0; row < ap.rows(); ++row)
      r.values.push_back(ap.read_value(row, op.columns.front(), 0, op.width, true));
    Event e = ctx;
    e.kind = EventKind::Read;
    e.column = op.columns.front();
    e.bits = int64_t{ap.rows()} * op.width;
    e.cycles = int64_t{op.width} * opt_.cycles.move_cycles_per_bit;
    events.push_back(e);
    return r;
  }

  SimState &state_;
  const ApProgram &prog_;
  const SimOptions &opt_;
  PatchIndexMap patch_;
  int epoch_ = 0;
};

} // namespace

RunResult run(SimState &state, const ApProgram &program, const FeatureMap &input,
              const SimOptions &opt) {
  return Runner(state, program, opt).run(input);
}

void write_events_ndjson(std::ostream &os, std::span<const Event> events) {
  for (const Event &e : events)
    os << "{\"kind\":\"" << to_string(e.kind) << "\",\"layer\":" << e.layer
       << ",\"epoch\":" << e.epoch << ",\"ap\":" << e.ap << ",\"phase\":\""
       << to_string(e.phase) << "\",\"column\":" << e.column
       << ",\"bits\":" << e.bits << ",\"steps\":" << e.track_steps
       << ",\"cycles\":" << e.cycles << ",\"hop\":\"" << to_string(e.hop)
       << "\"}\n";
}

} // namespace rtap
