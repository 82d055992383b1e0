// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/sched.h"

#include "rtap/errors.h"

#include <algorithm>
#include <cstdlib>
#include <map>
#include <tuple>

namespace rtap {

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

} // namespace

int AccumulationSchedule::moves() const {
  int n = 0;
  for (const auto &level : levels)
    n += static_cast<int>(level.size());
  return n;
}

AccumulationSchedule schedule_accumulation(int channel_groups) {
  AccumulationSchedule s;
  for (int stride = 1; stride < channel_groups; stride *= 2) {
    std::vector<std::pair<int, int>> level;
    for (int g = 0; g + stride < channel_groups; g += 2 * stride)
      level.emplace_back(g, g + stride);
    s.levels.push_back(std::move(level));
  }
  return s;
}

LayerPlacement place_layer(const LayerShape &shape, const QuantSpec &q,
                           const ApGeometry &geo, int tiles) {
  shape.validate();
  geo.validate();
  LayerPlacement p;
  const int per_wire = geo.domains / q.activation_bits;
  if (per_wire < 1)
    throw CapacityError("a " + std::to_string(q.activation_bits) +
                        "-bit activation does not fit a " +
                        std::to_string(geo.domains) + "-domain nanowire");
  p.slots = shape.patch_size();
  p.row_groups = ceil_div(shape.positions(), geo.rows);
  p.channels_per_group = std::min(per_wire, shape.c_in);
  p.channel_groups = ceil_div(shape.c_in, p.channels_per_group);
  p.tile_rows = ceil_div(shape.c_out, std::max(1, tiles));
  p.tiles = ceil_div(shape.c_out, p.tile_rows);
  p.aps = p.row_groups * p.channel_groups * p.tiles;
  p.utilization = static_cast<double>(shape.positions()) /
                  (static_cast<double>(p.row_groups) * geo.rows);
  if (p.slots + p.tile_rows + 3 > geo.cols)
    throw CapacityError("patch and accumulator columns exceed the array width");
  if (p.aps > geo.total_aps())
    throw CapacityError("layer needs " + std::to_string(p.aps) + " APs, " +
                        std::to_string(geo.total_aps()) + " available");
  return p;
}

namespace {

struct Compiled {
  DataFlowGraph graph;
  ChannelPlan plan;
  AllocationResult alloc;
};

class LayerEmitter {
public:
  LayerEmitter(const Layer &layer, int in_bits, const ApGeometry &geo,
               OptLevel opt, const LutSet &luts,
               std::map<int, ColumnAlignment> &align)
      : layer_(layer), shape_(layer.shape), bits_(in_bits), geo_(geo),
        opt_(opt), luts_(luts), align_(align) {}

  LayerProgram emit() {
    systems_ = lower_layer(layer_.weights, shape_);
    compute_pad_masks();
    compute_acc_widths();

    LayerProgram lp;
    lp.kind = LayerKind::Conv;
    lp.shape = shape_;
    lp.quant = layer_.quant;
    lp.unroll_ops = unrolled_op_count(systems_);

    QuantSpec in_q;
    in_q.activation_bits = bits_;
    std::string why = "temporaries do not fit the columns left after "
                      "splitting every output channel into its own tile";
    for (int tiles = 1;; ++tiles) {
      if (tiles > shape_.c_out)
        throw CapacityError(why);
      try {
        place_ = place_layer(shape_, in_q, geo_, tiles);
      } catch (const CapacityError &e) {
        why = e.what();
        continue;
      }
      if (tiles > 1 && place_.tiles != tiles)
        continue; // same split as a smaller tile count
      if (fits())
        break;
    }
    lp.placement = place_;

    lp.dfg_ops = 0;
    const std::vector<char> none(static_cast<std::size_t>(shape_.patch_size()), 0);
    for (int t = 0; t < place_.tiles; ++t)
      for (int c = 0; c < shape_.c_in; ++c)
        lp.dfg_ops += compile(none, c, t).graph.op_count();

    lp.epochs.push_back(load_epoch());
    lp.epochs.push_back(dfg_epoch());
    const AccumulationSchedule tree = schedule_accumulation(place_.channel_groups);
    for (const auto &level : tree.levels)
      lp.epochs.push_back(tree_epoch(level));
    lp.epochs.push_back(writeback_epoch());
    return lp;
  }

private:
  int tile_first(int t) const { return t * place_.tile_rows; }
  int tile_count(int t) const {
    return std::min(place_.tile_rows, shape_.c_out - tile_first(t));
  }
  int group_first(int g) const { return g * place_.channels_per_group; }
  int group_count(int g) const {
    return std::min(place_.channels_per_group, shape_.c_in - group_first(g));
  }
  int ap_id(int rg, int t, int g) const {
    return (rg * place_.tiles + t) * place_.channel_groups + g;
  }
  int acc_column(int r) const { return place_.slots + r; }
  int temp_base() const { return place_.slots + place_.tile_rows; }
  int budget() const { return geo_.cols - 3 - temp_base(); }

  /// Slots that read padding for every position of a row group carry no
  /// information there and are dropped from that group's systems.
  void compute_pad_masks() {
    const PatchIndexMap &map = *systems_.front().patch;
    const int rgs = ceil_div(shape_.positions(), geo_.rows);
    masks_.assign(static_cast<std::size_t>(rgs), {});
    for (int rg = 0; rg < rgs; ++rg) {
      std::vector<char> drop(static_cast<std::size_t>(map.slots), 1);
      const int end = std::min(map.positions, (rg + 1) * geo_.rows);
      for (int p = rg * geo_.rows; p < end; ++p)
        for (int k = 0; k < map.slots; ++k)
          if (!map.at(p, k).pad())
            drop[k] = 0;
      masks_[rg] = std::move(drop);
    }
  }

  /// Accumulator width of output o: the range of the full sum over every
  /// input channel and slot. Every partial sum lies inside it.
  void compute_acc_widths() {
    const int64_t max = (int64_t{1} << bits_) - 1;
    acc_width_.assign(static_cast<std::size_t>(shape_.c_out), 1);
    for (int o = 0; o < shape_.c_out; ++o) {
      int64_t pos = 0, neg = 0;
      for (const LinearSystem &s : systems_)
        for (int k = 0; k < s.cols; ++k) {
          pos += s.at(o, k) > 0;
          neg += s.at(o, k) < 0;
        }
      acc_width_[o] = twos_complement_width({-neg * max, pos * max});
      if (acc_width_[o] > geo_.domains)
        throw CapacityError("accumulator of output channel " + std::to_string(o) +
                            " needs " + std::to_string(acc_width_[o]) +
                            " domains");
    }
  }

  const Compiled &compile(const std::vector<char> &drop, int c, int t) {
    auto key = std::make_tuple(drop, c, tile_first(t), tile_count(t));
    auto it = cache_.find(key);
    if (it != cache_.end())
      return it->second;
    LinearSystem sys = systems_[c].row_slice(tile_first(t), tile_count(t));
    for (int r = 0; r < sys.rows; ++r)
      for (int k = 0; k < sys.cols; ++k)
        if (drop[k])
          sys.at(r, k) = 0;
    Compiled out;
    out.graph = build_dfg(sys);
    if (opt_ == OptLevel::UnrollCse)
      out.graph = eliminate_common_subexpressions(out.graph);
    out.graph = annotate_bitwidths(out.graph, activation_range(bits_));
    out.plan = plan_channel(out.graph);
    out.alloc = allocate_columns(out.plan, std::max(0, budget()));
    for (int w : out.plan.macro_width)
      if (w > geo_.domains)
        throw CapacityError("a temporary needs " + std::to_string(w) +
                            " domains");
    return cache_.emplace(std::move(key), std::move(out)).first->second;
  }

  bool fits() {
    if (budget() < 1)
      return false;
    place_.temp_columns = 0;
    for (const std::vector<char> &drop : masks_)
      for (int t = 0; t < place_.tiles; ++t)
        for (int c = 0; c < shape_.c_in; ++c) {
          const Compiled &cc = compile(drop, c, t);
          if (cc.alloc.colors > budget())
            return false;
          place_.temp_columns = std::max(place_.temp_columns, cc.alloc.colors);
        }
    return true;
  }

  Epoch load_epoch() {
    Epoch e;
    e.phase = Phase::Io;
    for_each_ap([&](int rg, int t, int g) {
      MicroOp op;
      op.kind = MicroKind::Load;
      for (int k = 0; k < place_.slots; ++k)
        op.columns.push_back(k);
      op.arg0 = group_first(g);
      op.arg1 = group_count(g);
      op.width = bits_;
      op.target = rg;
      e.streams.push_back({ap_id(rg, t, g), {Instr::of(op, Phase::Io)}});
    });
    return e;
  }

  Epoch dfg_epoch() {
    Epoch e;
    e.phase = Phase::Dfg;
    for_each_ap([&](int rg, int t, int g) {
      Stream s{ap_id(rg, t, g), {}};
      std::vector<char> started(static_cast<std::size_t>(tile_count(t)), 0);
      for (int local = 0; local < group_count(g); ++local) {
        const Compiled &cc = compile(masks_[rg], group_first(g) + local, t);
        emit_channel(s, cc, local, t, started);
      }
      // Accumulators nothing contributed to still have to read as zero.
      for (int r = 0; r < tile_count(t); ++r)
        if (!started[r])
          clear_column(s, acc_column(r), acc_width_[tile_first(t) + r]);
      e.streams.push_back(std::move(s));
    });
    return e;
  }

  void emit_channel(Stream &s, const Compiled &cc, int local, int t,
                    std::vector<char> &started) {
    const DataFlowGraph &g = cc.graph;
    auto column = [&](int vreg) { return temp_base() + cc.alloc.color[vreg]; };
    auto operand = [&](int node, int vreg) {
      const DfgNode &n = g.nodes[node];
      if (n.kind == NodeKind::Input)
        return Operand::input(n.slot, local * bits_, bits_);
      return Operand::value(column(vreg), cc.plan.macro_width[node]);
    };
    for (const ChannelStep &st : cc.plan.steps) {
      MacroInstr m;
      m.op = st.op;
      m.carry_column = geo_.carry_column();
      m.zero_column = geo_.zero_column();
      m.a = operand(st.a_node, st.a_vreg);
      if (st.kind == ChannelStep::Define) {
        m.phase = Phase::Dfg;
        m.addressing = st.addressing;
        m.width = st.width;
        m.b = operand(st.b_node, st.b_vreg);
        for (int v : st.dest_vregs)
          m.dests.push_back(column(v));
      } else {
        m.phase = Phase::Accumulation;
        const int acc = acc_column(st.row);
        m.width = acc_width_[tile_first(t) + st.row];
        if (!started[st.row]) {
          m.addressing = Addressing::OutOfPlace;
          m.b = Operand::zero();
          m.dests = {acc};
          started[st.row] = 1;
        } else {
          m.addressing = Addressing::InPlace;
          m.b = Operand::value(acc, m.width);
        }
      }
      push_macro(s, m);
    }
  }

  Epoch tree_epoch(const std::vector<std::pair<int, int>> &level) {
    Epoch e;
    e.phase = Phase::Accumulation;
    for (int rg = 0; rg < static_cast<int>(masks_.size()); ++rg)
      for (int t = 0; t < place_.tiles; ++t)
        for (const auto &[dst, src] : level) {
          Stream s{ap_id(rg, t, dst), {}};
          for (int r = 0; r < tile_count(t); ++r) {
            const int w = acc_width_[tile_first(t) + r];
            MicroOp mv;
            mv.kind = MicroKind::Move;
            mv.columns = {geo_.scratch_column()};
            mv.src_ap = ap_id(rg, t, src);
            mv.src_column = acc_column(r);
            mv.width = w;
            s.instrs.push_back(Instr::of(mv, Phase::Accumulation));

            MacroInstr m;
            m.op = OpKind::Add;
            m.addressing = Addressing::InPlace;
            m.width = w;
            m.a = Operand::value(geo_.scratch_column(), w);
            m.b = Operand::value(acc_column(r), w);
            m.carry_column = geo_.carry_column();
            m.zero_column = geo_.zero_column();
            m.phase = Phase::Accumulation;
            push_macro(s, m);
          }
          e.streams.push_back(std::move(s));
        }
    sort_streams(e);
    return e;
  }

  Epoch writeback_epoch() {
    Epoch e;
    e.phase = Phase::Io;
    for (int rg = 0; rg < static_cast<int>(masks_.size()); ++rg)
      for (int t = 0; t < place_.tiles; ++t) {
        Stream s{ap_id(rg, t, 0), {}};
        for (int r = 0; r < tile_count(t); ++r) {
          MicroOp rd;
          rd.kind = MicroKind::Read;
          rd.columns = {acc_column(r)};
          rd.width = acc_width_[tile_first(t) + r];
          rd.arg0 = tile_first(t) + r;
          rd.target = rg;
          s.instrs.push_back(Instr::of(rd, Phase::Io));
        }
        e.streams.push_back(std::move(s));
      }
    sort_streams(e);
    return e;
  }

  template <typename F> void for_each_ap(F &&f) {
    for (int rg = 0; rg < static_cast<int>(masks_.size()); ++rg)
      for (int t = 0; t < place_.tiles; ++t)
        for (int g = 0; g < place_.channel_groups; ++g)
          f(rg, t, g);
  }

  static void sort_streams(Epoch &e) {
    std::stable_sort(e.streams.begin(), e.streams.end(),
                     [](const Stream &x, const Stream &y) { return x.ap < y.ap; });
  }

  void push_macro(Stream &s, const MacroInstr &m) {
    // Keeps the per-AP alignment tracker in step with execution.
    expand_macro(m, luts_, align_[s.ap]);
    s.instrs.push_back(Instr::of(m));
  }

  void clear_column(Stream &s, int column, int width) {
    ColumnAlignment &al = align_[s.ap];
    if (static_cast<int>(al.size()) <= column)
      al.resize(static_cast<std::size_t>(column) + 1, 0);
    for (int b = 0; b < width; ++b) {
      if (al[column] != b) {
        MicroOp sh;
        sh.kind = MicroKind::Shift;
        sh.columns = {column};
        sh.target = b;
        sh.steps = std::abs(al[column] - b);
        al[column] = b;
        s.instrs.push_back(Instr::of(sh, Phase::Accumulation));
      }
      MicroOp clr;
      clr.kind = MicroKind::Clear;
      clr.columns = {column};
      clr.key = {0};
      clr.tagged = false;
      s.instrs.push_back(Instr::of(clr, Phase::Accumulation));
    }
  }

  const Layer &layer_;
  const LayerShape &shape_;
  const int bits_;
  const ApGeometry &geo_;
  const OptLevel opt_;
  const LutSet &luts_;
  std::map<int, ColumnAlignment> &align_;

  std::vector<LinearSystem> systems_;
  std::vector<std::vector<char>> masks_;
  std::vector<int> acc_width_;
  LayerPlacement place_;
  std::map<std::tuple<std::vector<char>, int, int, int>, Compiled> cache_;
};

} // namespace

ApProgram emit_program(const TernaryNetwork &net, const ApGeometry &geo,
                       OptLevel opt) {
  net.validate();
  geo.validate();
  ApProgram p;
  p.geometry = geo;
  p.opt = opt;
  p.luts = standard_luts().set;
  p.input = net.input;

  std::map<int, ColumnAlignment> align;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer &layer = net.layers[i];
    if (layer.kind == LayerKind::Conv) {
      const int in_bits = net.tensor_shape(static_cast<int>(i)).bits;
      p.layers.push_back(
          LayerEmitter(layer, in_bits, geo, opt, p.luts, align).emit());
      continue;
    }
    LayerProgram lp;
    lp.kind = layer.kind;
    lp.shape = layer.shape;
    lp.quant = layer.quant;
    lp.skip_tensor = layer.skip_tensor;
    p.layers.push_back(std::move(lp));
  }
  return p;
}

} // namespace rtap
