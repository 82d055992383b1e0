// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/program.h"

#include "rtap/errors.h"

#include <bit>
#include <cstring>

namespace rtap {

const char *to_string(HopLevel h) {
  switch (h) {
  case HopLevel::Local:
    return "local";
  case HopLevel::Tile:
    return "tile";
  case HopLevel::Bank:
    return "bank";
  case HopLevel::Global:
    return "global";
  }
  return "?";
}

void ApGeometry::validate() const {
  if (rows < 1 || cols < 8 || domains < 1 || aps_per_tile < 1 ||
      tiles_per_bank < 1 || banks < 1)
    throw FormatError("accelerator geometry needs rows, domains and hierarchy "
                      ">= 1 and at least 8 columns");
}

ApAddress ApGeometry::locate(int ap) const {
  ApAddress a;
  a.slot = ap % aps_per_tile;
  a.tile = (ap / aps_per_tile) % tiles_per_bank;
  a.bank = ap / (aps_per_tile * tiles_per_bank);
  return a;
}

HopLevel ApGeometry::hop(int src_ap, int dst_ap) const {
  if (src_ap == dst_ap)
    return HopLevel::Local;
  const ApAddress s = locate(src_ap), d = locate(dst_ap);
  if (s.bank != d.bank)
    return HopLevel::Global;
  if (s.tile != d.tile)
    return HopLevel::Bank;
  return HopLevel::Tile;
}

const char *to_string(OptLevel o) {
  return o == OptLevel::Unroll ? "unroll" : "unroll+cse";
}

OptLevel parse_opt_level(std::string_view s) {
  if (s == "unroll")
    return OptLevel::Unroll;
  if (s == "unroll+cse" || s == "unroll_cse")
    return OptLevel::UnrollCse;
  throw FormatError("unknown optimization level '" + std::string(s) + "'");
}

namespace {

constexpr char kMagic[8] = {'R', 'T', 'A', 'P', 'P', 'R', 'O', 'G'};

class Writer {
public:
  void u8(uint8_t v) { out_.push_back(v); }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i)
      out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i)
      out_.push_back(static_cast<uint8_t>(v >> (8 * i)));
  }
  void i32(int v) { u32(static_cast<uint32_t>(v)); }
  void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }
  void bytes(const void *p, std::size_t n) {
    const auto *b = static_cast<const uint8_t *>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<uint8_t> take() { return std::move(out_); }

private:
  std::vector<uint8_t> out_;
};

class Reader {
public:
  explicit Reader(std::span<const uint8_t> in) : in_(in) {}

  uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= uint32_t{in_[pos_++]} << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= uint64_t{in_[pos_++]} << (8 * i);
    return v;
  }
  int i32() { return static_cast<int>(u32()); }
  int64_t i64() { return static_cast<int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  /// Element count, sanity-checked against the bytes left.
  std::size_t count(std::size_t min_element_bytes) {
    const uint32_t n = u32();
    if (min_element_bytes && n > (in_.size() - pos_) / min_element_bytes)
      throw FormatError("program count field exceeds the file size");
    return n;
  }
  template <typename E> E enumeration(int limit, const char *what) {
    const uint8_t v = u8();
    if (v >= limit)
      throw FormatError(std::string("bad ") + what + " code in program");
    return static_cast<E>(v);
  }
  void expect(const void *p, std::size_t n) {
    need(n);
    if (std::memcmp(in_.data() + pos_, p, n) != 0)
      throw FormatError("not an rtap program (bad magic)");
    pos_ += n;
  }
  bool done() const { return pos_ == in_.size(); }

private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n)
      throw FormatError("truncated program");
  }
  std::span<const uint8_t> in_;
  std::size_t pos_ = 0;
};

void put_operand(Writer &w, const Operand &o) {
  w.u8(static_cast<uint8_t>(o.kind));
  w.i32(o.column);
  w.i32(o.base);
  w.i32(o.width);
}

Operand get_operand(Reader &r) {
  Operand o;
  o.kind = r.enumeration<OperandKind>(3, "operand kind");
  o.column = r.i32();
  o.base = r.i32();
  o.width = r.i32();
  return o;
}

void put_instr(Writer &w, const Instr &in) {
  w.u8(in.is_macro ? 1 : 0);
  w.u8(static_cast<uint8_t>(in.phase));
  if (in.is_macro) {
    const MacroInstr &m = in.macro;
    w.u8(static_cast<uint8_t>(m.op));
    w.u8(static_cast<uint8_t>(m.addressing));
    w.u8(m.negated ? 1 : 0);
    w.i32(m.width);
    put_operand(w, m.a);
    put_operand(w, m.b);
    w.u32(static_cast<uint32_t>(m.dests.size()));
    for (int d : m.dests)
      w.i32(d);
    w.i32(m.carry_column);
    w.i32(m.zero_column);
    return;
  }
  const MicroOp &op = in.micro;
  w.u8(static_cast<uint8_t>(op.kind));
  w.u32(static_cast<uint32_t>(op.columns.size()));
  for (int c : op.columns)
    w.i32(c);
  w.u32(static_cast<uint32_t>(op.key.size()));
  for (uint8_t k : op.key)
    w.u8(k);
  w.u8(op.tagged ? 1 : 0);
  for (int v : {op.target, op.steps, op.src_ap, op.src_column, op.width, op.arg0,
                op.arg1})
    w.i32(v);
}

Instr get_instr(Reader &r) {
  Instr in;
  const uint8_t tag = r.u8();
  if (tag > 1)
    throw FormatError("bad instruction tag in program");
  in.is_macro = tag == 1;
  in.phase = r.enumeration<Phase>(3, "phase");
  if (in.is_macro) {
    MacroInstr &m = in.macro;
    m.phase = in.phase;
    m.op = r.enumeration<OpKind>(2, "op");
    m.addressing = r.enumeration<Addressing>(2, "addressing");
    m.negated = r.enumeration<uint8_t>(2, "negation flag") != 0;
    m.width = r.i32();
    m.a = get_operand(r);
    m.b = get_operand(r);
    const std::size_t n = r.count(4);
    for (std::size_t i = 0; i < n; ++i)
      m.dests.push_back(r.i32());
    m.carry_column = r.i32();
    m.zero_column = r.i32();
    return in;
  }
  MicroOp &op = in.micro;
  op.kind = r.enumeration<MicroKind>(7, "micro-op kind");
  const std::size_t nc = r.count(4);
  for (std::size_t i = 0; i < nc; ++i)
    op.columns.push_back(r.i32());
  const std::size_t nk = r.count(1);
  for (std::size_t i = 0; i < nk; ++i)
    op.key.push_back(r.u8());
  op.tagged = r.enumeration<uint8_t>(2, "tag flag") != 0;
  for (int *v : {&op.target, &op.steps, &op.src_ap, &op.src_column, &op.width,
                 &op.arg0, &op.arg1})
    *v = r.i32();
  return in;
}

void put_shape(Writer &w, const LayerShape &s) {
  for (int v : {s.c_in, s.c_out, s.f_h, s.f_w, s.h_in, s.w_in, s.stride, s.pad})
    w.i32(v);
}

LayerShape get_shape(Reader &r) {
  LayerShape s;
  for (int *v : {&s.c_in, &s.c_out, &s.f_h, &s.f_w, &s.h_in, &s.w_in, &s.stride,
                 &s.pad})
    *v = r.i32();
  return s;
}

} // namespace

std::vector<uint8_t> serialize_program(const ApProgram &p) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kProgramVersion);
  const ApGeometry &g = p.geometry;
  for (int v : {g.rows, g.cols, g.domains, g.aps_per_tile, g.tiles_per_bank,
                g.banks})
    w.i32(v);
  w.u8(static_cast<uint8_t>(p.opt));

  w.u32(static_cast<uint32_t>(p.luts.tables.size()));
  for (const auto &[key, t] : p.luts.tables) {
    w.u8(static_cast<uint8_t>(t.op));
    w.u8(static_cast<uint8_t>(t.addressing));
    w.u8(t.negated ? 1 : 0);
    w.u8(t.carry_init);
    for (const LutEntry &e : t.entries) {
      w.u8(e.key);
      w.u8(e.write);
      w.u8(static_cast<uint8_t>(e.pass));
    }
  }

  for (int v : {p.input.channels, p.input.height, p.input.width, p.input.bits})
    w.i32(v);

  w.u32(static_cast<uint32_t>(p.layers.size()));
  for (const LayerProgram &l : p.layers) {
    w.u8(static_cast<uint8_t>(l.kind));
    put_shape(w, l.shape);
    w.i32(l.quant.activation_bits);
    w.i64(l.quant.requant_multiplier);
    w.i32(l.quant.requant_shift);
    w.u8(static_cast<uint8_t>(l.quant.kind));
    w.i32(l.skip_tensor);
    const LayerPlacement &pl = l.placement;
    for (int v : {pl.row_groups, pl.channel_groups, pl.channels_per_group,
                  pl.tiles, pl.tile_rows, pl.slots, pl.temp_columns, pl.aps})
      w.i32(v);
    w.f64(pl.utilization);
    w.i64(l.unroll_ops);
    w.i64(l.dfg_ops);
    w.u32(static_cast<uint32_t>(l.epochs.size()));
    for (const Epoch &e : l.epochs) {
      w.u8(static_cast<uint8_t>(e.phase));
      w.u32(static_cast<uint32_t>(e.streams.size()));
      for (const Stream &s : e.streams) {
        w.i32(s.ap);
        w.u32(static_cast<uint32_t>(s.instrs.size()));
        for (const Instr &in : s.instrs)
          put_instr(w, in);
      }
    }
  }
  return w.take();
}

ApProgram deserialize_program(std::span<const uint8_t> bytes) {
  Reader r(bytes);
  r.expect(kMagic, sizeof kMagic);
  const uint32_t version = r.u32();
  if (version != kProgramVersion)
    throw FormatError("unsupported program version " + std::to_string(version));
  ApProgram p;
  ApGeometry &g = p.geometry;
  for (int *v : {&g.rows, &g.cols, &g.domains, &g.aps_per_tile,
                 &g.tiles_per_bank, &g.banks})
    *v = r.i32();
  g.validate();
  p.opt = r.enumeration<OptLevel>(2, "optimization level");

  const std::size_t tables = r.count(28);
  for (std::size_t i = 0; i < tables; ++i) {
    LutTable t;
    t.op = r.enumeration<OpKind>(2, "LUT op");
    t.addressing = r.enumeration<Addressing>(2, "LUT addressing");
    t.negated = r.enumeration<uint8_t>(2, "LUT negation flag") != 0;
    t.carry_init = r.enumeration<uint8_t>(2, "LUT carry init");
    for (LutEntry &e : t.entries) {
      e.key = r.enumeration<uint8_t>(8, "LUT key");
      e.write = r.enumeration<uint8_t>(4, "LUT write");
      e.pass = r.enumeration<uint8_t>(9, "LUT pass");
    }
    p.luts.put(t);
  }

  for (int *v : {&p.input.channels, &p.input.height, &p.input.width,
                 &p.input.bits})
    *v = r.i32();

  const std::size_t layers = r.count(1);
  for (std::size_t i = 0; i < layers; ++i) {
    LayerProgram l;
    l.kind = r.enumeration<LayerKind>(3, "layer kind");
    l.shape = get_shape(r);
    l.quant.activation_bits = r.i32();
    l.quant.requant_multiplier = r.i64();
    l.quant.requant_shift = r.i32();
    l.quant.kind = r.enumeration<ActivationKind>(2, "activation kind");
    l.skip_tensor = r.i32();
    LayerPlacement &pl = l.placement;
    for (int *v : {&pl.row_groups, &pl.channel_groups, &pl.channels_per_group,
                   &pl.tiles, &pl.tile_rows, &pl.slots, &pl.temp_columns,
                   &pl.aps})
      *v = r.i32();
    pl.utilization = r.f64();
    l.unroll_ops = r.i64();
    l.dfg_ops = r.i64();
    const std::size_t epochs = r.count(5);
    for (std::size_t e = 0; e < epochs; ++e) {
      Epoch ep;
      ep.phase = r.enumeration<Phase>(3, "epoch phase");
      const std::size_t streams = r.count(8);
      for (std::size_t s = 0; s < streams; ++s) {
        Stream st;
        st.ap = r.i32();
        const std::size_t instrs = r.count(2);
        for (std::size_t k = 0; k < instrs; ++k)
          st.instrs.push_back(get_instr(r));
        ep.streams.push_back(std::move(st));
      }
      l.epochs.push_back(std::move(ep));
    }
    p.layers.push_back(std::move(l));
  }
  if (!r.done())
    throw FormatError("trailing bytes after program");
  return p;
}

void save_program(const std::string &path, const ApProgram &p) {
  write_file_bytes(path, serialize_program(p));
}

ApProgram load_program(const std::string &path) {
  return deserialize_program(read_file_bytes(path));
}

} // namespace rtap
