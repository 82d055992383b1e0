// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Compiled accelerator programs and their binary container. The byte layout
// is described in docs/program-format.md.

#ifndef RTAP_PROGRAM_H
#define RTAP_PROGRAM_H

#include "rtap/isa.h"
#include "rtap/model.h"

#include <cstdint>
#include <string>
#include <vector>

namespace rtap {

struct ApAddress {
  int bank = 0;
  int tile = 0;
  int slot = 0;
  bool operator==(const ApAddress &) const = default;
};

/// Interconnect level a transfer crosses.
enum class HopLevel : uint8_t { Local, Tile, Bank, Global };

const char *to_string(HopLevel h);

struct ApGeometry {
  int rows = 256;
  int cols = 256;
  int domains = 64;
  int aps_per_tile = 8;
  int tiles_per_bank = 8;
  int banks = 4;

  void validate() const;
  int total_aps() const { return aps_per_tile * tiles_per_bank * banks; }
  /// Contiguous packing: slot fastest, then tile, then bank.
  ApAddress locate(int ap) const;
  HopLevel hop(int src_ap, int dst_ap) const;

  // Reserved columns of every AP.
  int scratch_column() const { return cols - 3; }
  int zero_column() const { return cols - 2; }
  int carry_column() const { return cols - 1; }

  bool operator==(const ApGeometry &) const = default;
};

enum class OptLevel : uint8_t { Unroll, UnrollCse };

const char *to_string(OptLevel o);
OptLevel parse_opt_level(std::string_view s);

/// A stream entry: either an add/sub macro or a bare micro-op.
struct Instr {
  Phase phase = Phase::Dfg;
  bool is_macro = false;
  MacroInstr macro;
  MicroOp micro;

  static Instr of(const MacroInstr &m) {
    Instr i;
    i.phase = m.phase;
    i.is_macro = true;
    i.macro = m;
    return i;
  }
  static Instr of(const MicroOp &op, Phase phase) {
    Instr i;
    i.phase = phase;
    i.micro = op;
    return i;
  }
  bool operator==(const Instr &) const = default;
};

struct Stream {
  int ap = 0;
  std::vector<Instr> instrs;
  bool operator==(const Stream &) const = default;
};

/// Streams of one epoch run concurrently; epochs are separated by barriers.
struct Epoch {
  Phase phase = Phase::Dfg;
  std::vector<Stream> streams;
  bool operator==(const Epoch &) const = default;
};

/// Where a conv layer lives on the accelerator.
struct LayerPlacement {
  int row_groups = 0;
  int channel_groups = 0;
  int channels_per_group = 0;
  int tiles = 0;
  int tile_rows = 0;   // output channels per tile (last tile may be short)
  int slots = 0;       // patch columns
  int temp_columns = 0; // largest temp pool actually used
  int aps = 0;
  double utilization = 0; // used rows / allocated rows

  bool operator==(const LayerPlacement &) const = default;
};

struct LayerProgram {
  LayerKind kind = LayerKind::Conv;
  LayerShape shape;
  QuantSpec quant;
  int skip_tensor = -1;
  LayerPlacement placement;
  int64_t unroll_ops = 0; // declared unroll metric over the full weight slices
  int64_t dfg_ops = 0;    // add/sub nodes actually compiled (per row group)
  std::vector<Epoch> epochs;

  bool operator==(const LayerProgram &) const = default;
};

struct ApProgram {
  ApGeometry geometry;
  OptLevel opt = OptLevel::UnrollCse;
  LutSet luts;
  FeatureMapShape input;
  std::vector<LayerProgram> layers;

  bool operator==(const ApProgram &) const = default;
};

inline constexpr uint32_t kProgramVersion = 1;

std::vector<uint8_t> serialize_program(const ApProgram &p);
/// Throws FormatError on bad magic, version, truncation or trailing bytes.
ApProgram deserialize_program(std::span<const uint8_t> bytes);

void save_program(const std::string &path, const ApProgram &p);
ApProgram load_program(const std::string &path);

} // namespace rtap

#endif // RTAP_PROGRAM_H
