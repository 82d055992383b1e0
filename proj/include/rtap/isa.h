// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Associative-processor instruction set: 1-bit add/sub lookup tables, their
// validation and derivation, and the expansion of multi-bit add/sub macros
// into masked-search / tagged-write / shift micro-operations.

#ifndef RTAP_ISA_H
#define RTAP_ISA_H

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace rtap {

enum class OpKind : uint8_t { Add, Sub };
enum class Addressing : uint8_t { InPlace, OutOfPlace };

const char *to_string(OpKind k);
const char *to_string(Addressing a);

/// One truth-table row. `key` packs (carry, B, A) as bits 2..0; `write`
/// packs (carry, B) for in-place or (carry, R) for out-of-place as bits 1..0.
/// `pass` is the 1-based run order, 0 for NC.
struct LutEntry {
  uint8_t key = 0;
  uint8_t write = 0;
  int pass = 0;

  bool nc() const { return pass == 0; }
  bool operator==(const LutEntry &) const = default;
};

struct LutTable {
  OpKind op = OpKind::Add;
  Addressing addressing = Addressing::InPlace;
  bool negated = false;
  /// Value written to the carry/borrow column before bit 0.
  uint8_t carry_init = 0;
  std::array<LutEntry, 8> entries{};

  int passes() const;
  /// Non-NC entries in run order.
  std::vector<LutEntry> pass_order() const;
  const LutEntry &entry(uint8_t key) const;

  bool operator==(const LutTable &) const = default;
};

/// The four tables exactly as printed: in-place add, out-of-place add,
/// in-place sub, out-of-place sub.
std::vector<LutTable> builtin_luts();

struct LutCounterexample {
  /// Initial row state (carry, B, A) for per-row failures; -1 otherwise.
  int state = -1;
  /// Operands for multi-bit failures.
  int64_t a = 0;
  int64_t b = 0;
  std::string message;
};

/// Sequential pass simulation over all eight row states (R cleared for
/// out-of-place), including rows re-matching a later key after being
/// rewritten, then an exhaustive 4-bit check of the composed arithmetic.
std::optional<LutCounterexample> validate_lut(const LutTable &t);

/// Minimal-pass table for the requested semantics, found by brute force over
/// write patterns, carry initialisation and pass orderings. Throws
/// LutDerivationError when nothing in the search space is correct.
LutTable derive_lut(OpKind op, Addressing addressing, bool negated);

/// Exact result of the table's operation on m-bit two's-complement operands,
/// wrapped to m bits. Add: A + B; Sub: B - A; negated variants negate.
int64_t lut_reference(OpKind op, bool negated, int64_t a, int64_t b, int m);

/// Text form: a header line "lut <op> <addressing> negated=<0|1>
/// carry_init=<0|1>" and eight lines "<CBA> -> <CW> <pass|NC>" in key order.
std::string dump_lut(const LutTable &t);
LutTable parse_lut(std::string_view text);

using LutKey = std::tuple<OpKind, Addressing, bool>;

/// The tables a program executes with.
struct LutSet {
  std::map<LutKey, LutTable> tables;

  const LutTable *find(OpKind op, Addressing a, bool negated) const;
  void put(const LutTable &t);
  bool operator==(const LutSet &) const = default;
};

/// Printed tables that validate, derived replacements for those that do
/// not, plus derived negated-output variants that exist.
struct StandardLuts {
  LutSet set;
  /// One line per replaced or missing table, naming divergent entries.
  std::vector<std::string> diagnostics;
};

const StandardLuts &standard_luts();

enum class MicroKind : uint8_t { Search, Write, Shift, Clear, Move, Read, Load };

const char *to_string(MicroKind k);

/// Phase a micro-op is accounted to.
enum class Phase : uint8_t { Dfg, Accumulation, Io };

const char *to_string(Phase p);

/// Search: compare visible bits of `columns` with `key` into the tag.
/// Write: set `columns` to `key` in tagged rows (all rows if !tagged).
/// Clear: untagged write of `key` (carry initialisation, R clearing).
/// Shift: align every column in `columns` to domain `target`.
/// Move: copy domains [0, width) of (src_ap, src_column) into columns[0].
/// Read: controller readout of columns[0], `width` bits, signed.
/// Load: controller im2col load of a channel range into patch columns.
struct MicroOp {
  MicroKind kind = MicroKind::Search;
  std::vector<int> columns;
  std::vector<uint8_t> key;
  bool tagged = true;
  int target = 0;
  int steps = 0;
  int src_ap = -1;
  int src_column = -1;
  int width = 0;
  // Read: output channel row of the tile; Load: first channel and count.
  int arg0 = 0;
  int arg1 = 0;

  bool operator==(const MicroOp &) const = default;
};

/// Where a macro operand's bit i comes from.
/// Unsigned: bits >= width read as zero (the pinned zero column).
/// Signed: bits >= width repeat the sign bit (domain base + width - 1).
enum class OperandKind : uint8_t { Zero, Unsigned, Signed };

struct Operand {
  OperandKind kind = OperandKind::Zero;
  int column = -1;
  int base = 0;
  int width = 0;

  static Operand zero() { return {}; }
  static Operand input(int column, int base, int width) {
    return {OperandKind::Unsigned, column, base, width};
  }
  static Operand value(int column, int width) {
    return {OperandKind::Signed, column, 0, width};
  }
  bool operator==(const Operand &) const = default;
};

/// One m-bit add/sub. In-place overwrites B (which must be a signed value
/// stored with at least `width` bits); out-of-place writes every column in
/// `dests` (domains [0, width)) in one tagged write per pass.
struct MacroInstr {
  OpKind op = OpKind::Add;
  Addressing addressing = Addressing::InPlace;
  bool negated = false;
  int width = 1;
  Operand a;
  Operand b;
  std::vector<int> dests;
  int carry_column = 0;
  int zero_column = 0;
  Phase phase = Phase::Dfg;

  bool operator==(const MacroInstr &) const = default;
};

/// Per-column aligned domain, as the compiler or simulator tracks it.
using ColumnAlignment = std::vector<int>;

/// Expands a macro against the given tables. Shift micro-ops carry the step
/// count implied by `align`, which is updated. Throws std::invalid_argument
/// for a missing table, zero width or inconsistent operands.
std::vector<MicroOp> expand_macro(const MacroInstr &m, const LutSet &luts,
                                  ColumnAlignment &align);
std::vector<MicroOp> expand_macro(const MacroInstr &m, const LutSet &luts);

struct CycleModel {
  int shift_cycles_per_step = 1;
  int move_cycles_per_bit = 1;
};

int64_t cycle_count(std::span<const MicroOp> ops, const CycleModel &model = {});
/// Search and write cycles only (no shifts, clears or transfers).
int64_t compute_cycles(std::span<const MicroOp> ops);

} // namespace rtap

#endif // RTAP_ISA_H
