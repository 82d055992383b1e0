// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Bit-accurate model of racetrack-memory CAM arrays and the execution of
// compiled programs on them.

#ifndef RTAP_SIM_H
#define RTAP_SIM_H

#include "rtap/program.h"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rtap {

enum class EventKind : uint8_t { Search, Write, Shift, Move, Read, Macro };

const char *to_string(EventKind k);

/// One accounted hardware action. Writes are logged per column; `bits` is
/// rows touched (times domains for loads). Shifts carry track-steps (rows
/// times domain steps). Macro events only mark an executed add/sub.
struct Event {
  EventKind kind = EventKind::Search;
  int layer = 0;
  int epoch = 0;
  int ap = 0;
  Phase phase = Phase::Dfg;
  int column = -1;
  int64_t bits = 0;
  int64_t track_steps = 0;
  int64_t cycles = 0;
  HopLevel hop = HopLevel::Local;

  bool operator==(const Event &) const = default;
};

/// rows x cols nanowires of `domains` bits. All nanowires of a column shift
/// together; the visible plane is the domain aligned to each column's port.
class CamArray {
public:
  CamArray(int rows, int cols, int domains);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int domains() const { return domains_; }
  int aligned(int col) const { return aligned_.at(check_col(col)); }
  const std::vector<int> &alignment() const { return aligned_; }

  bool bit(int row, int col, int domain) const;
  void set_bit(int row, int col, int domain, bool v);
  bool visible(int row, int col) const { return bit(row, col, aligned(col)); }

  /// Tag[r] = every masked column's visible bit equals its key bit.
  const std::vector<uint64_t> &masked_search(std::span<const int> cols,
                                             std::span<const uint8_t> key);
  /// Returns the number of rows written.
  int64_t tagged_write(std::span<const int> cols, std::span<const uint8_t> key,
                       bool use_tag);
  /// Returns the domain steps taken.
  int shift(int col, int target);

  const std::vector<uint64_t> &tag() const { return tag_; }
  bool tagged(int row) const { return (tag_[row / 64] >> (row % 64)) & 1; }
  int64_t tag_count() const;

  /// Direct domain access used by loads, moves and controller readout.
  void write_value(int row, int col, int base, int width, int64_t value);
  int64_t read_value(int row, int col, int base, int width, bool is_signed) const;
  void copy_domains(int col, const CamArray &src, int src_col, int width);

  /// Visible plane, one text line per row.
  std::string dump_plane() const;

private:
  int check_col(int col) const;
  uint64_t *plane(int col, int domain);
  const uint64_t *plane(int col, int domain) const;
  uint64_t tail_mask() const;

  int rows_, cols_, domains_, words_;
  std::vector<uint64_t> data_;
  std::vector<int> aligned_;
  std::vector<uint64_t> tag_;
};

struct SimOptions {
  CycleModel cycles;
  /// Worker threads for independent AP streams within an epoch.
  int threads = 1;
};

/// Executes one micro-op or macro on `ap`, appending events. `src` is the
/// source array of a Move. Throws SimulationError on malformed operations.
void execute(CamArray &ap, const Instr &in, const LutSet &luts,
             const SimOptions &opt, const Event &context,
             std::vector<Event> &events, const CamArray *src = nullptr);

struct SimState {
  ApGeometry geometry;
  std::map<int, std::unique_ptr<CamArray>> aps;

  explicit SimState(const ApGeometry &geo) : geometry(geo) {}
  CamArray &ap(int id);
};

struct RunResult {
  /// One feature map per layer, like reference_inference.
  std::vector<FeatureMap> trace;
  std::vector<Event> events;
};

RunResult run(SimState &state, const ApProgram &program,
              const FeatureMap &input, const SimOptions &opt = {});

/// Newline-delimited JSON, one event per line.
void write_events_ndjson(std::ostream &os, std::span<const Event> events);

} // namespace rtap

#endif // RTAP_SIM_H
