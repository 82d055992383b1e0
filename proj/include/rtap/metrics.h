// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Energy, latency and endurance accounting over simulator event logs.

#ifndef RTAP_METRICS_H
#define RTAP_METRICS_H

#include "rtap/sim.h"

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rtap {

/// Figures of merit. Write and shift energies are assumptions, not
/// measured figures; both are configurable.
struct EnergyModel {
  double search_fj_per_bit = 3.0;
  double write_fj_per_bit = 3.0;
  double shift_fj_per_track_step = 0.1;
  double move_pj_per_bit = 1.0;
  double cycle_ns = 0.1;
  double write_endurance = 1e16;

  void validate() const;
};

struct Energy {
  double search_pj = 0;
  double write_pj = 0;
  double shift_pj = 0;
  double move_pj = 0;

  double total() const { return search_pj + write_pj + shift_pj + move_pj; }
  Energy &operator+=(const Energy &o);
};

struct LayerStats {
  int layer = -1; // -1 for totals
  int64_t cycles = 0;
  double ns = 0;
  Energy energy;
  Energy dfg;          // channel-wise phase
  Energy accumulation; // local and tree accumulation
  Energy io;           // loads and readout
  int64_t adds = 0;    // executed add/sub macros
  int64_t dfg_adds = 0;
  int64_t accumulation_adds = 0;
  int64_t unroll_ops = 0;
  int64_t dfg_ops = 0;
  double utilization = 0;
  int64_t max_column_writes = 0;
};

struct Stats {
  std::vector<LayerStats> layers;
  LayerStats total;
};

/// Latency is the sum over barrier epochs of the busiest AP's cycles.
/// `program` supplies op counts and utilization when given.
Stats account(std::span<const Event> events, const EnergyModel &model,
              const ApProgram *program = nullptr);

/// Lifetime when the hottest column is rewritten every `interval_s`.
double endurance_years(double write_endurance, double interval_s);

/// Lifetime of the hottest column under this run's write rate, repeated
/// back to back; empty when nothing was written (unbounded).
std::optional<double> endurance_estimate(const Stats &stats,
                                         const EnergyModel &model);

/// Versioned structured report.
std::string report_json(const Stats &stats, const EnergyModel &model,
                        const ApProgram *program = nullptr);
/// Fixed column order: layer, cycles, ns, e_search_pJ, e_write_pJ,
/// e_shift_pJ, e_move_pJ, e_total_pJ, adds, utilization.
std::string report_csv(const Stats &stats);
/// Human-readable table; with `other`, a side-by-side op-count comparison.
std::string report_text(const Stats &stats, const EnergyModel &model,
                        const Stats *other = nullptr);

/// Inverse of report_json; throws FormatError on a malformed document.
Stats parse_stats_json(std::string_view text, EnergyModel *model = nullptr);

inline constexpr int kStatsVersion = 1;

} // namespace rtap

#endif // RTAP_METRICS_H
