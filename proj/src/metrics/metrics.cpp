// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/metrics.h"

#include "rtap/errors.h"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

namespace rtap {

using nlohmann::json;

void EnergyModel::validate() const {
  for (double v : {search_fj_per_bit, write_fj_per_bit, shift_fj_per_track_step,
                   move_pj_per_bit, cycle_ns, write_endurance})
    if (!(v >= 0) || !std::isfinite(v))
      throw FormatError("energy model figures must be finite and non-negative");
}

Energy &Energy::operator+=(const Energy &o) {
  search_pj += o.search_pj;
  write_pj += o.write_pj;
  shift_pj += o.shift_pj;
  move_pj += o.move_pj;
  return *this;
}

namespace {

Energy energy_of(const Event &e, const EnergyModel &m) {
  Energy out;
  const double bits = static_cast<double>(e.bits);
  switch (e.kind) {
  case EventKind::Search:
  case EventKind::Read:
    out.search_pj = bits * m.search_fj_per_bit * 1e-3;
    break;
  case EventKind::Write:
    out.write_pj = bits * m.write_fj_per_bit * 1e-3;
    break;
  case EventKind::Shift:
    out.shift_pj = static_cast<double>(e.track_steps) * m.shift_fj_per_track_step * 1e-3;
    break;
  case EventKind::Move:
    // A same-array copy never leaves the AP: it is a write, not a transfer.
    if (e.hop == HopLevel::Local)
      out.write_pj = bits * m.write_fj_per_bit * 1e-3;
    else
      out.move_pj = bits * m.move_pj_per_bit;
    break;
  case EventKind::Macro:
    break;
  }
  return out;
}

bool writes_column(const Event &e) {
  return (e.kind == EventKind::Write || e.kind == EventKind::Move) &&
         e.column >= 0 && e.bits > 0;
}

} // namespace

Stats account(std::span<const Event> events, const EnergyModel &model,
              const ApProgram *program) {
  model.validate();
  std::map<int, LayerStats> layers;
  // (layer, epoch) -> ap -> cycles
  std::map<std::pair<int, int>, std::map<int, int64_t>> busy;
  std::map<std::pair<int, int>, int64_t> column_writes; // (ap, column)
  std::map<int, std::map<std::pair<int, int>, int64_t>> layer_column_writes;

  for (const Event &e : events) {
    LayerStats &ls = layers[e.layer];
    ls.layer = e.layer;
    const Energy en = energy_of(e, model);
    ls.energy += en;
    switch (e.phase) {
    case Phase::Dfg:
      ls.dfg += en;
      break;
    case Phase::Accumulation:
      ls.accumulation += en;
      break;
    case Phase::Io:
      ls.io += en;
      break;
    }
    if (e.kind == EventKind::Macro) {
      ++ls.adds;
      if (e.phase == Phase::Dfg)
        ++ls.dfg_adds;
      else
        ++ls.accumulation_adds;
    }
    busy[{e.layer, e.epoch}][e.ap] += e.cycles;
    if (writes_column(e)) {
      ++column_writes[{e.ap, e.column}];
      ++layer_column_writes[e.layer][{e.ap, e.column}];
    }
  }

  for (const auto &[key, per_ap] : busy) {
    int64_t worst = 0;
    for (const auto &[ap, cycles] : per_ap)
      worst = std::max(worst, cycles);
    layers[key.first].cycles += worst;
  }
  for (const auto &[layer, counts] : layer_column_writes)
    for (const auto &[col, n] : counts)
      layers[layer].max_column_writes = std::max(layers[layer].max_column_writes, n);

  if (program)
    for (std::size_t i = 0; i < program->layers.size(); ++i) {
      const LayerProgram &lp = program->layers[i];
      if (lp.kind != LayerKind::Conv)
        continue;
      LayerStats &ls = layers[static_cast<int>(i)];
      ls.layer = static_cast<int>(i);
      ls.unroll_ops = lp.unroll_ops;
      ls.dfg_ops = lp.dfg_ops;
      ls.utilization = lp.placement.utilization;
    }

  Stats s;
  s.total.layer = -1;
  double rows_used = 0, layers_with_rows = 0;
  for (auto &[layer, ls] : layers) {
    ls.ns = static_cast<double>(ls.cycles) * model.cycle_ns;
    s.total.cycles += ls.cycles;
    s.total.energy += ls.energy;
    s.total.dfg += ls.dfg;
    s.total.accumulation += ls.accumulation;
    s.total.io += ls.io;
    s.total.adds += ls.adds;
    s.total.dfg_adds += ls.dfg_adds;
    s.total.accumulation_adds += ls.accumulation_adds;
    s.total.unroll_ops += ls.unroll_ops;
    s.total.dfg_ops += ls.dfg_ops;
    if (ls.utilization > 0) {
      rows_used += ls.utilization;
      layers_with_rows += 1;
    }
    s.layers.push_back(ls);
  }
  s.total.ns = static_cast<double>(s.total.cycles) * model.cycle_ns;
  s.total.utilization = layers_with_rows > 0 ? rows_used / layers_with_rows : 0;
  for (const auto &[col, n] : column_writes)
    s.total.max_column_writes = std::max(s.total.max_column_writes, n);
  return s;
}

double endurance_years(double write_endurance, double interval_s) {
  constexpr double kSecondsPerYear = 365.25 * 24 * 3600;
  return write_endurance * interval_s / kSecondsPerYear;
}

std::optional<double> endurance_estimate(const Stats &stats,
                                         const EnergyModel &model) {
  if (stats.total.max_column_writes == 0)
    return std::nullopt;
  const double runtime_s = stats.total.ns * 1e-9;
  const double interval = runtime_s / static_cast<double>(stats.total.max_column_writes);
  return endurance_years(model.write_endurance, interval);
}

namespace {

json energy_json(const Energy &e) {
  return {{"search_pJ", e.search_pj},
          {"write_pJ", e.write_pj},
          {"shift_pJ", e.shift_pj},
          {"move_pJ", e.move_pj},
          {"total_pJ", e.total()}};
}

Energy energy_from(const json &j) {
  Energy e;
  e.search_pj = j.at("search_pJ").get<double>();
  e.write_pj = j.at("write_pJ").get<double>();
  e.shift_pj = j.at("shift_pJ").get<double>();
  e.move_pj = j.at("move_pJ").get<double>();
  return e;
}

json layer_json(const LayerStats &l) {
  json j;
  if (l.layer >= 0)
    j["layer"] = l.layer;
  j["cycles"] = l.cycles;
  j["ns"] = l.ns;
  j["energy"] = energy_json(l.energy);
  j["phases"] = {{"dfg", energy_json(l.dfg)},
                 {"accumulation", energy_json(l.accumulation)},
                 {"io", energy_json(l.io)}};
  j["adds"] = l.adds;
  j["dfg_adds"] = l.dfg_adds;
  j["accumulation_adds"] = l.accumulation_adds;
  j["unroll_ops"] = l.unroll_ops;
  j["dfg_ops"] = l.dfg_ops;
  j["utilization"] = l.utilization;
  j["max_column_writes"] = l.max_column_writes;
  return j;
}

LayerStats layer_from(const json &j) {
  LayerStats l;
  l.layer = j.contains("layer") ? j.at("layer").get<int>() : -1;
  l.cycles = j.at("cycles").get<int64_t>();
  l.ns = j.at("ns").get<double>();
  l.energy = energy_from(j.at("energy"));
  l.dfg = energy_from(j.at("phases").at("dfg"));
  l.accumulation = energy_from(j.at("phases").at("accumulation"));
  l.io = energy_from(j.at("phases").at("io"));
  l.adds = j.at("adds").get<int64_t>();
  l.dfg_adds = j.at("dfg_adds").get<int64_t>();
  l.accumulation_adds = j.at("accumulation_adds").get<int64_t>();
  l.unroll_ops = j.at("unroll_ops").get<int64_t>();
  l.dfg_ops = j.at("dfg_ops").get<int64_t>();
  l.utilization = j.at("utilization").get<double>();
  l.max_column_writes = j.at("max_column_writes").get<int64_t>();
  return l;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

} // namespace

std::string report_json(const Stats &stats, const EnergyModel &model,
                        const ApProgram *program) {
  json j;
  j["format_version"] = kStatsVersion;
  j["model"] = {{"search_fJ_per_bit", model.search_fj_per_bit},
                {"write_fJ_per_bit", model.write_fj_per_bit},
                {"shift_fJ_per_track_step", model.shift_fj_per_track_step},
                {"move_pJ_per_bit", model.move_pj_per_bit},
                {"cycle_ns", model.cycle_ns},
                {"write_endurance", model.write_endurance}};
  if (program) {
    const ApGeometry &g = program->geometry;
    j["program"] = {{"opt", to_string(program->opt)},
                    {"rows", g.rows},
                    {"cols", g.cols},
                    {"domains", g.domains},
                    {"aps_per_tile", g.aps_per_tile},
                    {"tiles_per_bank", g.tiles_per_bank},
                    {"banks", g.banks}};
  }
  j["layers"] = json::array();
  for (const LayerStats &l : stats.layers)
    j["layers"].push_back(layer_json(l));
  j["total"] = layer_json(stats.total);
  const double total = stats.total.energy.total();
  j["interconnect_share"] = total > 0 ? stats.total.energy.move_pj / total : 0.0;
  if (auto years = endurance_estimate(stats, model))
    j["endurance_years"] = *years;
  else
    j["endurance_years"] = nullptr;
  return j.dump(2) + "\n";
}

Stats parse_stats_json(std::string_view text, EnergyModel *model) {
  try {
    const json j = json::parse(text);
    if (j.at("format_version").get<int>() != kStatsVersion)
      throw FormatError("unsupported stats version");
    if (model) {
      const json &m = j.at("model");
      model->search_fj_per_bit = m.at("search_fJ_per_bit").get<double>();
      model->write_fj_per_bit = m.at("write_fJ_per_bit").get<double>();
      model->shift_fj_per_track_step = m.at("shift_fJ_per_track_step").get<double>();
      model->move_pj_per_bit = m.at("move_pJ_per_bit").get<double>();
      model->cycle_ns = m.at("cycle_ns").get<double>();
      model->write_endurance = m.at("write_endurance").get<double>();
    }
    Stats s;
    for (const json &l : j.at("layers"))
      s.layers.push_back(layer_from(l));
    s.total = layer_from(j.at("total"));
    return s;
  } catch (const json::exception &e) {
    throw FormatError(std::string("malformed stats document: ") + e.what());
  }
}

std::string report_csv(const Stats &stats) {
  std::ostringstream os;
  os << "layer,cycles,ns,e_search_pJ,e_write_pJ,e_shift_pJ,e_move_pJ,"
        "e_total_pJ,adds,utilization\n";
  auto row = [&](const std::string &name, const LayerStats &l) {
    os << name << ',' << l.cycles << ',' << fixed(l.ns, 3) << ','
       << fixed(l.energy.search_pj, 6) << ',' << fixed(l.energy.write_pj, 6)
       << ',' << fixed(l.energy.shift_pj, 6) << ',' << fixed(l.energy.move_pj, 6)
       << ',' << fixed(l.energy.total(), 6) << ',' << l.adds << ','
       << fixed(l.utilization, 4) << "\n";
  };
  for (const LayerStats &l : stats.layers)
    row(std::to_string(l.layer), l);
  row("total", stats.total);
  return os.str();
}

std::string report_text(const Stats &stats, const EnergyModel &model,
                        const Stats *other) {
  std::ostringstream os;
  os << "model: search " << model.search_fj_per_bit << " fJ/bit, write "
     << model.write_fj_per_bit << " fJ/bit (assumed), shift "
     << model.shift_fj_per_track_step << " fJ/track-step (assumed), move "
     << model.move_pj_per_bit << " pJ/bit, cycle " << model.cycle_ns
     << " ns, endurance " << model.write_endurance << " writes\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-6s %12s %12s %14s %14s %8s %8s\n", "layer",
                "cycles", "ns", "energy_pJ", "dfg_pJ", "adds", "util");
  os << line;
  auto row = [&](const std::string &name, const LayerStats &l) {
    std::snprintf(line, sizeof line, "%-6s %12lld %12.1f %14.3f %14.3f %8lld %8.3f\n",
                  name.c_str(), static_cast<long long>(l.cycles), l.ns,
                  l.energy.total(), l.dfg.total(), static_cast<long long>(l.adds),
                  l.utilization);
    os << line;
  };
  for (const LayerStats &l : stats.layers)
    row(std::to_string(l.layer), l);
  row("total", stats.total);

  const double total = stats.total.energy.total();
  os << "interconnect share: "
     << fixed(total > 0 ? 100.0 * stats.total.energy.move_pj / total : 0.0, 2)
     << "%\n";
  if (auto years = endurance_estimate(stats, model))
    os << "endurance: " << fixed(*years, 3) << " years\n";
  else
    os << "endurance: unbounded (no writes)\n";

  if (other) {
    os << "op counts (this vs other):\n";
    std::map<int, const LayerStats *> theirs;
    for (const LayerStats &l : other->layers)
      theirs[l.layer] = &l;
    for (const LayerStats &l : stats.layers) {
      auto it = theirs.find(l.layer);
      if (it == theirs.end() || l.unroll_ops == 0)
        continue;
      const int64_t a = l.dfg_ops, b = it->second->dfg_ops;
      os << "  layer " << l.layer << ": " << a << " vs " << b;
      if (std::max(a, b) > 0)
        os << " (" << fixed(100.0 * (1.0 - static_cast<double>(std::min(a, b)) /
                                               static_cast<double>(std::max(a, b))),
                            1)
           << "% fewer in the smaller)";
      os << "\n";
    }
    const int64_t a = stats.total.dfg_ops, b = other->total.dfg_ops;
    os << "  total: " << a << " vs " << b << "\n";
  }
  return os.str();
}

} // namespace rtap
