// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/driver.h"

#include "rtap/dfg.h"
#include "rtap/errors.h"
#include "rtap/lowering.h"
#include "rtap/sched.h"
#include "rtap/sim.h"

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <sstream>

namespace rtap {

using nlohmann::json;
namespace fs = std::filesystem;

TernaryNetwork config_network(const RunConfig &cfg) {
  if (cfg.synthetic)
    return synthetic_network(parse_synthetic(*cfg.synthetic), cfg.seed);
  if (!cfg.model || !cfg.weights)
    throw FormatError("a model needs --model and --weights, or --synthetic");
  return load_network_files(*cfg.model, *cfg.weights);
}

FeatureMap config_input(const RunConfig &cfg, const FeatureMapShape &shape) {
  if (cfg.input) {
    FeatureMap fm = read_feature_map(*cfg.input);
    if (fm.shape != shape)
      throw ShapeError("input feature map does not match the network input");
    return fm;
  }
  return random_feature_map(shape, cfg.seed);
}

namespace {

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw FormatError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path &path) {
  const std::vector<uint8_t> bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

/// Add/sub counts of every conv layer at both optimization levels, over
/// the full weight slices.
json op_counts(const TernaryNetwork &net) {
  json layers = json::array();
  int64_t unroll_total = 0, cse_total = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const Layer &l = net.layers[i];
    if (l.kind != LayerKind::Conv)
      continue;
    int64_t unroll = 0, cse = 0;
    for (const LinearSystem &s : lower_layer(l.weights, l.shape)) {
      const DataFlowGraph g = build_dfg(s);
      unroll += g.op_count();
      cse += eliminate_common_subexpressions(g).op_count();
    }
    unroll_total += unroll;
    cse_total += cse;
    layers.push_back({{"layer", i}, {"unroll", unroll}, {"unroll+cse", cse}});
  }
  return {{"layers", layers},
          {"total", {{"unroll", unroll_total}, {"unroll+cse", cse_total}}}};
}

json placement_json(const LayerProgram &l) {
  const LayerPlacement &p = l.placement;
  return {{"row_groups", p.row_groups},
          {"channel_groups", p.channel_groups},
          {"channels_per_group", p.channels_per_group},
          {"tiles", p.tiles},
          {"tile_rows", p.tile_rows},
          {"slots", p.slots},
          {"temp_columns", p.temp_columns},
          {"aps", p.aps},
          {"utilization", p.utilization}};
}

ApProgram config_program(const RunConfig &cfg, const TernaryNetwork *net) {
  if (cfg.program)
    return load_program(cfg.program->string());
  return emit_program(*net, cfg.geometry, cfg.opt);
}

} // namespace

int cmd_compile(const RunConfig &cfg, std::ostream &out) {
  const TernaryNetwork net = config_network(cfg);
  const ApProgram prog = emit_program(net, cfg.geometry, cfg.opt);
  fs::create_directories(cfg.out_dir);
  save_program((cfg.out_dir / "program.bin").string(), prog);

  json report;
  report["format_version"] = 1;
  report["name"] = net.name;
  report["opt"] = to_string(cfg.opt);
  report["geometry"] = {{"rows", cfg.geometry.rows},
                        {"cols", cfg.geometry.cols},
                        {"domains", cfg.geometry.domains},
                        {"aps_per_tile", cfg.geometry.aps_per_tile},
                        {"tiles_per_bank", cfg.geometry.tiles_per_bank},
                        {"banks", cfg.geometry.banks}};
  report["op_counts"] = op_counts(net);
  json layers = json::array();
  for (std::size_t i = 0; i < prog.layers.size(); ++i) {
    const LayerProgram &l = prog.layers[i];
    json j = {{"layer", i},
              {"kind", l.kind == LayerKind::Conv ? "conv"
                       : l.kind == LayerKind::Pool ? "pool"
                                                   : "add"}};
    if (l.kind == LayerKind::Conv) {
      j["unroll_ops"] = l.unroll_ops;
      j["compiled_ops"] = l.dfg_ops;
      j["placement"] = placement_json(l);
    }
    layers.push_back(std::move(j));
  }
  report["layers"] = layers;
  const std::vector<std::string> &diag = standard_luts().diagnostics;
  report["lut_diagnostics"] = diag;
  write_text(cfg.out_dir / "compile_report.json", report.dump(2) + "\n");

  const json &t = report["op_counts"]["total"];
  out << "compiled " << net.name << " (" << prog.layers.size() << " layers, "
      << to_string(cfg.opt) << ")\n"
      << "add/sub ops: unroll " << t["unroll"].get<int64_t>() << ", unroll+cse "
      << t["unroll+cse"].get<int64_t>() << "\n"
      << "wrote " << (cfg.out_dir / "program.bin").string() << "\n";
  return kExitOk;
}

int cmd_run(const RunConfig &cfg, std::ostream &out) {
  std::optional<TernaryNetwork> net;
  if (!cfg.program)
    net = config_network(cfg);
  const ApProgram prog = config_program(cfg, net ? &*net : nullptr);
  const FeatureMap input = config_input(cfg, prog.input);

  SimState state(prog.geometry);
  SimOptions opt;
  opt.threads = cfg.threads;
  const RunResult r = run(state, prog, input, opt);
  const Stats stats = account(r.events, cfg.energy, &prog);

  fs::create_directories(cfg.out_dir);
  write_feature_map(cfg.out_dir / "ofm.bin", r.trace.empty() ? input : r.trace.back());
  write_text(cfg.out_dir / "stats.json", report_json(stats, cfg.energy, &prog));
  write_text(cfg.out_dir / "stats.csv", report_csv(stats));
  if (cfg.events) {
    std::ofstream ev(cfg.out_dir / "events.ndjson", std::ios::binary);
    write_events_ndjson(ev, r.events);
  }
  out << report_text(stats, cfg.energy);
  return kExitOk;
}

int cmd_verify(const RunConfig &cfg, std::ostream &out) {
  const TernaryNetwork net = config_network(cfg);
  const FeatureMap input = config_input(cfg, net.input);
  const std::vector<FeatureMap> want = reference_inference(net, input);
  const ApProgram prog = config_program(cfg, &net);

  RunResult got;
  try {
    SimState state(prog.geometry);
    SimOptions opt;
    opt.threads = cfg.threads;
    got = run(state, prog, input, opt);
  } catch (const SimulationError &e) {
    out << "FAIL: simulation aborted: " << e.what() << "\n";
    return kExitMismatch;
  }
  if (got.trace.size() != want.size()) {
    out << "FAIL: trace has " << got.trace.size() << " layers, expected "
        << want.size() << "\n";
    return kExitMismatch;
  }
  for (std::size_t i = 0; i < want.size(); ++i) {
    const FeatureMap &a = want[i], &b = got.trace[i];
    if (a.shape != b.shape) {
      out << "FAIL: layer " << i << " output shape differs\n";
      return kExitMismatch;
    }
    for (int c = 0; c < a.shape.channels; ++c)
      for (int y = 0; y < a.shape.height; ++y)
        for (int x = 0; x < a.shape.width; ++x)
          if (a.at(c, y, x) != b.at(c, y, x)) {
            out << "FAIL: layer " << i << " channel " << c << " y " << y
                << " x " << x << ": expected " << a.at(c, y, x) << ", got "
                << b.at(c, y, x) << "\n";
            return kExitMismatch;
          }
  }
  out << "PASS: " << want.size() << " layers bit-exact (" << to_string(prog.opt)
      << ")\n";
  return kExitOk;
}

int cmd_lut(std::string_view mode, OpKind op, Addressing addressing,
            bool negated, const std::optional<fs::path> &table_file,
            std::ostream &out) {
  if (mode == "derive") {
    try {
      const LutTable t = derive_lut(op, addressing, negated);
      out << dump_lut(t) << "passes: " << t.passes() << "\n";
      const auto cx = validate_lut(t);
      out << (cx ? "counterexample: " + cx->message : std::string("ok")) << "\n";
      return cx ? kExitMismatch : kExitOk;
    } catch (const LutDerivationError &e) {
      out << "derivation failed: " << e.what() << "\n";
      return kExitCapacity;
    }
  }
  if (mode != "check")
    throw FormatError("lut mode must be check or derive");

  LutTable t;
  if (table_file) {
    t = parse_lut(read_text(*table_file));
  } else if (!negated) {
    bool found = false;
    for (const LutTable &b : builtin_luts())
      if (b.op == op && b.addressing == addressing) {
        t = b;
        found = true;
      }
    if (!found)
      throw FormatError("no builtin table");
  } else {
    const LutTable *d = standard_luts().set.find(op, addressing, true);
    if (!d) {
      out << "no negated " << to_string(op) << ' ' << to_string(addressing)
          << " table exists\n";
      return kExitCapacity;
    }
    t = *d;
  }
  out << dump_lut(t);
  const auto cx = validate_lut(t);
  if (!cx) {
    out << "ok\n";
    return kExitOk;
  }
  out << "counterexample";
  if (cx->state >= 0)
    out << " (state " << ((cx->state >> 2) & 1) << ((cx->state >> 1) & 1)
        << (cx->state & 1) << ")";
  out << ": " << cx->message << "\n";
  if (!table_file && !negated) {
    for (const std::string &d : standard_luts().diagnostics)
      if (d.rfind(std::string(to_string(addressing)) + ' ' + to_string(op) + ':', 0) == 0)
        out << "repair: " << d << "\n";
  }
  return kExitMismatch;
}

int cmd_report(const fs::path &stats, const std::optional<fs::path> &other,
               std::ostream &out) {
  EnergyModel model;
  const Stats s = parse_stats_json(read_text(stats), &model);
  std::optional<Stats> o;
  if (other)
    o = parse_stats_json(read_text(*other));
  out << report_text(s, model, o ? &*o : nullptr) << "\n" << report_csv(s);
  return kExitOk;
}

} // namespace rtap
