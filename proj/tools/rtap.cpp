// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// rtap: compile, run and verify ternary CNNs on the associative-processor
// model.

#include "rtap/driver.h"
#include "rtap/errors.h"

#include <CLI11.hpp>

#include <iostream>

using namespace rtap;

namespace {

struct Flags {
  std::string model, weights, input, program, synthetic;
  std::string opt = "unroll+cse";
  std::string out_dir = ".";
  int rows = 256, cols = 256, domains = 64;
  double cycle_ps = 100, search_fj = 3, write_fj = 3, move_pj = 1;
  uint64_t seed = 1;
  int threads = 1;
  bool events = false;

  RunConfig config() const {
    RunConfig c;
    if (!model.empty())
      c.model = model;
    if (!weights.empty())
      c.weights = weights;
    if (!input.empty())
      c.input = input;
    if (!program.empty())
      c.program = program;
    if (!synthetic.empty())
      c.synthetic = synthetic;
    c.opt = parse_opt_level(opt);
    c.geometry.rows = rows;
    c.geometry.cols = cols;
    c.geometry.domains = domains;
    c.geometry.validate();
    c.energy.cycle_ns = cycle_ps / 1000.0;
    c.energy.search_fj_per_bit = search_fj;
    c.energy.write_fj_per_bit = write_fj;
    c.energy.move_pj_per_bit = move_pj;
    c.energy.validate();
    c.seed = seed;
    c.out_dir = out_dir;
    c.threads = threads;
    c.events = events;
    return c;
  }
};

void add_common(CLI::App *cmd, Flags &f) {
  cmd->add_option("--model", f.model, "Network manifest (JSON)");
  cmd->add_option("--weights", f.weights, "Ternary weights blob");
  cmd->add_option("--input", f.input, "Input feature map");
  cmd->add_option("--program", f.program, "Compiled program");
  cmd->add_option("--synthetic", f.synthetic,
                  "LAYERSxCHANNELSxSPARSITY[,in_channels=..,size=..,bits=..,"
                  "kernel=..,pad=..]");
  cmd->add_option("--opt", f.opt, "unroll | unroll+cse")
      ->check(CLI::IsMember({"unroll", "unroll+cse"}));
  cmd->add_option("--rows", f.rows, "CAM rows per AP");
  cmd->add_option("--cols", f.cols, "CAM columns per AP");
  cmd->add_option("--domains", f.domains, "Domains per nanowire");
  cmd->add_option("--cycle-ps", f.cycle_ps, "Cycle time in ps");
  cmd->add_option("--search-fj", f.search_fj, "Search energy per bit (fJ)");
  cmd->add_option("--write-fj", f.write_fj, "Write energy per bit (fJ)");
  cmd->add_option("--move-pj", f.move_pj, "Interconnect energy per bit (pJ)");
  cmd->add_option("--seed", f.seed, "Seed for synthetic models and inputs");
  cmd->add_option("--out-dir", f.out_dir, "Output directory");
  cmd->add_option("--threads", f.threads, "Simulator worker threads");
  cmd->add_flag("--events", f.events, "Also write events.ndjson");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Ternary CNN compiler and racetrack associative-processor "
               "simulator"};
  app.require_subcommand(1);
  Flags f;

  CLI::App *compile = app.add_subcommand("compile", "Compile a network");
  CLI::App *run = app.add_subcommand("run", "Simulate a program or network");
  CLI::App *verify = app.add_subcommand("verify", "Check against the reference");
  for (CLI::App *c : {compile, run, verify})
    add_common(c, f);

  CLI::App *lut = app.add_subcommand("lut", "Check or derive 1-bit LUTs");
  std::string mode, op = "add", addressing = "in_place", table;
  bool negated = false;
  lut->add_option("mode", mode, "check | derive")
      ->required()
      ->check(CLI::IsMember({"check", "derive"}));
  lut->add_option("--op", op, "add | sub")->check(CLI::IsMember({"add", "sub"}));
  lut->add_option("--addressing", addressing, "in_place | out_of_place")
      ->check(CLI::IsMember({"in_place", "out_of_place"}));
  lut->add_flag("--negated", negated, "Negated-output variant");
  lut->add_option("--file", table, "Table text to check instead of the builtin");

  CLI::App *report = app.add_subcommand("report", "Render a stats file");
  std::string stats, other;
  report->add_option("--stats", stats, "stats.json")->required();
  report->add_option("--compare", other, "Second stats.json for op counts");

  CLI11_PARSE(app, argc, argv);

  try {
    if (compile->parsed())
      return cmd_compile(f.config(), std::cout);
    if (run->parsed())
      return cmd_run(f.config(), std::cout);
    if (verify->parsed())
      return cmd_verify(f.config(), std::cout);
    if (lut->parsed()) {
      std::optional<std::filesystem::path> file;
      if (!table.empty())
        file = table;
      return cmd_lut(mode, op == "add" ? OpKind::Add : OpKind::Sub,
                     addressing == "in_place" ? Addressing::InPlace
                                              : Addressing::OutOfPlace,
                     negated, file, std::cout);
    }
    std::optional<std::filesystem::path> cmp;
    if (!other.empty())
      cmp = other;
    return cmd_report(stats, cmp, std::cout);
  } catch (const CapacityError &e) {
    std::cerr << "rtap: capacity: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const SimulationError &e) {
    std::cerr << "rtap: simulation: " << e.what() << "\n";
    return kExitMismatch;
  } catch (const std::exception &e) {
    std::cerr << "rtap: " << e.what() << "\n";
    return kExitFormat;
  }
}
