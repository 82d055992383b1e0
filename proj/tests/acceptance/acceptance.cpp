// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Tolerances are pinned below.

#include "rtap/dfg.h"
#include "rtap/driver.h"
#include "rtap/errors.h"
#include "rtap/metrics.h"
#include "rtap/sched.h"
#include "rtap/sim.h"
#include "support.h"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace rtap;

namespace {

constexpr double kLutSeconds = 1.0;
constexpr double kArithSeconds = 60.0;
constexpr double kEndToEndSeconds = 60.0;
constexpr double kEnergyRelTol = 1e-9;
constexpr double kEnduranceYears = 31.7;
constexpr double kEnduranceRelTol = 0.05;
constexpr uint64_t kSeed = 7;

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string &why) {
    if (ok)
      detail = why;
    ok = false;
  }
};

int failures = 0;

void report(int n, const char *title, const std::function<Outcome()> &body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception &e) {
    o.ok = false;
    o.detail = std::string("exception: ") + e.what();
  }
  std::printf("%s %d %s: %s\n", o.ok ? "PASS" : "FAIL", n, title, o.detail.c_str());
  std::fflush(stdout);
  failures += !o.ok;
}

std::string key_bits(int k) {
  return {char('0' + ((k >> 2) & 1)), char('0' + ((k >> 1) & 1)), char('0' + (k & 1))};
}

// Criterion 1 -------------------------------------------------------------

Outcome lut_tables() {
  Outcome o;
  const auto t0 = Clock::now();
  const std::vector<LutTable> printed = builtin_luts();
  int repaired = 0;
  for (const LutTable &t : printed) {
    const std::string name = std::string(to_string(t.addressing)) + ' ' + to_string(t.op);
    const auto cx = validate_lut(t);
    if (!cx)
      continue;
    if (t.addressing == Addressing::InPlace) {
      o.fail(name + " rejected: " + cx->message);
      continue;
    }
    // Fresh derivation, then the diagnostic must name every divergent key.
    const LutTable d = derive_lut(t.op, t.addressing, false);
    if (validate_lut(d)) {
      o.fail(name + ": derived table does not validate");
      continue;
    }
    const std::vector<std::string> &diag = standard_luts().diagnostics;
    std::string line;
    for (const std::string &s : diag)
      if (s.rfind(name + ':', 0) == 0)
        line = s;
    if (line.empty()) {
      o.fail(name + ": no repair diagnostic");
      continue;
    }
    for (int k = 0; k < 8; ++k)
      if (!(t.entry(static_cast<uint8_t>(k)) == d.entry(static_cast<uint8_t>(k))) &&
          line.find(key_bits(k) + " (") == std::string::npos)
        o.fail(name + ": diagnostic omits divergent key " + key_bits(k));
    ++repaired;
  }
  const double s = since(t0);
  if (s >= kLutSeconds)
    o.fail("took " + std::to_string(s) + " s");
  if (o.ok)
    o.detail = "in-place add/sub validate as printed; " + std::to_string(repaired) +
               " out-of-place table(s) repaired with full diagnostics; " +
               std::to_string(s) + " s";
  return o;
}

// Criterion 2 -------------------------------------------------------------

/// Runs one macro with row i holding (as[i], bs[i]) as `in`-bit signed
/// operands and a result width of m; returns the signed result per row.
std::vector<int64_t> run_rows(OpKind op, Addressing addr, int m, int in,
                              const std::vector<int64_t> &as,
                              const std::vector<int64_t> &bs) {
  enum { A = 0, B = 1, R = 2, Z = 3, C = 4 };
  const int rows = static_cast<int>(as.size());
  const int bw = std::max(in, m);
  CamArray ap(rows, 5, 32);
  for (int i = 0; i < rows; ++i) {
    ap.write_value(i, A, 0, in, as[i]);
    ap.write_value(i, B, 0, bw, bs[i]);
  }
  MacroInstr mi;
  mi.op = op;
  mi.addressing = addr;
  mi.width = m;
  mi.a = Operand::value(A, in);
  mi.b = Operand::value(B, bw);
  if (addr == Addressing::OutOfPlace)
    mi.dests = {R};
  mi.zero_column = Z;
  mi.carry_column = C;
  std::vector<Event> ev;
  execute(ap, Instr::of(mi), standard_luts().set, SimOptions{}, Event{}, ev);
  std::vector<int64_t> out(static_cast<std::size_t>(rows));
  const int col = addr == Addressing::InPlace ? B : R;
  for (int i = 0; i < rows; ++i)
    out[i] = ap.read_value(i, col, 0, m, true);
  return out;
}

Outcome bit_serial() {
  Outcome o;
  const auto t0 = Clock::now();
  int64_t checked = 0;
  auto sweep = [&](int in, const std::vector<int64_t> &as,
                   const std::vector<int64_t> &bs, const char *what) {
    for (OpKind op : {OpKind::Add, OpKind::Sub})
      for (Addressing addr : {Addressing::InPlace, Addressing::OutOfPlace})
        for (int m : {in, in + 1}) {
          const std::vector<int64_t> got = run_rows(op, addr, m, in, as, bs);
          for (std::size_t i = 0; i < as.size(); ++i) {
            const int64_t exact = op == OpKind::Add ? as[i] + bs[i] : bs[i] - as[i];
            // m = in wraps; m = in + 1 holds the exact result.
            const int64_t want = m == in ? test::wrap(exact, m) : exact;
            if (got[i] != want) {
              std::ostringstream s;
              s << what << ' ' << to_string(addr) << ' ' << to_string(op) << " m=" << m
                << " a=" << as[i] << " b=" << bs[i] << ": got " << got[i]
                << ", want " << want;
              o.fail(s.str());
              return;
            }
            ++checked;
          }
        }
  };

  std::vector<int64_t> as, bs;
  for (int a = -8; a < 8; ++a)
    for (int b = -8; b < 8; ++b)
      as.push_back(a), bs.push_back(b);
  sweep(4, as, bs, "4-bit exhaustive");

  // Every pair of 8-bit operands: the 65,536 operand pairs of one byte each.
  as.clear(), bs.clear();
  for (int a = -128; a < 128; ++a)
    for (int b = -128; b < 128; ++b)
      as.push_back(a), bs.push_back(b);
  sweep(8, as, bs, "8-bit exhaustive");

  std::mt19937_64 rng(kSeed);
  for (int bits : {8, 16}) {
    as.assign(10000, 0), bs.assign(10000, 0);
    const int64_t span = int64_t{1} << bits, lo = -(span / 2);
    for (int i = 0; i < 10000; ++i) {
      as[i] = lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(span));
      bs[i] = lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(span));
    }
    sweep(bits, as, bs, bits == 8 ? "8-bit random" : "16-bit random");
  }
  const double s = since(t0);
  if (s >= kArithSeconds)
    o.fail("took " + std::to_string(s) + " s");
  if (o.ok)
    o.detail = std::to_string(checked) + " row results exact (all 4-bit and 8-bit "
               "pairs, 10^4 random at 8 and 16 bits, add/sub, both addressings); " +
               std::to_string(s) + " s";
  return o;
}

// Criterion 3 -------------------------------------------------------------

Outcome cycle_anchors() {
  Outcome o;
  for (int m = 1; m <= 32; ++m)
    for (OpKind op : {OpKind::Add, OpKind::Sub})
      for (Addressing addr : {Addressing::InPlace, Addressing::OutOfPlace}) {
        MacroInstr mi;
        mi.op = op;
        mi.addressing = addr;
        mi.width = m;
        mi.a = Operand::value(0, m);
        mi.b = Operand::value(1, m);
        if (addr == Addressing::OutOfPlace)
          mi.dests = {2};
        mi.zero_column = 3;
        mi.carry_column = 4;
        const int64_t c = compute_cycles(expand_macro(mi, standard_luts().set));
        const int64_t want = (addr == Addressing::InPlace ? 8 : 10) * m;
        if (c != want)
          o.fail(std::string(to_string(addr)) + ' ' + to_string(op) + " m=" +
                 std::to_string(m) + ": " + std::to_string(c) + " cycles");
      }
  if (o.ok)
    o.detail = "8m in-place and 10m out-of-place for m = 1..32";
  return o;
}

// Criterion 4 -------------------------------------------------------------

struct Eq1Result {
  int unroll = 0;
  int cse = 0;
  std::vector<uint8_t> program;
};

Eq1Result eq1_compile() {
  Eq1Result r;
  const LinearSystem sys = make_system(6, 6, test::kEq1);
  r.unroll = build_dfg(sys).op_count();
  r.cse = eliminate_common_subexpressions(build_dfg(sys)).op_count();
  const TernaryNetwork net = test::one_layer(
      LayerShape::make(1, 6, 1, 6, 1, 6, 1, 0), test::kEq1, 4, 0);
  r.program = serialize_program(emit_program(net, ApGeometry{}, OptLevel::UnrollCse));
  return r;
}

Outcome eq1() {
  Outcome o;
  const LinearSystem sys = make_system(6, 6, test::kEq1);
  const DataFlowGraph g = eliminate_common_subexpressions(build_dfg(sys));
  const Eq1Result r = eq1_compile();
  if (r.unroll != 14)
    o.fail("unroll count " + std::to_string(r.unroll));
  if (r.cse > 7)
    o.fail("CSE count " + std::to_string(r.cse));
  if (dfg_evaluate(g, std::vector<int64_t>{1, 2, 3, 4, 5, 6}) !=
      std::vector<int64_t>{-3, -5, 2, 0, -5, -6})
    o.fail("wrong result on x = 1..6");
  std::mt19937_64 rng(kSeed);
  for (int t = 0; t < 1000 && o.ok; ++t) {
    std::vector<int64_t> x(6);
    for (int64_t &v : x)
      v = static_cast<int64_t>(rng() % 65536) - 32768;
    if (dfg_evaluate(g, x) != test::mvm(test::kEq1, 6, 6, x))
      o.fail("mismatch against direct MVM on random vector " + std::to_string(t));
  }
  if (o.ok)
    o.detail = std::to_string(r.unroll) + " -> " + std::to_string(r.cse) +
               " ops; x = 1..6 gives [-3,-5,2,0,-5,-6]; 1000 random vectors exact";
  return o;
}

// Criterion 5 -------------------------------------------------------------

struct E2eResult {
  bool exact = true;
  std::string where;
  std::vector<std::vector<uint8_t>> programs;
  std::vector<std::string> stats_json, stats_csv, stats_text;
};

E2eResult e2e_run() {
  E2eResult r;
  const TernaryNetwork net = synthetic_network(parse_synthetic("3x16x0.85"), kSeed);
  const FeatureMap in = random_feature_map(net.input, kSeed);
  const std::vector<FeatureMap> want = reference_inference(net, in);
  const EnergyModel model;
  for (OptLevel opt : {OptLevel::Unroll, OptLevel::UnrollCse}) {
    const ApProgram p = emit_program(net, ApGeometry{}, opt);
    SimState st(p.geometry);
    const RunResult res = run(st, p, in);
    if (res.trace != want && r.exact) {
      r.exact = false;
      r.where = std::string("trace differs at ") + to_string(opt);
    }
    const Stats s = account(res.events, model, &p);
    r.programs.push_back(serialize_program(p));
    r.stats_json.push_back(report_json(s, model, &p));
    r.stats_csv.push_back(report_csv(s));
    r.stats_text.push_back(report_text(s, model));
  }
  return r;
}

Outcome end_to_end() {
  Outcome o;
  const auto t0 = Clock::now();
  const TernaryNetwork net = synthetic_network(parse_synthetic("3x16x0.85"), kSeed);
  if (net.input != FeatureMapShape{3, 16, 16, 4} || net.layers.size() != 3)
    o.fail("synthetic network has the wrong shape");
  const E2eResult r = e2e_run();
  if (!r.exact)
    o.fail(r.where);
  const double s = since(t0);
  if (s >= kEndToEndSeconds)
    o.fail("took " + std::to_string(s) + " s");
  if (o.ok)
    o.detail = "3-layer 3->16->16 net, 16x16 input, bit-exact at unroll and "
               "unroll+cse; " + std::to_string(s) + " s";
  return o;
}

// Criterion 6 -------------------------------------------------------------

std::vector<std::pair<int, int>> cse_counts() {
  std::vector<std::pair<int, int>> out;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const LinearSystem sys = make_system(64, 9, random_ternary(64, 9, 0.8, seed));
    const DataFlowGraph g = build_dfg(sys);
    out.emplace_back(g.op_count(), eliminate_common_subexpressions(g).op_count());
  }
  return out;
}

Outcome cse_property() {
  Outcome o;
  double pct = 0;
  const auto counts = cse_counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto [u, c] = counts[i];
    if (!(c < u))
      o.fail("seed " + std::to_string(i) + ": " + std::to_string(u) + " -> " +
             std::to_string(c));
    pct += 100.0 * (u - c) / u;
  }
  if (o.ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "20/20 matrices strictly reduced; mean reduction %.1f%%",
                  pct / counts.size());
    o.detail = buf;
  }
  return o;
}

// Criterion 7 -------------------------------------------------------------

bool close(double got, double want, double rel) {
  return std::abs(got - want) <= rel * std::abs(want);
}

Outcome energy_anchors() {
  Outcome o;
  const EnergyModel m;
  Event search;
  search.kind = EventKind::Search;
  search.bits = 3 * 256;
  search.cycles = 1;
  const Stats s = account(std::vector<Event>{search}, m);
  if (!close(s.total.energy.search_pj, 2.304, kEnergyRelTol))
    o.fail("search pass = " + std::to_string(s.total.energy.search_pj) + " pJ");

  Event move;
  move.kind = EventKind::Move;
  move.bits = 2048;
  move.hop = HopLevel::Global;
  const Stats mv = account(std::vector<Event>{move}, m);
  if (!close(mv.total.energy.move_pj, 2048.0, kEnergyRelTol))
    o.fail("move = " + std::to_string(mv.total.energy.move_pj) + " pJ");

  // Categories sum to the total on a real run.
  const TernaryNetwork net = synthetic_network(parse_synthetic("2x8x0.8,size=8"), kSeed);
  const ApProgram p = emit_program(net, ApGeometry{}, OptLevel::UnrollCse);
  SimState st(p.geometry);
  const Stats r = account(run(st, p, random_feature_map(net.input, kSeed)).events, m, &p);
  const Energy &e = r.total.energy;
  const double parts = e.search_pj + e.write_pj + e.shift_pj + e.move_pj;
  const double phases = r.total.dfg.total() + r.total.accumulation.total() + r.total.io.total();
  double layers = 0;
  for (const LayerStats &l : r.layers)
    layers += l.energy.total();
  if (!close(parts, e.total(), kEnergyRelTol) || !close(phases, e.total(), kEnergyRelTol) ||
      !close(layers, e.total(), kEnergyRelTol))
    o.fail("category, phase or layer energies do not sum to the total");
  if (o.ok)
    o.detail = "3x256-bit search = 2.304 pJ, 2048-bit move = 2048 pJ, categories "
               "sum to total (rel tol 1e-9)";
  return o;
}

// Criterion 8 -------------------------------------------------------------

Outcome endurance() {
  Outcome o;
  const EnergyModel m;
  // One column rewritten once per 100 ns epoch (1000 cycles of 0.1 ns).
  std::vector<Event> log;
  for (int i = 0; i < 1000; ++i) {
    Event w;
    w.kind = EventKind::Write;
    w.epoch = i;
    w.column = 0;
    w.bits = 256;
    w.cycles = 1000;
    log.push_back(w);
  }
  const auto years = endurance_estimate(account(log, m), m);
  if (!years)
    o.fail("no estimate");
  else if (!close(*years, kEnduranceYears, kEnduranceRelTol))
    o.fail("estimate " + std::to_string(*years) + " years");
  if (o.ok) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.2f years at 1e16 writes, 100 ns rewrite interval",
                  *years);
    o.detail = buf;
  }
  return o;
}

// Criterion 9 -------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  const Eq1Result a4 = eq1_compile(), b4 = eq1_compile();
  if (a4.program != b4.program || a4.cse != b4.cse)
    o.fail("worked-example program differs between runs");
  const E2eResult a5 = e2e_run(), b5 = e2e_run();
  if (a5.programs != b5.programs)
    o.fail("program files differ between runs");
  if (a5.stats_json != b5.stats_json || a5.stats_csv != b5.stats_csv)
    o.fail("stats differ between runs");
  if (a5.stats_text != b5.stats_text)
    o.fail("reports differ between runs");
  if (cse_counts() != cse_counts())
    o.fail("CSE counts differ between runs");

  // Worker threads do not change the outcome.
  const TernaryNetwork net = synthetic_network(parse_synthetic("3x16x0.85"), kSeed);
  const ApProgram p = emit_program(net, ApGeometry{}, OptLevel::UnrollCse);
  const FeatureMap in = random_feature_map(net.input, kSeed);
  SimState st(p.geometry);
  SimOptions par;
  par.threads = 4;
  const Stats s = account(run(st, p, in, par).events, EnergyModel{}, &p);
  if (report_json(s, EnergyModel{}, &p) != a5.stats_json[1])
    o.fail("stats differ with 4 worker threads");
  if (o.ok)
    o.detail = "byte-identical programs, stats and reports across reruns and thread counts";
  return o;
}

} // namespace

int main() {
  report(1, "LUT correctness", lut_tables);
  report(2, "bit-serial arithmetic", bit_serial);
  report(3, "cycle anchors", cycle_anchors);
  report(4, "worked-example regression", eq1);
  report(5, "end-to-end oracle equivalence", end_to_end);
  report(6, "CSE reduction property", cse_property);
  report(7, "energy accounting anchors", energy_anchors);
  report(8, "endurance anchor", endurance);
  report(9, "determinism", determinism);
  std::printf("%d/9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
