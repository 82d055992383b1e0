// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/errors.h"
#include "rtap/isa.h"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace rtap {

const char *to_string(OpKind k) { return k == OpKind::Add ? "add" : "sub"; }

const char *to_string(Addressing a) {
  return a == Addressing::InPlace ? "in_place" : "out_of_place";
}

int LutTable::passes() const {
  return static_cast<int>(std::count_if(entries.begin(), entries.end(),
                                        [](const LutEntry &e) { return !e.nc(); }));
}

std::vector<LutEntry> LutTable::pass_order() const {
  std::vector<LutEntry> order;
  for (const LutEntry &e : entries)
    if (!e.nc())
      order.push_back(e);
  std::stable_sort(order.begin(), order.end(),
                   [](const LutEntry &x, const LutEntry &y) { return x.pass < y.pass; });
  return order;
}

const LutEntry &LutTable::entry(uint8_t key) const {
  for (const LutEntry &e : entries)
    if (e.key == key)
      return e;
  throw std::invalid_argument("LUT has no entry for key " + std::to_string(key));
}

namespace {

constexpr int C = 4, B = 2, A = 1;

LutTable make_table(OpKind op, Addressing addr,
                    std::initializer_list<std::pair<uint8_t, int>> rows) {
  LutTable t;
  t.op = op;
  t.addressing = addr;
  uint8_t key = 0;
  for (auto [write, pass] : rows) {
    t.entries[key] = {key, write, pass};
    ++key;
  }
  return t;
}

/// Standard 1-bit full adder / full subtractor: (carry', result).
uint8_t standard_write(OpKind op, uint8_t key) {
  const int c = (key & C) ? 1 : 0, b = (key & B) ? 1 : 0, a = (key & A) ? 1 : 0;
  if (op == OpKind::Add) {
    const int s = a + b + c;
    return static_cast<uint8_t>(((s >> 1) << 1) | (s & 1));
  }
  const int d = b - a - c;
  return static_cast<uint8_t>(((d < 0 ? 1 : 0) << 1) | (d & 1));
}

/// State a row keeps when no pass touches it: in-place keeps (carry, B),
/// out-of-place keeps carry and the cleared R.
uint8_t unchanged_write(Addressing addr, uint8_t key) {
  const uint8_t c = (key & C) ? 1 : 0;
  if (addr == Addressing::InPlace)
    return static_cast<uint8_t>((c << 1) | ((key & B) ? 1 : 0));
  return static_cast<uint8_t>(c << 1);
}

std::string bits3(uint8_t key) {
  std::string s;
  s += (key & C) ? '1' : '0';
  s += (key & B) ? '1' : '0';
  s += (key & A) ? '1' : '0';
  return s;
}

std::string bits2(uint8_t w) {
  std::string s;
  s += (w & 2) ? '1' : '0';
  s += (w & 1) ? '1' : '0';
  return s;
}

int64_t wrap(int64_t v, int m) {
  const int64_t mod = int64_t{1} << m;
  v &= mod - 1;
  if (v >= mod / 2)
    v -= mod;
  return v;
}

/// Bit-serial composition of a per-key write function over m-bit operands.
int64_t compose(const std::array<uint8_t, 8> &fn, uint8_t carry_init,
                int64_t a, int64_t b, int m) {
  int c = carry_init;
  int64_t r = 0;
  for (int i = 0; i < m; ++i) {
    const uint8_t key = static_cast<uint8_t>((c << 2) | (((b >> i) & 1) << 1) |
                                             ((a >> i) & 1));
    const uint8_t w = fn[key];
    c = (w >> 1) & 1;
    r |= int64_t{w & 1} << i;
  }
  return wrap(r, m);
}

std::optional<LutCounterexample> check_arithmetic(OpKind op, bool negated,
                                                  const std::array<uint8_t, 8> &fn,
                                                  uint8_t carry_init) {
  constexpr int m = 4;
  for (int64_t a = -8; a < 8; ++a)
    for (int64_t b = -8; b < 8; ++b) {
      const int64_t want = lut_reference(op, negated, a, b, m);
      const int64_t got = compose(fn, carry_init, a, b, m);
      if (want != got) {
        LutCounterexample cx;
        cx.a = a;
        cx.b = b;
        std::ostringstream os;
        os << "4-bit operands A=" << a << " B=" << b << ": expected " << want
           << ", table computes " << got;
        cx.message = os.str();
        return cx;
      }
    }
  return std::nullopt;
}

/// Runs passes in `order` over every initial row state; returns the first
/// state whose final (carry, dest) differs from `declared`.
std::optional<LutCounterexample>
check_sequential(Addressing addr, const std::array<uint8_t, 8> &declared,
                 std::span<const LutEntry> order) {
  for (uint8_t s = 0; s < 8; ++s) {
    uint8_t key = s;
    uint8_t dest = unchanged_write(addr, s);
    for (const LutEntry &e : order) {
      if (e.key != key)
        continue;
      dest = e.write;
      // Carry and (in-place) B are part of the key; a rewritten row may
      // match a later pass.
      key = static_cast<uint8_t>((key & A) | ((e.write & 2) ? C : 0));
      if (addr == Addressing::InPlace)
        key = static_cast<uint8_t>(key | ((e.write & 1) ? B : 0));
      else
        key = static_cast<uint8_t>(key | (s & B));
    }
    if (dest != declared[s]) {
      LutCounterexample cx;
      cx.state = s;
      cx.message = "row starting in state " + bits3(s) + " ends with " +
                   bits2(dest) + " instead of " + bits2(declared[s]);
      return cx;
    }
  }
  return std::nullopt;
}

std::array<uint8_t, 8> declared_function(const LutTable &t) {
  std::array<uint8_t, 8> fn{};
  for (const LutEntry &e : t.entries)
    fn[e.key & 7] = e.write;
  return fn;
}

} // namespace

std::vector<LutTable> builtin_luts() {
  return {
      make_table(OpKind::Add, Addressing::InPlace,
                 {{0b00, 0}, {0b01, 2}, {0b01, 0}, {0b10, 1},
                  {0b01, 3}, {0b10, 0}, {0b10, 4}, {0b11, 0}}),
      make_table(OpKind::Add, Addressing::OutOfPlace,
                 {{0b00, 0}, {0b01, 1}, {0b01, 2}, {0b10, 0},
                  {0b01, 3}, {0b10, 0}, {0b10, 4}, {0b11, 5}}),
      make_table(OpKind::Sub, Addressing::InPlace,
                 {{0b00, 0}, {0b11, 1}, {0b01, 0}, {0b00, 2},
                  {0b11, 4}, {0b10, 0}, {0b00, 3}, {0b11, 0}}),
      make_table(OpKind::Sub, Addressing::OutOfPlace,
                 {{0b00, 0}, {0b11, 1}, {0b01, 2}, {0b00, 0},
                  {0b11, 3}, {0b10, 0}, {0b00, 4}, {0b11, 5}}),
  };
}

int64_t lut_reference(OpKind op, bool negated, int64_t a, int64_t b, int m) {
  int64_t v = op == OpKind::Add ? a + b : b - a;
  if (negated)
    v = -v;
  return wrap(v, m);
}

std::optional<LutCounterexample> validate_lut(const LutTable &t) {
  // Every key exactly once.
  std::array<int, 8> seen{};
  for (const LutEntry &e : t.entries) {
    if (e.key > 7 || e.write > 3 || e.pass < 0) {
      LutCounterexample cx;
      cx.message = "entry out of range";
      return cx;
    }
    ++seen[e.key];
  }
  for (int k = 0; k < 8; ++k)
    if (seen[k] != 1) {
      LutCounterexample cx;
      cx.state = k;
      cx.message = "key " + bits3(static_cast<uint8_t>(k)) + " appears " +
                   std::to_string(seen[k]) + " times";
      return cx;
    }
  // Pass ordinals 1..P without gaps.
  std::vector<LutEntry> order = t.pass_order();
  for (std::size_t i = 0; i < order.size(); ++i)
    if (order[i].pass != static_cast<int>(i) + 1) {
      LutCounterexample cx;
      cx.state = order[i].key;
      cx.message = "pass ordinals are not 1.." + std::to_string(order.size());
      return cx;
    }

  const std::array<uint8_t, 8> fn = declared_function(t);
  if (!t.negated) {
    for (uint8_t k = 0; k < 8; ++k)
      if (fn[k] != standard_write(t.op, k)) {
        LutCounterexample cx;
        cx.state = k;
        cx.message = "key " + bits3(k) + " writes " + bits2(fn[k]) +
                     ", the 1-bit " + to_string(t.op) + " requires " +
                     bits2(standard_write(t.op, k));
        return cx;
      }
  }
  if (auto cx = check_sequential(t.addressing, fn, order))
    return cx;
  return check_arithmetic(t.op, t.negated, fn, t.carry_init);
}

LutTable derive_lut(OpKind op, Addressing addressing, bool negated) {
  struct Candidate {
    std::array<uint8_t, 8> fn;
    uint8_t carry_init;
    std::vector<uint8_t> active;
  };
  std::vector<Candidate> candidates;

  auto consider = [&](const std::array<uint8_t, 8> &fn, uint8_t init) {
    if (check_arithmetic(op, negated, fn, init))
      return;
    Candidate c{fn, init, {}};
    for (uint8_t k = 0; k < 8; ++k)
      if (fn[k] != unchanged_write(addressing, k))
        c.active.push_back(k);
    candidates.push_back(std::move(c));
  };

  if (!negated) {
    std::array<uint8_t, 8> fn{};
    for (uint8_t k = 0; k < 8; ++k)
      fn[k] = standard_write(op, k);
    consider(fn, 0);
  } else {
    for (uint8_t init = 0; init < 2; ++init)
      for (uint32_t code = 0; code < (1u << 16); ++code) {
        std::array<uint8_t, 8> fn{};
        for (int k = 0; k < 8; ++k)
          fn[k] = static_cast<uint8_t>((code >> (2 * k)) & 3);
        consider(fn, init);
      }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate &x, const Candidate &y) {
                     return x.active.size() < y.active.size();
                   });

  for (const Candidate &c : candidates) {
    std::vector<uint8_t> perm = c.active;
    do {
      std::vector<LutEntry> order;
      for (std::size_t i = 0; i < perm.size(); ++i)
        order.push_back({perm[i], c.fn[perm[i]], static_cast<int>(i) + 1});
      if (!check_sequential(addressing, c.fn, order)) {
        LutTable t;
        t.op = op;
        t.addressing = addressing;
        t.negated = negated;
        t.carry_init = c.carry_init;
        for (uint8_t k = 0; k < 8; ++k)
          t.entries[k] = {k, c.fn[k], 0};
        for (const LutEntry &e : order)
          t.entries[e.key].pass = e.pass;
        return t;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  std::ostringstream os;
  os << "no " << (negated ? "negated " : "") << to_string(op) << ' '
     << to_string(addressing)
     << " table with a 1-bit carry column computes the required result";
  if (candidates.empty())
    os << " (no per-bit write pattern is arithmetically correct)";
  throw LutDerivationError(os.str());
}

std::string dump_lut(const LutTable &t) {
  std::ostringstream os;
  os << "lut " << to_string(t.op) << ' ' << to_string(t.addressing)
     << " negated=" << (t.negated ? 1 : 0)
     << " carry_init=" << int{t.carry_init} << "\n";
  std::array<LutEntry, 8> sorted = t.entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const LutEntry &x, const LutEntry &y) { return x.key < y.key; });
  for (const LutEntry &e : sorted) {
    os << bits3(e.key) << " -> " << bits2(e.write) << ' ';
    if (e.nc())
      os << "NC";
    else
      os << e.pass;
    os << "\n";
  }
  return os.str();
}

namespace {

uint8_t parse_bits(const std::string &s, std::size_t n) {
  if (s.size() != n)
    throw FormatError("expected " + std::to_string(n) + " bits, got '" + s + "'");
  uint8_t v = 0;
  for (char ch : s) {
    if (ch != '0' && ch != '1')
      throw FormatError("bad bit string '" + s + "'");
    v = static_cast<uint8_t>((v << 1) | (ch == '1'));
  }
  return v;
}

} // namespace

LutTable parse_lut(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string word, op, addr, neg, init;
  if (!(in >> word >> op >> addr >> neg >> init) || word != "lut")
    throw FormatError("LUT text must start with 'lut <op> <addressing> ...'");
  LutTable t;
  if (op == "add")
    t.op = OpKind::Add;
  else if (op == "sub")
    t.op = OpKind::Sub;
  else
    throw FormatError("unknown LUT op '" + op + "'");
  if (addr == "in_place")
    t.addressing = Addressing::InPlace;
  else if (addr == "out_of_place")
    t.addressing = Addressing::OutOfPlace;
  else
    throw FormatError("unknown addressing '" + addr + "'");
  if (neg != "negated=0" && neg != "negated=1")
    throw FormatError("expected negated=0|1");
  t.negated = neg == "negated=1";
  if (init != "carry_init=0" && init != "carry_init=1")
    throw FormatError("expected carry_init=0|1");
  t.carry_init = init == "carry_init=1" ? 1 : 0;
  for (int i = 0; i < 8; ++i) {
    std::string key, arrow, write, pass;
    if (!(in >> key >> arrow >> write >> pass) || arrow != "->")
      throw FormatError("LUT text needs eight '<key> -> <write> <pass>' rows");
    LutEntry e;
    e.key = parse_bits(key, 3);
    e.write = parse_bits(write, 2);
    if (pass == "NC") {
      e.pass = 0;
    } else {
      try {
        e.pass = std::stoi(pass);
      } catch (const std::exception &) {
        throw FormatError("bad pass ordinal '" + pass + "'");
      }
      if (e.pass < 1 || e.pass > 8)
        throw FormatError("pass ordinal out of range");
    }
    t.entries[i] = e;
  }
  return t;
}

const LutTable *LutSet::find(OpKind op, Addressing a, bool negated) const {
  auto it = tables.find({op, a, negated});
  return it == tables.end() ? nullptr : &it->second;
}

void LutSet::put(const LutTable &t) {
  tables[{t.op, t.addressing, t.negated}] = t;
}

namespace {

std::string describe_divergence(const LutTable &printed, const LutTable &derived) {
  std::ostringstream os;
  bool first = true;
  for (uint8_t k = 0; k < 8; ++k) {
    const LutEntry &p = printed.entry(k);
    const LutEntry &d = derived.entry(k);
    if (p.write == d.write && p.pass == d.pass)
      continue;
    os << (first ? "" : ", ") << bits3(k) << " (printed " << bits2(p.write)
       << ' ' << (p.nc() ? std::string("NC") : std::to_string(p.pass))
       << ", derived " << bits2(d.write) << ' '
       << (d.nc() ? std::string("NC") : std::to_string(d.pass)) << ')';
    first = false;
  }
  return os.str();
}

StandardLuts build_standard_luts() {
  StandardLuts out;
  for (const LutTable &printed : builtin_luts()) {
    if (auto cx = validate_lut(printed)) {
      const LutTable derived =
          derive_lut(printed.op, printed.addressing, printed.negated);
      out.set.put(derived);
      out.diagnostics.push_back(
          std::string(to_string(printed.addressing)) + ' ' +
          to_string(printed.op) + ": printed table rejected (" + cx->message +
          "); using derived table; divergent entries: " +
          describe_divergence(printed, derived));
    } else {
      out.set.put(printed);
    }
  }
  for (OpKind op : {OpKind::Add, OpKind::Sub})
    for (Addressing a : {Addressing::InPlace, Addressing::OutOfPlace}) {
      try {
        out.set.put(derive_lut(op, a, true));
      } catch (const LutDerivationError &e) {
        out.diagnostics.push_back(std::string("negated ") + to_string(a) + ' ' +
                                  to_string(op) + ": " + e.what());
      }
    }
  return out;
}

} // namespace

const StandardLuts &standard_luts() {
  static const StandardLuts luts = build_standard_luts();
  return luts;
}

} // namespace rtap
