// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/driver.h"

#include "rtap/errors.h"

#include <cmath>
#include <random>
#include <sstream>

namespace rtap {

namespace {

/// Unbiased draw from [0, n) using only the engine's specified output.
uint64_t draw(std::mt19937_64 &rng, uint64_t n) {
  const uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
  uint64_t v;
  do
    v = rng();
  while (v >= limit);
  return v % n;
}

int parse_int(const std::string &s, const char *what) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
    return v;
  } catch (const std::exception &) {
    throw FormatError(std::string("bad ") + what + " '" + s + "' in synthetic spec");
  }
}

} // namespace

SyntheticSpec parse_synthetic(std::string_view text) {
  SyntheticSpec spec;
  std::string head(text.substr(0, text.find(',')));
  std::string rest =
      text.find(',') == std::string_view::npos ? "" : std::string(text.substr(text.find(',') + 1));

  const auto x1 = head.find('x');
  const auto x2 = x1 == std::string::npos ? x1 : head.find('x', x1 + 1);
  if (x1 == std::string::npos || x2 == std::string::npos)
    throw FormatError("synthetic spec must look like LAYERSxCHANNELSxSPARSITY");
  spec.layers = parse_int(head.substr(0, x1), "layer count");
  spec.channels = parse_int(head.substr(x1 + 1, x2 - x1 - 1), "channel count");
  try {
    std::size_t used = 0;
    const std::string s = head.substr(x2 + 1);
    spec.sparsity = std::stod(s, &used);
    if (used != s.size())
      throw std::invalid_argument(s);
  } catch (const std::exception &) {
    throw FormatError("bad sparsity in synthetic spec");
  }

  std::istringstream kv(rest);
  std::string item;
  while (std::getline(kv, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw FormatError("synthetic option '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq);
    const int v = parse_int(item.substr(eq + 1), key.c_str());
    if (key == "in_channels")
      spec.in_channels = v;
    else if (key == "size")
      spec.size = v;
    else if (key == "bits")
      spec.bits = v;
    else if (key == "kernel")
      spec.kernel = v;
    else if (key == "pad")
      spec.pad = v;
    else
      throw FormatError("unknown synthetic option '" + key + "'");
  }
  if (spec.layers < 0 || spec.channels < 1 || spec.in_channels < 1 ||
      spec.size < 1 || spec.bits < 1 || spec.bits > 16 || spec.kernel < 1 ||
      spec.pad < 0 || !(spec.sparsity >= 0 && spec.sparsity <= 1))
    throw FormatError("synthetic spec out of range");
  return spec;
}

std::vector<int8_t> random_ternary(int rows, int cols, double sparsity,
                                   uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  const auto zeros = static_cast<std::size_t>(std::llround(sparsity * static_cast<double>(n)));
  std::vector<int8_t> v(n, 0);
  for (std::size_t i = zeros; i < n; ++i)
    v[i] = (rng() & 1) ? 1 : -1;
  // Fisher-Yates with the unbiased draw above (std::shuffle's output is
  // implementation-defined).
  for (std::size_t i = n; i > 1; --i)
    std::swap(v[i - 1], v[draw(rng, i)]);
  return v;
}

TernaryNetwork synthetic_network(const SyntheticSpec &spec, uint64_t seed) {
  TernaryNetwork net;
  std::ostringstream name;
  name << "synthetic-" << spec.layers << 'x' << spec.channels << 'x'
       << spec.sparsity << "-seed" << seed;
  net.name = name.str();
  net.input = {spec.in_channels, spec.size, spec.size, spec.bits};

  const double max = static_cast<double>((1u << spec.bits) - 1);
  int c_in = spec.in_channels, h = spec.size, w = spec.size;
  for (int i = 0; i < spec.layers; ++i) {
    Layer l;
    l.kind = LayerKind::Conv;
    l.shape = LayerShape::make(c_in, spec.channels, spec.kernel, spec.kernel, h,
                               w, 1, spec.pad);
    l.weights = TernaryWeights(spec.channels, c_in, spec.kernel, spec.kernel);
    l.weights.values =
        random_ternary(spec.channels, c_in * spec.kernel * spec.kernel,
                       spec.sparsity, seed * 1000003 + static_cast<uint64_t>(i));
    // Typical |acc| is rms(x) * sqrt(nonzeros); map it to half the range.
    const double nnz = std::max(
        1.0, (1.0 - spec.sparsity) * c_in * spec.kernel * spec.kernel);
    const double typical = max / std::sqrt(3.0) * std::sqrt(nnz);
    l.quant.activation_bits = spec.bits;
    l.quant.requant_multiplier = 1;
    l.quant.requant_shift =
        std::max(0, static_cast<int>(std::lround(std::log2(typical / (max / 2)))));
    net.layers.push_back(std::move(l));
    c_in = spec.channels;
    h = net.layers.back().shape.h_out();
    w = net.layers.back().shape.w_out();
  }
  net.validate();
  return net;
}

FeatureMap random_feature_map(const FeatureMapShape &shape, uint64_t seed) {
  std::mt19937_64 rng(seed);
  FeatureMap fm(shape);
  for (uint16_t &v : fm.values)
    v = static_cast<uint16_t>(draw(rng, uint64_t{1} << shape.bits));
  return fm;
}

} // namespace rtap
