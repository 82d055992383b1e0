// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Independent oracles shared by the unit and acceptance tests. Nothing here
// calls into the library's arithmetic; only plain loops over the inputs.

#ifndef RTAP_TESTS_SUPPORT_H
#define RTAP_TESTS_SUPPORT_H

#include "rtap/model.h"

#include <cstdint>
#include <random>
#include <vector>

namespace rtap::test {

// The 6x6 worked example, rows are outputs.
inline const std::vector<int8_t> kEq1 = {
    1, -1, 0,  1,  0, -1, //
    0, 0,  -1, 1,  0, -1, //
    0, 0,  0,  -1, 0, 1,  //
    0, -1, 0,  -1, 0, 1,  //
    1, -1, 0,  -1, 0, 0,  //
    1, -1, -1, 1,  0, -1, //
};

inline std::vector<int64_t> mvm(const std::vector<int8_t> &m, int rows,
                                int cols, const std::vector<int64_t> &x) {
  std::vector<int64_t> y(static_cast<std::size_t>(rows), 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      y[r] += m[static_cast<std::size_t>(r) * cols + c] * x[c];
  return y;
}

/// Direct seven-loop convolution with explicit zero padding.
inline AccTensor naive_conv(const LayerShape &s, const TernaryWeights &w,
                            const FeatureMap &in) {
  const int ho = (s.h_in + 2 * s.pad - s.f_h) / s.stride + 1;
  const int wo = (s.w_in + 2 * s.pad - s.f_w) / s.stride + 1;
  AccTensor out(s.c_out, ho, wo);
  for (int o = 0; o < s.c_out; ++o)
    for (int y = 0; y < ho; ++y)
      for (int x = 0; x < wo; ++x) {
        int64_t acc = 0;
        for (int i = 0; i < s.c_in; ++i)
          for (int ky = 0; ky < s.f_h; ++ky)
            for (int kx = 0; kx < s.f_w; ++kx) {
              const int iy = y * s.stride + ky - s.pad;
              const int ix = x * s.stride + kx - s.pad;
              if (iy < 0 || ix < 0 || iy >= s.h_in || ix >= s.w_in)
                continue;
              acc += w.values[((static_cast<std::size_t>(o) * s.c_in + i) *
                                   s.f_h + ky) * s.f_w + kx] *
                     static_cast<int64_t>(
                         in.values[(static_cast<std::size_t>(i) * s.h_in + iy) *
                                       s.w_in + ix]);
            }
        out.at(o, y, x) = acc;
      }
  return out;
}

inline std::vector<int8_t> ternary(std::mt19937_64 &rng, std::size_t n,
                                   double zero_prob) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<int8_t> v(n);
  for (int8_t &x : v)
    x = u(rng) < zero_prob ? 0 : (rng() & 1 ? 1 : -1);
  return v;
}

inline FeatureMap random_map(std::mt19937_64 &rng, FeatureMapShape shape) {
  FeatureMap fm(shape);
  for (uint16_t &v : fm.values)
    v = static_cast<uint16_t>(rng() % (uint64_t{1} << shape.bits));
  return fm;
}

/// Two's-complement wrap of v to m bits.
inline int64_t wrap(int64_t v, int m) {
  const uint64_t mask = m >= 64 ? ~uint64_t{0} : (uint64_t{1} << m) - 1;
  uint64_t u = static_cast<uint64_t>(v) & mask;
  if (m < 64 && (u >> (m - 1)) & 1)
    u |= ~mask;
  return static_cast<int64_t>(u);
}

/// One conv layer network over an input of `in` with the given weights.
inline TernaryNetwork one_layer(const LayerShape &s, std::vector<int8_t> w,
                                int bits, int shift) {
  TernaryNetwork net;
  net.name = "one-layer";
  net.input = {s.c_in, s.h_in, s.w_in, bits};
  Layer l;
  l.shape = s;
  l.weights = TernaryWeights(s.c_out, s.c_in, s.f_h, s.f_w);
  l.weights.values = std::move(w);
  l.quant.activation_bits = bits;
  l.quant.requant_shift = shift;
  net.layers.push_back(std::move(l));
  return net;
}

} // namespace rtap::test

#endif // RTAP_TESTS_SUPPORT_H
