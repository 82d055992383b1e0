// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/lowering.h"

#include "rtap/errors.h"

#include <sstream>

namespace rtap {

PatchIndexMap im2col_indices(const LayerShape &layer) {
  layer.validate();
  PatchIndexMap map;
  map.positions = layer.positions();
  map.slots = layer.patch_size();
  map.coords.resize(static_cast<std::size_t>(map.positions) * map.slots);
  for (int oy = 0; oy < layer.h_out(); ++oy)
    for (int ox = 0; ox < layer.w_out(); ++ox) {
      const int p = oy * layer.w_out() + ox;
      for (int ky = 0; ky < layer.f_h; ++ky)
        for (int kx = 0; kx < layer.f_w; ++kx) {
          const int y = oy * layer.stride + ky - layer.pad;
          const int x = ox * layer.stride + kx - layer.pad;
          PatchCoord &c =
              map.coords[static_cast<std::size_t>(p) * map.slots +
                         ky * layer.f_w + kx];
          if (y >= 0 && y < layer.h_in && x >= 0 && x < layer.w_in)
            c = {y, x};
          else
            c = {};
        }
    }
  return map;
}

int LinearSystem::row_nonzeros(int r) const {
  int n = 0;
  for (int k = 0; k < cols; ++k)
    n += at(r, k) != 0;
  return n;
}

LinearSystem LinearSystem::row_slice(int first, int count) const {
  LinearSystem s;
  s.channel = channel;
  s.rows = count;
  s.cols = cols;
  s.patch = patch;
  s.coeffs.assign(coeffs.begin() + static_cast<std::ptrdiff_t>(first) * cols,
                  coeffs.begin() +
                      static_cast<std::ptrdiff_t>(first + count) * cols);
  return s;
}

std::vector<int64_t> LinearSystem::apply(std::span<const int64_t> x) const {
  if (static_cast<int>(x.size()) != cols)
    throw ShapeError("patch length does not match the system width");
  std::vector<int64_t> y(static_cast<std::size_t>(rows), 0);
  for (int r = 0; r < rows; ++r)
    for (int k = 0; k < cols; ++k)
      y[r] += at(r, k) * x[k];
  return y;
}

LinearSystem make_system(int rows, int cols, std::span<const int8_t> coeffs,
                         int channel) {
  if (coeffs.size() != static_cast<std::size_t>(rows) * cols)
    throw ShapeError("coefficient count does not match the system shape");
  LinearSystem s;
  s.channel = channel;
  s.rows = rows;
  s.cols = cols;
  s.coeffs.assign(coeffs.begin(), coeffs.end());
  for (int8_t v : s.coeffs)
    if (v < -1 || v > 1)
      throw FormatError("non-ternary coefficient");
  return s;
}

std::vector<LinearSystem> lower_layer(const TernaryWeights &w,
                                      const LayerShape &layer) {
  w.validate();
  if (w.c_out != layer.c_out || w.c_in != layer.c_in || w.f_h != layer.f_h ||
      w.f_w != layer.f_w)
    throw ShapeError("weights do not match the layer");
  auto patch = std::make_shared<const PatchIndexMap>(im2col_indices(layer));

  std::vector<LinearSystem> systems;
  systems.reserve(static_cast<std::size_t>(layer.c_in));
  for (int c = 0; c < layer.c_in; ++c) {
    LinearSystem s;
    s.channel = c;
    s.rows = layer.c_out;
    s.cols = layer.patch_size();
    s.patch = patch;
    s.coeffs.resize(static_cast<std::size_t>(s.rows) * s.cols);
    for (int o = 0; o < layer.c_out; ++o)
      for (int ky = 0; ky < layer.f_h; ++ky)
        for (int kx = 0; kx < layer.f_w; ++kx)
          s.at(o, ky * layer.f_w + kx) = w.at(o, c, ky, kx);
    systems.push_back(std::move(s));
  }
  return systems;
}

int64_t unrolled_op_count(const LinearSystem &system) {
  int64_t ops = 0;
  for (int r = 0; r < system.rows; ++r) {
    const int nz = system.row_nonzeros(r);
    if (nz > 1)
      ops += nz - 1;
  }
  return ops;
}

int64_t unrolled_op_count(std::span<const LinearSystem> systems) {
  int64_t ops = 0;
  for (const LinearSystem &s : systems)
    ops += unrolled_op_count(s);
  return ops;
}

std::vector<int64_t> gather_patch(const PatchIndexMap &map,
                                  const FeatureMap &fm, int c, int p) {
  std::vector<int64_t> v(static_cast<std::size_t>(map.slots), 0);
  for (int k = 0; k < map.slots; ++k) {
    const PatchCoord &pc = map.at(p, k);
    if (!pc.pad())
      v[k] = fm.at(c, pc.y, pc.x);
  }
  return v;
}

std::string dump_system(const LinearSystem &sys) {
  std::ostringstream os;
  os << "system channel=" << sys.channel << " rows=" << sys.rows
     << " cols=" << sys.cols << "\n";
  for (int r = 0; r < sys.rows; ++r) {
    os << r << ":";
    for (int k = 0; k < sys.cols; ++k)
      if (sys.at(r, k) != 0)
        os << ' ' << (sys.at(r, k) > 0 ? '+' : '-') << 'x' << k;
    os << "\n";
  }
  return os.str();
}

} // namespace rtap
