// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Convolution lowering. A layer becomes one ternary linear system per input
// channel, each applied to the im2col patch of that channel: the loop nest
// after interchange, full unrolling of (ofm, kh, kw), constant folding of the
// ternary weights and fission over input channels.

#ifndef RTAP_LOWERING_H
#define RTAP_LOWERING_H

#include "rtap/model.h"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace rtap {

/// Input pixel read by one patch slot, or padding.
struct PatchCoord {
  int y = -1;
  int x = -1;
  bool pad() const { return y < 0; }
  bool operator==(const PatchCoord &) const = default;
};

/// For every output position p and patch slot k, the input pixel convolved
/// at that slot (row-major positions, row-major kernel slots).
struct PatchIndexMap {
  int positions = 0;
  int slots = 0;
  std::vector<PatchCoord> coords;

  const PatchCoord &at(int p, int k) const {
    return coords[static_cast<std::size_t>(p) * slots + k];
  }
};

PatchIndexMap im2col_indices(const LayerShape &layer);

/// c_out x (f_h * f_w) ternary matrix for one input channel.
struct LinearSystem {
  int channel = 0;
  int rows = 0;
  int cols = 0;
  std::vector<int8_t> coeffs;
  std::shared_ptr<const PatchIndexMap> patch;

  int8_t at(int r, int k) const {
    return coeffs[static_cast<std::size_t>(r) * cols + k];
  }
  int8_t &at(int r, int k) { return coeffs[static_cast<std::size_t>(r) * cols + k]; }

  int row_nonzeros(int r) const;

  /// Restriction to the contiguous output-row range [first, first + count).
  LinearSystem row_slice(int first, int count) const;

  /// Direct matrix-vector product over one patch.
  std::vector<int64_t> apply(std::span<const int64_t> patch_values) const;
};

/// Builds a system straight from a dense matrix (tests, hand-written slices).
LinearSystem make_system(int rows, int cols, std::span<const int8_t> coeffs,
                         int channel = 0);

std::vector<LinearSystem> lower_layer(const TernaryWeights &w,
                                      const LayerShape &layer);

/// Binary add/sub count of the fully unrolled, folded kernels without any
/// sharing: sum over rows of max(nonzeros - 1, 0). One output position.
int64_t unrolled_op_count(std::span<const LinearSystem> systems);
int64_t unrolled_op_count(const LinearSystem &system);

/// Patch values of channel `c` at output position p (zero for padding).
std::vector<int64_t> gather_patch(const PatchIndexMap &map,
                                  const FeatureMap &fm, int c, int p);

/// Text dump, one row per line: "r: +x0 -x1 ...".
std::string dump_system(const LinearSystem &sys);

} // namespace rtap

#endif // RTAP_LOWERING_H
