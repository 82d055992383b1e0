// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/sim.h"

#include "rtap/errors.h"

#include <algorithm>
#include <bit>
#include <cstdlib>

namespace rtap {

CamArray::CamArray(int rows, int cols, int domains)
    : rows_(rows), cols_(cols), domains_(domains), words_((rows + 63) / 64),
      data_(static_cast<std::size_t>(cols) * domains * words_, 0),
      aligned_(static_cast<std::size_t>(cols), 0),
      tag_(static_cast<std::size_t>(words_), 0) {
  if (rows < 1 || cols < 1 || domains < 1)
    throw SimulationError("CAM array dimensions must be positive");
}

int CamArray::check_col(int col) const {
  if (col < 0 || col >= cols_)
    throw SimulationError("column " + std::to_string(col) + " out of range");
  return col;
}

uint64_t *CamArray::plane(int col, int domain) {
  return data_.data() +
         (static_cast<std::size_t>(col) * domains_ + domain) * words_;
}

const uint64_t *CamArray::plane(int col, int domain) const {
  return data_.data() +
         (static_cast<std::size_t>(col) * domains_ + domain) * words_;
}

uint64_t CamArray::tail_mask() const {
  const int r = rows_ % 64;
  return r == 0 ? ~uint64_t{0} : (uint64_t{1} << r) - 1;
}

bool CamArray::bit(int row, int col, int domain) const {
  check_col(col);
  if (row < 0 || row >= rows_ || domain < 0 || domain >= domains_)
    throw SimulationError("bit address out of range");
  return (plane(col, domain)[row / 64] >> (row % 64)) & 1;
}

void CamArray::set_bit(int row, int col, int domain, bool v) {
  check_col(col);
  if (row < 0 || row >= rows_ || domain < 0 || domain >= domains_)
    throw SimulationError("bit address out of range");
  uint64_t &w = plane(col, domain)[row / 64];
  const uint64_t m = uint64_t{1} << (row % 64);
  w = v ? (w | m) : (w & ~m);
}

const std::vector<uint64_t> &CamArray::masked_search(std::span<const int> cols,
                                                     std::span<const uint8_t> key) {
  if (cols.size() != key.size())
    throw SimulationError("search key and mask differ in length");
  std::fill(tag_.begin(), tag_.end(), ~uint64_t{0});
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const int c = check_col(cols[i]);
    const uint64_t *p = plane(c, aligned_[c]);
    if (key[i])
      for (int w = 0; w < words_; ++w)
        tag_[w] &= p[w];
    else
      for (int w = 0; w < words_; ++w)
        tag_[w] &= ~p[w];
  }
  tag_.back() &= tail_mask();
  return tag_;
}

int64_t CamArray::tag_count() const {
  int64_t n = 0;
  for (uint64_t w : tag_)
    n += std::popcount(w);
  return n;
}

int64_t CamArray::tagged_write(std::span<const int> cols,
                               std::span<const uint8_t> key, bool use_tag) {
  if (cols.size() != key.size())
    throw SimulationError("write key and mask differ in length");
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const int c = check_col(cols[i]);
    uint64_t *p = plane(c, aligned_[c]);
    for (int w = 0; w < words_; ++w) {
      const uint64_t sel = use_tag ? tag_[w] : ~uint64_t{0};
      p[w] = key[i] ? (p[w] | sel) : (p[w] & ~sel);
    }
    p[words_ - 1] &= tail_mask();
  }
  return use_tag ? tag_count() : rows_;
}

int CamArray::shift(int col, int target) {
  check_col(col);
  if (target < 0 || target >= domains_)
    throw SimulationError("shift target domain " + std::to_string(target) +
                          " out of range");
  const int steps = std::abs(aligned_[col] - target);
  aligned_[col] = target;
  return steps;
}

void CamArray::write_value(int row, int col, int base, int width, int64_t value) {
  if (base < 0 || width < 0 || base + width > domains_)
    throw SimulationError("value does not fit the nanowire");
  for (int b = 0; b < width; ++b)
    set_bit(row, col, base + b, (value >> b) & 1);
}

int64_t CamArray::read_value(int row, int col, int base, int width,
                             bool is_signed) const {
  if (base < 0 || width < 1 || base + width > domains_ || width > 63)
    throw SimulationError("read range does not fit the nanowire");
  int64_t v = 0;
  for (int b = 0; b < width; ++b)
    v |= int64_t{bit(row, col, base + b)} << b;
  if (is_signed && ((v >> (width - 1)) & 1))
    v -= int64_t{1} << width;
  return v;
}

void CamArray::copy_domains(int col, const CamArray &src, int src_col, int width) {
  check_col(col);
  src.check_col(src_col);
  if (src.rows_ != rows_ || width < 0 || width > domains_ || width > src.domains_)
    throw SimulationError("move between arrays of different geometry");
  for (int d = 0; d < width; ++d)
    std::copy_n(src.plane(src_col, d), words_, plane(col, d));
}

std::string CamArray::dump_plane() const {
  std::string s;
  s.reserve(static_cast<std::size_t>(rows_) * (cols_ + 1));
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c)
      s += visible(r, c) ? '1' : '0';
    s += '\n';
  }
  return s;
}

} // namespace rtap
