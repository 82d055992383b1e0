// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/model.h"

#include "rtap/errors.h"

#include <algorithm>
#include <fstream>
#include <iterator>

namespace rtap {

LayerShape LayerShape::make(int c_in, int c_out, int f_h, int f_w, int h_in,
                            int w_in, int stride, int pad) {
  LayerShape s{c_in, c_out, f_h, f_w, h_in, w_in, stride, pad};
  s.validate();
  return s;
}

void LayerShape::validate() const {
  if (c_in < 1 || c_out < 1 || f_h < 1 || f_w < 1 || h_in < 1 || w_in < 1)
    throw ShapeError("layer extents must be >= 1");
  if (stride < 1)
    throw ShapeError("stride must be positive");
  if (pad < 0)
    throw ShapeError("padding must be non-negative");
  const int span_h = h_in + 2 * pad - f_h;
  const int span_w = w_in + 2 * pad - f_w;
  if (span_h < 0 || span_w < 0)
    throw ShapeError("kernel larger than padded input");
  if (span_h % stride != 0 || span_w % stride != 0)
    throw ShapeError("output extent not exactly divisible by stride");
}

TernaryWeights::TernaryWeights(int c_out, int c_in, int f_h, int f_w)
    : c_out(c_out), c_in(c_in), f_h(f_h), f_w(f_w),
      values(static_cast<std::size_t>(c_out) * c_in * f_h * f_w, 0) {}

void TernaryWeights::validate() const {
  if (values.size() != static_cast<std::size_t>(c_out) * c_in * f_h * f_w)
    throw FormatError("weight tensor size does not match its shape");
  for (int8_t v : values)
    if (v < -1 || v > 1)
      throw FormatError("non-ternary weight " + std::to_string(int{v}));
}

void QuantSpec::validate() const {
  if (activation_bits < 1 || activation_bits > 16)
    throw FormatError("activation_bits must be in 1..16");
  if (requant_multiplier < 0)
    throw FormatError("requant_multiplier must be non-negative");
  if (requant_shift < 0 || requant_shift > 62)
    throw FormatError("requant_shift must be in 0..62");
}

FeatureMap::FeatureMap(FeatureMapShape s)
    : shape(s),
      values(static_cast<std::size_t>(s.channels) * s.height * s.width, 0) {}

void FeatureMap::validate() const {
  if (shape.bits < 1 || shape.bits > 16)
    throw FormatError("feature map bits must be in 1..16");
  if (values.size() !=
      static_cast<std::size_t>(shape.channels) * shape.height * shape.width)
    throw FormatError("feature map size does not match its header");
  const uint32_t limit = uint32_t{1} << shape.bits;
  for (uint16_t v : values)
    if (v >= limit)
      throw FormatError("feature map value exceeds " +
                        std::to_string(shape.bits) + " bits");
}

FeatureMapShape TernaryNetwork::tensor_shape(int t) const {
  if (t == 0)
    return input;
  const Layer &l = layers.at(static_cast<std::size_t>(t - 1));
  return {l.shape.c_out, l.shape.h_out(), l.shape.w_out(),
          l.quant.activation_bits};
}

void TernaryNetwork::validate() const {
  if (input.channels < 1 || input.height < 1 || input.width < 1 ||
      input.bits < 1 || input.bits > 16)
    throw FormatError("invalid network input shape");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer &l = layers[i];
    const FeatureMapShape in = tensor_shape(static_cast<int>(i));
    l.shape.validate();
    l.quant.validate();
    if (l.shape.c_in != in.channels || l.shape.h_in != in.height ||
        l.shape.w_in != in.width)
      throw ShapeError("layer " + std::to_string(i) +
                       " does not match the shape of its input");
    switch (l.kind) {
    case LayerKind::Conv:
      l.weights.validate();
      if (l.weights.c_out != l.shape.c_out || l.weights.c_in != l.shape.c_in ||
          l.weights.f_h != l.shape.f_h || l.weights.f_w != l.shape.f_w)
        throw ShapeError("layer " + std::to_string(i) +
                         " weight shape does not match the layer");
      break;
    case LayerKind::Pool:
      if (l.shape.c_out != l.shape.c_in || l.shape.pad != 0)
        throw ShapeError("pool layer must keep channels and use no padding");
      if (l.quant.activation_bits != in.bits)
        throw ShapeError("pool layer must keep the activation width");
      break;
    case LayerKind::Add: {
      if (l.skip_tensor < 0 || l.skip_tensor > static_cast<int>(i))
        throw ShapeError("add layer skip must name an earlier tensor");
      const FeatureMapShape other = tensor_shape(l.skip_tensor);
      if (other.channels != in.channels || other.height != in.height ||
          other.width != in.width)
        throw ShapeError("add layer operands differ in shape");
      if (l.shape.c_out != l.shape.c_in || l.shape.f_h != 1 ||
          l.shape.f_w != 1 || l.shape.stride != 1 || l.shape.pad != 0)
        throw ShapeError("add layer must be shape-preserving");
      break;
    }
    }
  }
}

double sparsity(const TernaryWeights &w) {
  if (w.values.empty())
    return 0.0;
  const auto zeros = std::count(w.values.begin(), w.values.end(), int8_t{0});
  return static_cast<double>(zeros) / static_cast<double>(w.values.size());
}

AccTensor reference_convolution(const LayerShape &layer,
                                const TernaryWeights &w, const FeatureMap &ifm) {
  layer.validate();
  if (ifm.shape.channels != layer.c_in || ifm.shape.height != layer.h_in ||
      ifm.shape.width != layer.w_in)
    throw ShapeError("input feature map does not match the layer");
  if (w.c_out != layer.c_out || w.c_in != layer.c_in || w.f_h != layer.f_h ||
      w.f_w != layer.f_w)
    throw ShapeError("weights do not match the layer");

  AccTensor out(layer.c_out, layer.h_out(), layer.w_out());
  for (int o = 0; o < layer.c_out; ++o)
    for (int oy = 0; oy < layer.h_out(); ++oy)
      for (int ox = 0; ox < layer.w_out(); ++ox) {
        int64_t acc = 0;
        for (int i = 0; i < layer.c_in; ++i)
          for (int ky = 0; ky < layer.f_h; ++ky)
            for (int kx = 0; kx < layer.f_w; ++kx) {
              const int y = oy * layer.stride + ky - layer.pad;
              const int x = ox * layer.stride + kx - layer.pad;
              if (y < 0 || y >= layer.h_in || x < 0 || x >= layer.w_in)
                continue;
              acc += w.at(o, i, ky, kx) * int64_t{ifm.at(i, y, x)};
            }
        out.at(o, oy, ox) = acc;
      }
  return out;
}

uint32_t requantize(int64_t acc, const QuantSpec &q) {
  // relu_clamp and identity_clamp agree for unsigned outputs: a negative
  // accumulator floors to a negative value and clamps to zero either way.
  if (q.kind == ActivationKind::ReluClamp)
    acc = std::max<int64_t>(acc, 0);
  const int64_t scaled = (acc * q.requant_multiplier) >> q.requant_shift;
  return static_cast<uint32_t>(
      std::clamp<int64_t>(scaled, 0, static_cast<int64_t>(q.max_value())));
}

FeatureMap requantize_tensor(const AccTensor &acc, const QuantSpec &q) {
  FeatureMap fm({acc.channels, acc.height, acc.width, q.activation_bits});
  for (std::size_t i = 0; i < acc.values.size(); ++i)
    fm.values[i] = static_cast<uint16_t>(requantize(acc.values[i], q));
  return fm;
}

FeatureMap max_pool(const LayerShape &shape, const FeatureMap &ifm, int bits) {
  if (ifm.shape.channels != shape.c_in || ifm.shape.height != shape.h_in ||
      ifm.shape.width != shape.w_in)
    throw ShapeError("pool input does not match the layer");
  FeatureMap out({shape.c_out, shape.h_out(), shape.w_out(), bits});
  for (int c = 0; c < shape.c_out; ++c)
    for (int oy = 0; oy < shape.h_out(); ++oy)
      for (int ox = 0; ox < shape.w_out(); ++ox) {
        uint16_t best = 0;
        for (int ky = 0; ky < shape.f_h; ++ky)
          for (int kx = 0; kx < shape.f_w; ++kx)
            best = std::max(best, ifm.at(c, oy * shape.stride + ky,
                                         ox * shape.stride + kx));
        out.at(c, oy, ox) = best;
      }
  return out;
}

FeatureMap residual_add(const FeatureMap &a, const FeatureMap &b,
                        const QuantSpec &q) {
  if (a.shape.channels != b.shape.channels || a.shape.height != b.shape.height ||
      a.shape.width != b.shape.width)
    throw ShapeError("residual operands differ in shape");
  FeatureMap out({a.shape.channels, a.shape.height, a.shape.width,
                  q.activation_bits});
  for (std::size_t i = 0; i < a.values.size(); ++i)
    out.values[i] = static_cast<uint16_t>(
        requantize(int64_t{a.values[i]} + int64_t{b.values[i]}, q));
  return out;
}

std::vector<FeatureMap> reference_inference(const TernaryNetwork &net,
                                            const FeatureMap &input) {
  if (input.shape != net.input)
    throw ShapeError("input feature map does not match the network input");
  input.validate();

  std::vector<FeatureMap> tensors{input};
  for (const Layer &l : net.layers) {
    const FeatureMap &in = tensors.back();
    switch (l.kind) {
    case LayerKind::Conv:
      tensors.push_back(requantize_tensor(
          reference_convolution(l.shape, l.weights, in), l.quant));
      break;
    case LayerKind::Pool:
      tensors.push_back(max_pool(l.shape, in, l.quant.activation_bits));
      break;
    case LayerKind::Add:
      tensors.push_back(residual_add(
          in, tensors.at(static_cast<std::size_t>(l.skip_tensor)), l.quant));
      break;
    }
  }
  tensors.erase(tensors.begin());
  return tensors;
}

namespace {

void put_u32(std::vector<uint8_t> &out, uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32(std::span<const uint8_t> in, std::size_t at) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= uint32_t{in[at + i]} << (8 * i);
  return v;
}

} // namespace

std::vector<uint8_t> encode_feature_map(const FeatureMap &fm) {
  fm.validate();
  std::vector<uint8_t> out;
  put_u32(out, static_cast<uint32_t>(fm.shape.channels));
  put_u32(out, static_cast<uint32_t>(fm.shape.height));
  put_u32(out, static_cast<uint32_t>(fm.shape.width));
  put_u32(out, static_cast<uint32_t>(fm.shape.bits));
  const bool wide = fm.shape.bits > 8;
  for (uint16_t v : fm.values) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    if (wide)
      out.push_back(static_cast<uint8_t>(v >> 8));
  }
  return out;
}

FeatureMap decode_feature_map(std::span<const uint8_t> bytes) {
  if (bytes.size() < 16)
    throw FormatError("feature map file shorter than its header");
  FeatureMapShape s;
  const uint32_t c = get_u32(bytes, 0), h = get_u32(bytes, 4),
                 w = get_u32(bytes, 8), bits = get_u32(bytes, 12);
  if (c < 1 || h < 1 || w < 1 || c > 65536 || h > 65536 || w > 65536 ||
      bits < 1 || bits > 16)
    throw FormatError("feature map header out of range");
  s.channels = static_cast<int>(c);
  s.height = static_cast<int>(h);
  s.width = static_cast<int>(w);
  s.bits = static_cast<int>(bits);
  FeatureMap fm(s);
  const std::size_t width = bits > 8 ? 2 : 1;
  if (bytes.size() != 16 + fm.values.size() * width)
    throw FormatError("feature map payload length does not match its header");
  for (std::size_t i = 0; i < fm.values.size(); ++i) {
    uint16_t v = bytes[16 + i * width];
    if (width == 2)
      v = static_cast<uint16_t>(v | (uint16_t{bytes[16 + i * width + 1]} << 8));
    fm.values[i] = v;
  }
  fm.validate();
  return fm;
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path &path,
                      std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

FeatureMap read_feature_map(const std::filesystem::path &path) {
  return decode_feature_map(read_file_bytes(path));
}

void write_feature_map(const std::filesystem::path &path, const FeatureMap &fm) {
  write_file_bytes(path, encode_feature_map(fm));
}

} // namespace rtap
