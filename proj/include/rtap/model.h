// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// Ternary network model: shapes, weights, quantized activations and the
// golden integer reference that the compiler and simulator are checked
// against.

#ifndef RTAP_MODEL_H
#define RTAP_MODEL_H

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rtap {

/// Geometry of a convolution (or pooling) window over a feature map.
struct LayerShape {
  int c_in = 1;
  int c_out = 1;
  int f_h = 1;
  int f_w = 1;
  int h_in = 1;
  int w_in = 1;
  int stride = 1;
  int pad = 0;

  /// Builds a shape and checks every invariant; throws ShapeError.
  static LayerShape make(int c_in, int c_out, int f_h, int f_w, int h_in,
                         int w_in, int stride, int pad);

  void validate() const;
  int h_out() const { return (h_in + 2 * pad - f_h) / stride + 1; }
  int w_out() const { return (w_in + 2 * pad - f_w) / stride + 1; }
  int patch_size() const { return f_h * f_w; }
  int positions() const { return h_out() * w_out(); }

  bool operator==(const LayerShape &) const = default;
};

/// Weights of shape (c_out, c_in, f_h, f_w), entries in {-1, 0, +1}.
struct TernaryWeights {
  int c_out = 0;
  int c_in = 0;
  int f_h = 0;
  int f_w = 0;
  std::vector<int8_t> values;

  TernaryWeights() = default;
  TernaryWeights(int c_out, int c_in, int f_h, int f_w);

  std::size_t index(int o, int i, int y, int x) const {
    return ((static_cast<std::size_t>(o) * c_in + i) * f_h + y) * f_w + x;
  }
  int8_t at(int o, int i, int y, int x) const { return values[index(o, i, y, x)]; }
  int8_t &at(int o, int i, int y, int x) { return values[index(o, i, y, x)]; }

  /// Throws FormatError when an entry is outside {-1, 0, +1}.
  void validate() const;

  bool operator==(const TernaryWeights &) const = default;
};

enum class ActivationKind { ReluClamp, IdentityClamp };

struct QuantSpec {
  int activation_bits = 4;
  int64_t requant_multiplier = 1;
  int requant_shift = 0;
  ActivationKind kind = ActivationKind::ReluClamp;

  uint32_t max_value() const { return (uint32_t{1} << activation_bits) - 1; }
  void validate() const;

  bool operator==(const QuantSpec &) const = default;
};

struct FeatureMapShape {
  int channels = 1;
  int height = 1;
  int width = 1;
  int bits = 4;

  bool operator==(const FeatureMapShape &) const = default;
};

/// Unsigned activations of `bits` width in (channel, row, column) order.
struct FeatureMap {
  FeatureMapShape shape;
  std::vector<uint16_t> values;

  FeatureMap() = default;
  explicit FeatureMap(FeatureMapShape shape);

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * shape.height + y) * shape.width + x;
  }
  uint16_t at(int c, int y, int x) const { return values[index(c, y, x)]; }
  uint16_t &at(int c, int y, int x) { return values[index(c, y, x)]; }

  /// Throws FormatError when a value does not fit `bits`.
  void validate() const;

  bool operator==(const FeatureMap &) const = default;
};

/// Signed partial sums of a convolution, (channel, row, column) order.
struct AccTensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<int64_t> values;

  AccTensor() = default;
  AccTensor(int channels, int height, int width)
      : channels(channels), height(height), width(width),
        values(static_cast<std::size_t>(channels) * height * width, 0) {}

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  int64_t at(int c, int y, int x) const { return values[index(c, y, x)]; }
  int64_t &at(int c, int y, int x) { return values[index(c, y, x)]; }

  bool operator==(const AccTensor &) const = default;
};

enum class LayerKind { Conv, Pool, Add };

/// One step of the network. Layer i reads tensor i and writes tensor i + 1;
/// tensor 0 is the network input.
struct Layer {
  LayerKind kind = LayerKind::Conv;
  LayerShape shape;
  TernaryWeights weights; // conv only
  QuantSpec quant;
  int skip_tensor = -1; // add only: tensor summed with tensor i

  bool operator==(const Layer &) const = default;
};

struct TernaryNetwork {
  std::string name;
  FeatureMapShape input;
  std::vector<Layer> layers;

  /// Shape of tensor t (0 = input, i + 1 = output of layer i).
  FeatureMapShape tensor_shape(int t) const;
  void validate() const;

  bool operator==(const TernaryNetwork &) const = default;
};

inline constexpr int kManifestVersion = 1;

TernaryNetwork load_network(std::string_view manifest,
                            std::span<const int8_t> weights);
TernaryNetwork load_network_files(const std::filesystem::path &manifest,
                                  const std::filesystem::path &weights);

/// Inverse of load_network: manifest text plus the weights blob.
std::string dump_manifest(const TernaryNetwork &net);
std::vector<int8_t> dump_weights(const TernaryNetwork &net);
void save_network_files(const TernaryNetwork &net,
                        const std::filesystem::path &manifest,
                        const std::filesystem::path &weights);

double sparsity(const TernaryWeights &w);

AccTensor reference_convolution(const LayerShape &layer,
                                const TernaryWeights &w, const FeatureMap &ifm);

uint32_t requantize(int64_t acc, const QuantSpec &q);

FeatureMap requantize_tensor(const AccTensor &acc, const QuantSpec &q);
FeatureMap max_pool(const LayerShape &shape, const FeatureMap &ifm, int bits);
FeatureMap residual_add(const FeatureMap &a, const FeatureMap &b,
                        const QuantSpec &q);

/// Golden trace: one output feature map per layer.
std::vector<FeatureMap> reference_inference(const TernaryNetwork &net,
                                            const FeatureMap &input);

// Feature-map files: four little-endian uint32 (channels, height, width,
// bits), then row-major values, one byte each for bits <= 8, else two
// little-endian bytes each.
std::vector<uint8_t> encode_feature_map(const FeatureMap &fm);
FeatureMap decode_feature_map(std::span<const uint8_t> bytes);
FeatureMap read_feature_map(const std::filesystem::path &path);
void write_feature_map(const std::filesystem::path &path, const FeatureMap &fm);

std::vector<uint8_t> read_file_bytes(const std::filesystem::path &path);
void write_file_bytes(const std::filesystem::path &path,
                      std::span<const uint8_t> bytes);

} // namespace rtap

#endif // RTAP_MODEL_H
