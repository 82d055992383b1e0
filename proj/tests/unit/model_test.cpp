// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/errors.h"
#include "rtap/model.h"
#include "support.h"

#include <doctest.h>

#include <filesystem>

using namespace rtap;
using rtap::test::kEq1;

TEST_SUITE_BEGIN("model");

TEST_CASE("layer shape invariants") {
  CHECK_NOTHROW(LayerShape::make(3, 16, 3, 3, 16, 16, 1, 1));
  CHECK(LayerShape::make(3, 16, 3, 3, 16, 16, 1, 1).positions() == 256);
  CHECK(LayerShape::make(1, 1, 3, 3, 7, 7, 2, 0).h_out() == 3);
  CHECK_THROWS_AS(LayerShape::make(0, 1, 1, 1, 1, 1, 1, 0), ShapeError);
  CHECK_THROWS_AS(LayerShape::make(1, 1, 5, 5, 3, 3, 1, 0), ShapeError);
  CHECK_THROWS_AS(LayerShape::make(1, 1, 1, 1, 4, 4, 0, 0), ShapeError);
}

TEST_CASE("sparsity") {
  TernaryWeights w(6, 6, 1, 1);
  w.values = kEq1;
  CHECK(sparsity(w) == doctest::Approx(16.0 / 36.0));
  std::fill(w.values.begin(), w.values.end(), 0);
  CHECK(sparsity(w) == 1.0);
  std::fill(w.values.begin(), w.values.end(), 1);
  CHECK(sparsity(w) == 0.0);
}

TEST_CASE("requantize") {
  QuantSpec q;
  CHECK(requantize(-5, q) == 0);
  CHECK(requantize(7, q) == 7);
  CHECK(requantize(500, q) == 15);
  q.kind = ActivationKind::IdentityClamp;
  CHECK(requantize(-5, q) == 0);

  // Monotone and bounded over a sweep of scales.
  for (int shift : {0, 1, 3})
    for (int64_t mult : {1, 3, 7}) {
      QuantSpec s;
      s.requant_shift = shift;
      s.requant_multiplier = mult;
      uint32_t prev = 0;
      for (int64_t acc = -300; acc <= 300; ++acc) {
        const uint32_t v = requantize(acc, s);
        CHECK(v >= prev);
        CHECK(v <= 15u);
        const int64_t want =
            std::clamp<int64_t>((std::max<int64_t>(acc, 0) * mult) >> shift, 0, 15);
        CHECK(v == static_cast<uint32_t>(want));
        prev = v;
      }
    }
}

TEST_CASE("reference convolution matches a direct loop") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 3);
    const int pad = static_cast<int>(rng() % 2);
    const int stride = 1 + static_cast<int>(rng() % 2);
    // Extents the stride divides exactly.
    const int h = k - 2 * pad + stride * static_cast<int>(1 + rng() % 4);
    const int wd = k - 2 * pad + stride * static_cast<int>(2 + rng() % 4);
    if (h < 1 || wd < 1)
      continue;
    const LayerShape s =
        LayerShape::make(1 + rng() % 3, 1 + rng() % 5, k, k, h, wd, stride, pad);
    TernaryWeights w(s.c_out, s.c_in, k, k);
    w.values = test::ternary(rng, w.values.size(), 0.4);
    const FeatureMap in = test::random_map(rng, {s.c_in, s.h_in, s.w_in, 4});
    CHECK(reference_convolution(s, w, in) == test::naive_conv(s, w, in));
  }
}

TEST_CASE("reference convolution is linear and odd in the weights") {
  std::mt19937_64 rng(5);
  const LayerShape s = LayerShape::make(2, 4, 3, 3, 6, 6, 1, 1);
  TernaryWeights w(4, 2, 3, 3);
  w.values = test::ternary(rng, w.values.size(), 0.3);
  const FeatureMap a = test::random_map(rng, {2, 6, 6, 4});
  const FeatureMap b = test::random_map(rng, {2, 6, 6, 4});
  FeatureMap sum({2, 6, 6, 5});
  for (std::size_t i = 0; i < sum.values.size(); ++i)
    sum.values[i] = static_cast<uint16_t>(a.values[i] + b.values[i]);
  const AccTensor ya = reference_convolution(s, w, a);
  const AccTensor yb = reference_convolution(s, w, b);
  const AccTensor ys = reference_convolution(s, w, sum);
  for (std::size_t i = 0; i < ys.values.size(); ++i)
    CHECK(ys.values[i] == ya.values[i] + yb.values[i]);

  TernaryWeights neg = w;
  for (int8_t &v : neg.values)
    v = static_cast<int8_t>(-v);
  const AccTensor yn = reference_convolution(s, neg, a);
  for (std::size_t i = 0; i < yn.values.size(); ++i)
    CHECK(yn.values[i] == -ya.values[i]);
}

TEST_CASE("worked example as a 1x1 conv") {
  const LayerShape s = LayerShape::make(6, 6, 1, 1, 1, 1, 1, 0);
  TernaryWeights w(6, 6, 1, 1);
  w.values = kEq1;
  FeatureMap in({6, 1, 1, 4});
  in.values = {1, 2, 3, 4, 5, 6};
  const AccTensor y = reference_convolution(s, w, in);
  CHECK(y.values == std::vector<int64_t>{-3, -5, 2, 0, -5, -6});
}

TEST_CASE("reference inference") {
  std::mt19937_64 rng(3);
  const LayerShape s = LayerShape::make(2, 3, 3, 3, 5, 5, 1, 1);
  TernaryNetwork net = test::one_layer(s, test::ternary(rng, 54, 0.5), 4, 1);
  const FeatureMap in = test::random_map(rng, {2, 5, 5, 4});
  const std::vector<FeatureMap> trace = reference_inference(net, in);
  REQUIRE(trace.size() == 1);
  const AccTensor acc = test::naive_conv(s, net.layers[0].weights, in);
  for (std::size_t i = 0; i < acc.values.size(); ++i)
    CHECK(trace[0].values[i] ==
          std::clamp<int64_t>(std::max<int64_t>(acc.values[i], 0) >> 1, 0, 15));

  // An all-zero second layer zeroes the output.
  Layer zero;
  zero.shape = LayerShape::make(3, 3, 1, 1, 5, 5, 1, 0);
  zero.weights = TernaryWeights(3, 3, 1, 1);
  net.layers.push_back(zero);
  const std::vector<FeatureMap> two = reference_inference(net, in);
  for (uint16_t v : two.back().values)
    CHECK(v == 0);
}

TEST_CASE("pool and residual add") {
  FeatureMap in({1, 2, 4, 4});
  in.values = {1, 5, 2, 0, 3, 4, 9, 9};
  const FeatureMap p = max_pool(LayerShape::make(1, 1, 2, 2, 2, 4, 2, 0), in, 4);
  CHECK(p.values == std::vector<uint16_t>{5, 9});

  FeatureMap a({1, 1, 3, 4}), b({1, 1, 3, 4});
  a.values = {1, 10, 15};
  b.values = {2, 10, 15};
  QuantSpec q;
  CHECK(residual_add(a, b, q).values == std::vector<uint16_t>{3, 15, 15});
}

TEST_CASE("manifest and weight blob round trip") {
  std::mt19937_64 rng(9);
  const LayerShape s = LayerShape::make(3, 4, 3, 3, 8, 8, 1, 1);
  TernaryNetwork net = test::one_layer(s, test::ternary(rng, 108, 0.6), 4, 2);
  Layer pool;
  pool.kind = LayerKind::Pool;
  pool.shape = LayerShape::make(4, 4, 2, 2, 8, 8, 2, 0);
  net.layers.push_back(pool);
  net.validate();

  const std::vector<int8_t> blob = dump_weights(net);
  const TernaryNetwork back = load_network(dump_manifest(net), blob);
  CHECK(back == net);

  std::vector<int8_t> bad = blob;
  bad[7] = 2;
  CHECK_THROWS_AS(load_network(dump_manifest(net), bad), FormatError);
  CHECK_THROWS_AS(load_network("{not json", blob), FormatError);
  CHECK_THROWS_AS(load_network(dump_manifest(net),
                               std::span(blob).first(blob.size() - 1)),
                  FormatError);
}

TEST_CASE("feature map files") {
  std::mt19937_64 rng(1);
  const FeatureMap fm = test::random_map(rng, {3, 4, 5, 4});
  CHECK(decode_feature_map(encode_feature_map(fm)) == fm);
  std::vector<uint8_t> bytes = encode_feature_map(fm);
  bytes.pop_back();
  CHECK_THROWS_AS(decode_feature_map(bytes), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "rtap_model_fm.bin";
  write_feature_map(path, fm);
  CHECK(read_feature_map(path) == fm);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
