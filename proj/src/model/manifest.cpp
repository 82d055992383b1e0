// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#include "rtap/errors.h"
#include "rtap/model.h"

#include "json.hpp"

#include <fstream>
#include <sstream>

namespace rtap {

using nlohmann::json;

namespace {

int require_int(const json &obj, const char *key, const std::string &where) {
  auto it = obj.find(key);
  if (it == obj.end())
    throw FormatError(where + ": missing field '" + key + "'");
  if (!it->is_number_integer())
    throw FormatError(where + ": field '" + key + "' must be an integer");
  return it->get<int>();
}

int optional_int(const json &obj, const char *key, int fallback,
                 const std::string &where) {
  if (!obj.contains(key))
    return fallback;
  return require_int(obj, key, where);
}

const char *kind_name(LayerKind k) {
  switch (k) {
  case LayerKind::Conv:
    return "conv";
  case LayerKind::Pool:
    return "pool";
  case LayerKind::Add:
    return "add";
  }
  return "?";
}

const char *activation_name(ActivationKind k) {
  return k == ActivationKind::ReluClamp ? "relu_clamp" : "identity_clamp";
}

} // namespace

TernaryNetwork load_network(std::string_view manifest,
                            std::span<const int8_t> weights) {
  json doc;
  try {
    doc = json::parse(manifest);
  } catch (const json::parse_error &e) {
    throw FormatError(std::string("malformed manifest: ") + e.what());
  }
  if (!doc.is_object())
    throw FormatError("manifest must be an object");
  if (require_int(doc, "format_version", "manifest") != kManifestVersion)
    throw FormatError("unsupported manifest format_version");

  TernaryNetwork net;
  if (doc.contains("name")) {
    if (!doc["name"].is_string())
      throw FormatError("manifest: 'name' must be a string");
    net.name = doc["name"].get<std::string>();
  }
  if (!doc.contains("input") || !doc["input"].is_object())
    throw FormatError("manifest: missing 'input' object");
  const json &in = doc["input"];
  net.input = {require_int(in, "channels", "input"),
               require_int(in, "height", "input"),
               require_int(in, "width", "input"),
               require_int(in, "bits", "input")};
  if (net.input.channels < 1 || net.input.height < 1 || net.input.width < 1 ||
      net.input.bits < 1 || net.input.bits > 16)
    throw FormatError("manifest: input shape out of range");

  if (!doc.contains("layers") || !doc["layers"].is_array())
    throw FormatError("manifest: missing 'layers' array");

  std::size_t declared = 0;
  FeatureMapShape current = net.input;
  int index = 0;
  for (const json &jl : doc["layers"]) {
    const std::string where = "layer " + std::to_string(index);
    if (!jl.is_object() || !jl.contains("type") || !jl["type"].is_string())
      throw FormatError(where + ": missing 'type'");
    const std::string type = jl["type"].get<std::string>();

    Layer l;
    if (type == "conv")
      l.kind = LayerKind::Conv;
    else if (type == "pool")
      l.kind = LayerKind::Pool;
    else if (type == "add")
      l.kind = LayerKind::Add;
    else
      throw FormatError(where + ": unknown layer type '" + type + "'");

    l.shape.c_in = require_int(jl, "c_in", where);
    l.shape.c_out = require_int(jl, "c_out", where);
    l.shape.f_h = optional_int(jl, "f_h", 1, where);
    l.shape.f_w = optional_int(jl, "f_w", 1, where);
    l.shape.stride = optional_int(jl, "stride", 1, where);
    l.shape.pad = optional_int(jl, "pad", 0, where);
    l.shape.h_in = current.height;
    l.shape.w_in = current.width;
    if (l.shape.c_in != current.channels)
      throw ShapeError(where + ": c_in does not match the previous layer");
    l.shape.validate();

    l.quant.activation_bits = require_int(jl, "activation_bits", where);
    l.quant.requant_multiplier = optional_int(jl, "requant_multiplier", 1, where);
    l.quant.requant_shift = optional_int(jl, "requant_shift", 0, where);
    if (jl.contains("activation")) {
      if (!jl["activation"].is_string())
        throw FormatError(where + ": 'activation' must be a string");
      const std::string act = jl["activation"].get<std::string>();
      if (act == "relu_clamp")
        l.quant.kind = ActivationKind::ReluClamp;
      else if (act == "identity_clamp")
        l.quant.kind = ActivationKind::IdentityClamp;
      else
        throw FormatError(where + ": unknown activation '" + act + "'");
    }
    l.quant.validate();

    if (l.kind == LayerKind::Conv) {
      const int offset = require_int(jl, "weight_offset", where);
      const int len = require_int(jl, "weight_len", where);
      const std::size_t expected = static_cast<std::size_t>(l.shape.c_out) *
                                   l.shape.c_in * l.shape.f_h * l.shape.f_w;
      if (len < 0 || static_cast<std::size_t>(len) != expected)
        throw ShapeError(where + ": weight_len does not match the kernel shape");
      if (offset < 0 ||
          static_cast<std::size_t>(offset) + expected > weights.size())
        throw FormatError(where + ": weight range outside the blob");
      l.weights = TernaryWeights(l.shape.c_out, l.shape.c_in, l.shape.f_h,
                                 l.shape.f_w);
      std::copy_n(weights.begin() + offset, expected, l.weights.values.begin());
      l.weights.validate();
      declared += expected;
    }
    if (l.kind == LayerKind::Add) {
      const int skip = require_int(jl, "skip", where);
      if (skip < -1 || skip >= index)
        throw FormatError(where + ": 'skip' must name an earlier layer or -1");
      l.skip_tensor = skip + 1;
    }

    current = {l.shape.c_out, l.shape.h_out(), l.shape.w_out(),
               l.quant.activation_bits};
    net.layers.push_back(std::move(l));
    ++index;
  }
  if (declared != weights.size())
    throw FormatError("weights blob length " + std::to_string(weights.size()) +
                      " differs from declared tensor sizes " +
                      std::to_string(declared));
  net.validate();
  return net;
}

TernaryNetwork load_network_files(const std::filesystem::path &manifest,
                                  const std::filesystem::path &weights) {
  std::ifstream in(manifest);
  if (!in)
    throw FormatError("cannot open " + manifest.string());
  std::stringstream text;
  text << in.rdbuf();
  const std::vector<uint8_t> raw = read_file_bytes(weights);
  std::vector<int8_t> blob(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    blob[i] = static_cast<int8_t>(raw[i]);
  return load_network(text.str(), blob);
}

std::string dump_manifest(const TernaryNetwork &net) {
  json doc;
  doc["format_version"] = kManifestVersion;
  doc["name"] = net.name;
  doc["input"] = {{"channels", net.input.channels},
                  {"height", net.input.height},
                  {"width", net.input.width},
                  {"bits", net.input.bits}};
  json layers = json::array();
  std::size_t offset = 0;
  for (const Layer &l : net.layers) {
    json jl;
    jl["type"] = kind_name(l.kind);
    jl["c_in"] = l.shape.c_in;
    jl["c_out"] = l.shape.c_out;
    jl["f_h"] = l.shape.f_h;
    jl["f_w"] = l.shape.f_w;
    jl["stride"] = l.shape.stride;
    jl["pad"] = l.shape.pad;
    jl["activation_bits"] = l.quant.activation_bits;
    jl["requant_multiplier"] = l.quant.requant_multiplier;
    jl["requant_shift"] = l.quant.requant_shift;
    jl["activation"] = activation_name(l.quant.kind);
    if (l.kind == LayerKind::Conv) {
      jl["weight_offset"] = offset;
      jl["weight_len"] = l.weights.values.size();
      offset += l.weights.values.size();
    }
    if (l.kind == LayerKind::Add)
      jl["skip"] = l.skip_tensor - 1;
    layers.push_back(std::move(jl));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2) + "\n";
}

std::vector<int8_t> dump_weights(const TernaryNetwork &net) {
  std::vector<int8_t> blob;
  for (const Layer &l : net.layers)
    if (l.kind == LayerKind::Conv)
      blob.insert(blob.end(), l.weights.values.begin(), l.weights.values.end());
  return blob;
}

void save_network_files(const TernaryNetwork &net,
                        const std::filesystem::path &manifest,
                        const std::filesystem::path &weights) {
  std::ofstream out(manifest, std::ios::trunc);
  if (!out)
    throw FormatError("cannot write " + manifest.string());
  out << dump_manifest(net);
  const std::vector<int8_t> blob = dump_weights(net);
  std::vector<uint8_t> raw(blob.size());
  for (std::size_t i = 0; i < blob.size(); ++i)
    raw[i] = static_cast<uint8_t>(blob[i]);
  write_file_bytes(weights, raw);
}

} // namespace rtap
