// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
// End-to-end commands behind the rtap tool, plus the seeded synthetic
// networks they run on when no trained model is at hand.

#ifndef RTAP_DRIVER_H
#define RTAP_DRIVER_H

#include "rtap/metrics.h"
#include "rtap/program.h"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

namespace rtap {

/// "LxCxS[,key=value...]": L conv layers of C output channels and weight
/// sparsity S. Keys: in_channels, size, bits, kernel, pad.
struct SyntheticSpec {
  int layers = 3;
  int channels = 16;
  double sparsity = 0.85;
  int in_channels = 3;
  int size = 16;
  int bits = 4;
  int kernel = 3;
  int pad = 1;
};

SyntheticSpec parse_synthetic(std::string_view text);

/// Deterministic for a given spec and seed: exactly round(sparsity * n)
/// zeros per layer, random signs elsewhere, and a requantization shift that
/// keeps typical outputs inside the activation range.
TernaryNetwork synthetic_network(const SyntheticSpec &spec, uint64_t seed);

/// Ternary matrix of `rows` x `cols` with exactly round(sparsity * n) zeros.
std::vector<int8_t> random_ternary(int rows, int cols, double sparsity,
                                   uint64_t seed);

FeatureMap random_feature_map(const FeatureMapShape &shape, uint64_t seed);

/// Exit codes of the tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitMismatch = 2,
  kExitCapacity = 3,
  kExitFormat = 4,
};

struct RunConfig {
  std::optional<std::filesystem::path> model;
  std::optional<std::filesystem::path> weights;
  std::optional<std::filesystem::path> input;
  std::optional<std::filesystem::path> program;
  std::optional<std::string> synthetic;
  OptLevel opt = OptLevel::UnrollCse;
  ApGeometry geometry;
  EnergyModel energy;
  uint64_t seed = 1;
  std::filesystem::path out_dir = ".";
  int threads = 1;
  bool events = false; // also write events.ndjson
};

/// Network named by the config: manifest + weights, or a synthetic spec.
TernaryNetwork config_network(const RunConfig &cfg);
/// Input named by the config, or a seeded random map of `shape`.
FeatureMap config_input(const RunConfig &cfg, const FeatureMapShape &shape);

/// Writes program.bin and compile_report.json into out_dir.
int cmd_compile(const RunConfig &cfg, std::ostream &out);
/// Writes ofm.bin, stats.json and stats.csv (and events.ndjson) into out_dir.
int cmd_run(const RunConfig &cfg, std::ostream &out);
/// Compiles (or loads --program), runs and compares against the reference.
int cmd_verify(const RunConfig &cfg, std::ostream &out);
/// mode: check | derive. For check, `table_file` overrides the builtin.
int cmd_lut(std::string_view mode, OpKind op, Addressing addressing,
            bool negated, const std::optional<std::filesystem::path> &table_file,
            std::ostream &out);
/// Renders stats.json as text and CSV; `other` adds an op-count comparison.
int cmd_report(const std::filesystem::path &stats,
               const std::optional<std::filesystem::path> &other,
               std::ostream &out);

} // namespace rtap

#endif // RTAP_DRIVER_H
