// Copyright 2026 The rtap Authors
//
// Licensed under the Apache License v2.0 with LLVM Exceptions.
// See https://llvm.org/LICENSE.txt for license information.
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception

#ifndef RTAP_ERRORS_H
#define RTAP_ERRORS_H

#include <stdexcept>
#include <string>

namespace rtap {

/// Malformed manifest, blob, feature map, program or LUT text.
class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not line up (layer vs. feature map, layer chain).
class ShapeError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A layer or value does not fit the accelerator geometry.
class CapacityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The simulator detected an inconsistency between program and state.
/// This always indicates a compiler or simulator defect.
class SimulationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// No LUT satisfies the requested semantics within the pass budget.
class LutDerivationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace rtap

#endif // RTAP_ERRORS_H
