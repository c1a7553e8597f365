// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// RVT1 tensor files:
//   "RVT1" | u8 precision (0 single, 1 double) | u8 rank (5) | 5 x u64 LE dims |
//   raw little-endian scalars, row-major.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <variant>

#include "revunet/tensor.hpp"

namespace revunet {

class FormatError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

using AnyTensor = std::variant<Tensor5f, Tensor5d>;

template <typename T>
void write_tensor(std::ostream& os, const Tensor5<T>& t);

template <typename T>
void tensor_write(const Tensor5<T>& t, const std::filesystem::path& path);

AnyTensor read_any_tensor(std::istream& is);
AnyTensor tensor_read_any(const std::filesystem::path& path);

// Reads a file and converts to T if the stored precision differs.
template <typename T>
Tensor5<T> tensor_read(const std::filesystem::path& path);

template <typename T>
Tensor5<T> as_precision(const AnyTensor& t) {
    return std::visit([](const auto& v) { return tensor_cast<T>(v); }, t);
}

}  // namespace revunet
