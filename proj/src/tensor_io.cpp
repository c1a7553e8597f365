// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/tensor_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace revunet {
namespace {

static_assert(std::endian::native == std::endian::little,
              "RVT1 I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic = {'R', 'V', 'T', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    os.write(buf, 8);
}

std::uint64_t get_u64(std::istream& is) {
    char buf[8];
    if (!is.read(buf, 8)) throw FormatError("truncated RVT1 header");
    std::uint64_t v;
    std::memcpy(&v, buf, 8);
    return v;
}

template <typename T>
Tensor5<T> read_payload(std::istream& is, const Shape5& shape) {
    std::vector<T> values(shape.numel());
    const auto bytes = static_cast<std::streamsize>(values.size() * sizeof(T));
    is.read(reinterpret_cast<char*>(values.data()), bytes);
    if (is.gcount() != bytes) {
        throw FormatError("truncated RVT1 payload: expected " + std::to_string(values.size()) +
                          " elements, got " + std::to_string(is.gcount() / sizeof(T)));
    }
    return Tensor5<T>(shape, std::move(values));
}

}  // namespace

template <typename T>
void write_tensor(std::ostream& os, const Tensor5<T>& t) {
    os.write(kMagic.data(), 4);
    const char header[2] = {static_cast<char>(t.precision()), 5};
    os.write(header, 2);
    for (auto d : t.shape().dims()) put_u64(os, d);
    os.write(reinterpret_cast<const char*>(t.raw()),
             static_cast<std::streamsize>(t.numel() * sizeof(T)));
    if (!os) throw std::runtime_error("failed writing RVT1 tensor");
}

template <typename T>
void tensor_write(const Tensor5<T>& t, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_tensor(os, t);
}

AnyTensor read_any_tensor(std::istream& is) {
    std::array<char, 4> magic{};
    if (!is.read(magic.data(), 4)) throw FormatError("truncated RVT1 header");
    if (magic != kMagic) throw FormatError("bad magic: not an RVT1 tensor file");
    char header[2];
    if (!is.read(header, 2)) throw FormatError("truncated RVT1 header");
    const auto tag = static_cast<std::uint8_t>(header[0]);
    const auto rank = static_cast<std::uint8_t>(header[1]);
    if (tag > 1) throw FormatError("unknown precision tag " + std::to_string(tag));
    if (rank != 5) throw FormatError("rank " + std::to_string(rank) + " != 5");
    Shape5 s;
    s.n = get_u64(is);
    s.c = get_u64(is);
    s.d = get_u64(is);
    s.h = get_u64(is);
    s.w = get_u64(is);
    for (auto v : s.dims()) {
        if (v == 0) throw FormatError("zero extent in RVT1 shape " + s.str());
    }
    if (tag == 0) return read_payload<float>(is, s);
    return read_payload<double>(is, s);
}

AnyTensor tensor_read_any(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_any_tensor(is);
}

template <typename T>
Tensor5<T> tensor_read(const std::filesystem::path& path) {
    return as_precision<T>(tensor_read_any(path));
}

template void write_tensor(std::ostream&, const Tensor5f&);
template void write_tensor(std::ostream&, const Tensor5d&);
template void tensor_write(const Tensor5f&, const std::filesystem::path&);
template void tensor_write(const Tensor5d&, const std::filesystem::path&);
template Tensor5f tensor_read<float>(const std::filesystem::path&);
template Tensor5d tensor_read<double>(const std::filesystem::path&);

}  // namespace revunet
