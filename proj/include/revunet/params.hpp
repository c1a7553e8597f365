// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "revunet/tensor.hpp"

namespace revunet {

// Ordered, uniquely named tensors. Any mutable access bumps the version so a
// backward pass can detect parameters that changed after the forward.
template <typename T>
class ParamStore {
 public:
    std::size_t add(std::string name, Tensor5<T> value) {
        if (index_.count(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
        index_.emplace(name, values_.size());
        names_.push_back(std::move(name));
        values_.push_back(std::move(value));
        ++version_;
        return values_.size() - 1;
    }

    std::size_t size() const { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const Tensor5<T>& operator[](std::size_t i) const { return values_.at(i); }
    std::span<const T> values(std::size_t i) const { return values_.at(i).data(); }

    Tensor5<T>& mutable_value(std::size_t i) {
        ++version_;
        return values_.at(i);
    }

    std::optional<std::size_t> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index_of(std::string_view name) const {
        auto i = find(name);
        if (!i) throw std::out_of_range("no parameter named '" + std::string(name) + "'");
        return *i;
    }

    std::uint64_t version() const { return version_; }

    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& v : values_) n += v.numel();
        return n;
    }

    // Same names and shapes, all zero. Used as the gradient accumulator.
    ParamStore zeros_like() const {
        ParamStore g;
        for (std::size_t i = 0; i < size(); ++i) g.add(names_[i], Tensor5<T>(values_[i].shape()));
        return g;
    }

    void accumulate(std::size_t i, std::span<const T> delta) {
        Tensor5<T>& t = values_.at(i);
        if (delta.size() != t.numel()) throw ShapeError("gradient size mismatch for '" + names_[i] + "'");
        T* p = t.raw();
        for (std::size_t j = 0; j < delta.size(); ++j) p[j] += delta[j];
    }

 private:
    std::vector<std::string> names_;
    std::vector<Tensor5<T>> values_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t version_ = 0;
};

template <typename T>
using Gradients = ParamStore<T>;

}  // namespace revunet
