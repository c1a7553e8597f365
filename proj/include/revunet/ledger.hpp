// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0
//
// Exact accounting of tensors retained for the backward pass. Parameters are
// never registered; only saved forward contexts are.

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace revunet {

enum class Strategy { store_all, reversible };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& s);

// store_all / reversible describe how the owning node was executed in the
// forward pass; recompute marks contexts rebuilt during a reversible backward.
enum class StorageTag { store_all, reversible, recompute };

const char* storage_tag_name(StorageTag t);

struct LedgerEntry {
    std::string node;
    std::string op;
    std::size_t elements = 0;
    StorageTag tag = StorageTag::store_all;

    friend bool operator==(const LedgerEntry&, const LedgerEntry&) = default;
};

class MemoryLedger {
 public:
    using Handle = std::size_t;

    Handle acquire(LedgerEntry entry);
    void release(Handle h);

    std::size_t retained_elements() const { return retained_; }
    std::size_t peak_elements() const { return peak_; }

    // Currently retained entries in registration order.
    std::vector<LedgerEntry> live_entries() const;

 private:
    std::vector<LedgerEntry> entries_;
    std::vector<bool> live_;
    std::size_t retained_ = 0;
    std::size_t peak_ = 0;
};

struct LedgerReport {
    std::vector<LedgerEntry> entries;
    std::size_t retained_elements = 0;
    std::size_t peak_elements = 0;
    std::size_t scalar_bytes = 4;
};

LedgerReport make_ledger_report(const MemoryLedger& ledger, std::size_t scalar_bytes);

nlohmann::json to_json(const LedgerReport& report);

}  // namespace revunet
