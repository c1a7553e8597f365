// Copyright 2026 The revunet Authors
// SPDX-License-Identifier: Apache-2.0

#include "revunet/ledger.hpp"

#include <algorithm>
#include <stdexcept>

namespace revunet {

const char* strategy_name(Strategy s) { return s == Strategy::store_all ? "store-all" : "reversible"; }

Strategy parse_strategy(const std::string& s) {
    if (s == "store-all" || s == "store_all") return Strategy::store_all;
    if (s == "reversible") return Strategy::reversible;
    throw std::invalid_argument("unknown strategy '" + s + "' (expected reversible or store-all)");
}

const char* storage_tag_name(StorageTag t) {
    switch (t) {
        case StorageTag::store_all: return "store-all";
        case StorageTag::reversible: return "reversible";
        case StorageTag::recompute: return "recompute";
    }
    return "?";
}

MemoryLedger::Handle MemoryLedger::acquire(LedgerEntry entry) {
    retained_ += entry.elements;
    peak_ = std::max(peak_, retained_);
    entries_.push_back(std::move(entry));
    live_.push_back(true);
    return entries_.size() - 1;
}

void MemoryLedger::release(Handle h) {
    if (h >= entries_.size() || !live_[h]) throw std::logic_error("ledger: double release");
    live_[h] = false;
    retained_ -= entries_[h].elements;
}

std::vector<LedgerEntry> MemoryLedger::live_entries() const {
    std::vector<LedgerEntry> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (live_[i]) out.push_back(entries_[i]);
    }
    return out;
}

LedgerReport make_ledger_report(const MemoryLedger& ledger, std::size_t scalar_bytes) {
    return {ledger.live_entries(), ledger.retained_elements(), ledger.peak_elements(), scalar_bytes};
}

nlohmann::json to_json(const LedgerReport& report) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& e : report.entries) {
        nodes.push_back({{"node", e.node},
                         {"op", e.op},
                         {"elements", e.elements},
                         {"bytes", e.elements * report.scalar_bytes},
                         {"strategy", storage_tag_name(e.tag)}});
    }
    return {{"schema_version", 1},
            {"nodes", nodes},
            {"retained_elements", report.retained_elements},
            {"retained_bytes", report.retained_elements * report.scalar_bytes},
            {"peak_elements", report.peak_elements},
            {"peak_bytes", report.peak_elements * report.scalar_bytes}};
}

}  // namespace revunet
