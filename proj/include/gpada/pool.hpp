#pragma once

#include <map>
#include <set>

#include "gpada/dataset.hpp"

namespace gpada {

/// The evolving labeled/unlabeled partition of the target pool plus the
/// query-budget ledger. PLCS membership stores its pseudo-label; queried
/// membership implies the oracle revealed the true label.
struct PoolState {
    std::vector<SampleId> source_ids;            // sorted
    std::vector<SampleId> target_queried_ids;    // sorted
    std::map<SampleId, int> target_plcs;         // id -> stored pseudo-label
    std::vector<SampleId> target_unlabeled_ids;  // sorted
    std::vector<SampleId> initial_target_ids;    // pool membership at creation, sorted

    std::int64_t budget_total = 0;
    std::int64_t budget_spent = 0;
    std::int64_t per_round_budget = 0;

    bool is_unlabeled(SampleId id) const {
        return std::binary_search(target_unlabeled_ids.begin(), target_unlabeled_ids.end(), id);
    }

    /// Partition exactness + ledger invariants. Throws on violation.
    void validate() const {
        if (budget_spent > budget_total) fail("pool: budget_spent exceeds budget_total");
        if (budget_spent != static_cast<std::int64_t>(target_queried_ids.size()))
            fail("pool: budget_spent does not equal |target_queried_ids|");
        std::set<SampleId> all;
        auto add_all = [&](const std::vector<SampleId>& v) {
            for (SampleId id : v)
                if (!all.insert(id).second) fail("pool: id " + std::to_string(id) + " in two partitions");
        };
        add_all(target_queried_ids);
        add_all(target_unlabeled_ids);
        for (const auto& [id, lab] : target_plcs) {
            (void)lab;
            if (!all.insert(id).second) fail("pool: id " + std::to_string(id) + " in two partitions");
        }
        if (all.size() != initial_target_ids.size())
            fail("pool: partition does not cover the original target pool");
        for (SampleId id : initial_target_ids)
            if (!all.count(id)) fail("pool: id " + std::to_string(id) + " missing from partition");
    }
};

namespace detail {

inline void sorted_erase(std::vector<SampleId>& v, SampleId id) {
    auto it = std::lower_bound(v.begin(), v.end(), id);
    if (it == v.end() || *it != id) fail("pool: id " + std::to_string(id) + " not found");
    v.erase(it);
}

inline void sorted_insert(std::vector<SampleId>& v, SampleId id) {
    auto it = std::lower_bound(v.begin(), v.end(), id);
    if (it != v.end() && *it == id) fail("pool: id " + std::to_string(id) + " already present");
    v.insert(it, id);
}

}  // namespace detail

/// Builds the initial pool: every (non-excluded) target id unlabeled, budget
/// derived from the fraction. Per-round budget is floor(B/rounds) with the
/// remainder assigned to the final round.
inline PoolState split_pools(const Dataset& ds, double budget_fraction, int rounds,
                             const std::vector<SampleId>& excluded_target = {}) {
    if (budget_fraction < 0.0 || budget_fraction > 1.0)
        fail("split_pools: budget_fraction must be in [0,1]");
    if (rounds < 1) fail("split_pools: rounds must be >= 1");
    PoolState pool;
    pool.source_ids = ds.domain_ids(Domain::source);
    std::set<SampleId> excluded(excluded_target.begin(), excluded_target.end());
    for (SampleId id : ds.domain_ids(Domain::target))
        if (!excluded.count(id)) pool.target_unlabeled_ids.push_back(id);
    pool.initial_target_ids = pool.target_unlabeled_ids;
    const auto n_target = static_cast<double>(pool.target_unlabeled_ids.size());
    pool.budget_total = static_cast<std::int64_t>(std::floor(budget_fraction * n_target));
    pool.per_round_budget = pool.budget_total / rounds;
    if (budget_fraction > 0.0 && pool.budget_total < rounds)
        fail("split_pools: budget " + std::to_string(pool.budget_total) + " over " +
             std::to_string(rounds) + " rounds leaves an empty per-round budget");
    return pool;
}

/// Simulated annotator: reveals true labels, charges the budget, and moves
/// the ids into the queried set. Over-querying is a hard error.
inline std::vector<int> query_oracle(PoolState& pool, const Dataset& ds,
                                     const std::vector<SampleId>& ids) {
    if (pool.budget_spent + static_cast<std::int64_t>(ids.size()) > pool.budget_total)
        fail("query_oracle: budget overrun (spent " + std::to_string(pool.budget_spent) +
             " + " + std::to_string(ids.size()) + " > total " + std::to_string(pool.budget_total) + ")");
    for (SampleId id : ids)
        if (!pool.is_unlabeled(id))
            fail("query_oracle: id " + std::to_string(id) + " is not in the unlabeled pool");
    std::set<SampleId> dedup(ids.begin(), ids.end());
    if (dedup.size() != ids.size()) fail("query_oracle: duplicate id in query");
    std::vector<int> labels;
    labels.reserve(ids.size());
    for (SampleId id : ids) {
        detail::sorted_erase(pool.target_unlabeled_ids, id);
        detail::sorted_insert(pool.target_queried_ids, id);
        labels.push_back(ds.by_id(id).true_label);
    }
    pool.budget_spent += static_cast<std::int64_t>(ids.size());
    return labels;
}

}  // namespace gpada
