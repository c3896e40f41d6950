/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/
#ifndef APSTREAM_OASRS_HPP_
#define APSTREAM_OASRS_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "apstream/record.hpp"
#include "apstream/reservoir.hpp"
#include "apstream/rng.hpp"
#include "apstream/weighted_sample.hpp"

namespace apstream {

/*!
 * Per-item weight of a stratum sample: counter/selected when more items
 * arrived than were kept, 1 otherwise. Throws std::invalid_argument when
 * selected == 0 (a degenerate sample cannot carry weight).
 */
double compute_weight(std::uint64_t counter, std::size_t selected);

/*!
 * Splits a total sample budget equally across strata, at least one slot
 * each, with the remainder going to the strata with the lowest ids.
 * Returns (stratum, capacity) pairs in ascending id order. Throws
 * std::invalid_argument when the budget cannot cover one item per stratum
 * or the stratum set is empty.
 */
std::vector<std::pair<StratumId, std::size_t>> allocate_sample_sizes(
    std::size_t total, std::span<const StratumId> strata);

//! Identifies one worker's share of a partitioned stream. The default is
//! the whole stream (one worker).
struct WorkerShare {
    std::uint32_t workers = 1;
    std::uint32_t index = 0;

    //! This worker's slice of a per-stratum capacity: floor(n/workers),
    //! plus one for the lowest-indexed workers while remainder lasts.
    std::size_t local_capacity(std::size_t n) const {
        return n / workers + (index < n % workers ? 1 : 0);
    }
};

/*!
 * Online adaptive stratified reservoir sampler for one execution context.
 *
 * Keeps one fixed-capacity reservoir and one arrival counter per stratum.
 * Items are routed to their stratum as they arrive, so sampling happens
 * before any batching and per-item work is O(1). Capacities derive from a
 * total per-interval budget split equally across the strata seen so far;
 * when a stratum first appears mid-interval the split is recomputed over
 * the enlarged set and oversized reservoirs are trimmed lazily at
 * interval close. At close each stratum yields its kept items with weight
 * counter/kept, the counters reset, and the stratum set carries over.
 *
 * Single-writer: exactly one execution context offers items to one
 * sampler. Independent samplers (one per worker) run concurrently with no
 * shared state; their outputs merge at interval close.
 */
class OasrsSampler {
public:
    //! `share` narrows every per-stratum capacity to one worker's slice.
    //! Throws std::invalid_argument when the budget is zero.
    OasrsSampler(std::size_t total_budget, Rng rng, WorkerShare share = {});

    //! Starts a new interval: clears counters and reservoirs, re-derives
    //! capacities over the persisted stratum set, applies any pending
    //! budget change.
    void begin_interval(std::int64_t start_ms, std::int64_t end_ms);

    //! Routes one item to its stratum. Creates the stratum on first
    //! contact (recomputing the capacity split).
    void offer(const Record& record);

    //! Ends the interval: trims oversized reservoirs, emits one weighted
    //! entry per non-empty stratum, and resets per-interval state.
    WeightedSample close_interval();

    //! Budget for subsequent intervals (applied at begin_interval).
    void set_total_budget(std::size_t total);

    std::size_t total_budget() const { return pending_budget_; }

    //! Items currently buffered across all reservoirs.
    std::size_t retained_items() const { return retained_; }

    std::size_t stratum_count() const { return strata_.size(); }

private:
    struct Stratum {
        StratumId id;
        ReservoirSampler<double> reservoir;
        std::uint64_t counter = 0;
    };

    std::size_t slot_of(StratumId id);
    void reallocate_capacities();

    std::size_t budget_;
    std::size_t pending_budget_;
    Rng rng_;
    WorkerShare share_;
    std::vector<Stratum> strata_;            // discovery order
    std::vector<std::uint32_t> slot_by_id_;  // dense id -> slot, npos when unseen
    std::vector<StratumId> sorted_ids_;      // ascending, for the equal split
    std::int64_t interval_start_ = 0;
    std::int64_t interval_end_ = 0;
    std::size_t retained_ = 0;
    bool interval_open_ = false;

    static constexpr std::uint32_t kNoSlot = 0xffffffffu;
};

} // namespace apstream

#endif // APSTREAM_OASRS_HPP_
