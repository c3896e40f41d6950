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
#include "apstream/oasrs.hpp"

#include <algorithm>
#include <stdexcept>

namespace apstream {

double compute_weight(std::uint64_t counter, std::size_t selected) {
    if (selected == 0)
        throw std::invalid_argument("degenerate sample: zero selected items");
    if (counter > selected)
        return static_cast<double>(counter) / static_cast<double>(selected);
    return 1.0;
}

std::vector<std::pair<StratumId, std::size_t>> allocate_sample_sizes(
    std::size_t total, std::span<const StratumId> strata) {
    if (strata.empty())
        throw std::invalid_argument("cannot allocate over an empty stratum set");
    if (total < strata.size())
        throw std::invalid_argument("budget " + std::to_string(total) +
                                    " cannot cover one item per stratum (" +
                                    std::to_string(strata.size()) + " strata)");

    std::vector<StratumId> sorted(strata.begin(), strata.end());
    std::sort(sorted.begin(), sorted.end());

    const std::size_t base = total / sorted.size();
    std::size_t remainder = total % sorted.size();

    std::vector<std::pair<StratumId, std::size_t>> out;
    out.reserve(sorted.size());
    for (StratumId id : sorted) {
        std::size_t n = base;
        if (remainder > 0) {
            ++n;
            --remainder;
        }
        out.emplace_back(id, n);
    }
    return out;
}

OasrsSampler::OasrsSampler(std::size_t total_budget, Rng rng, WorkerShare share)
    : budget_(total_budget), pending_budget_(total_budget), rng_(rng), share_(share) {
    if (total_budget == 0)
        throw std::invalid_argument("sample budget must be positive");
    if (share.workers == 0 || share.index >= share.workers)
        throw std::invalid_argument("invalid worker share");
}

void OasrsSampler::begin_interval(std::int64_t start_ms, std::int64_t end_ms) {
    if (interval_open_)
        throw std::logic_error("previous interval still open");
    interval_start_ = start_ms;
    interval_end_ = end_ms;
    budget_ = pending_budget_;
    interval_open_ = true;
    retained_ = 0;
    for (auto& s : strata_) {
        s.reservoir.reset();
        s.counter = 0;
    }
    if (!strata_.empty()) reallocate_capacities();
}

std::size_t OasrsSampler::slot_of(StratumId id) {
    if (id >= slot_by_id_.size()) slot_by_id_.resize(id + 1, kNoSlot);
    std::uint32_t slot = slot_by_id_[id];
    if (slot != kNoSlot) return slot;

    // First contact with this stratum: give it a reservoir and rebalance
    // the equal split over the enlarged set. Reservoirs that are now over
    // capacity keep their items until close.
    slot = static_cast<std::uint32_t>(strata_.size());
    slot_by_id_[id] = slot;
    sorted_ids_.insert(std::upper_bound(sorted_ids_.begin(), sorted_ids_.end(), id), id);
    strata_.push_back(Stratum{id, ReservoirSampler<double>(1), 0});
    reallocate_capacities();
    return slot;
}

void OasrsSampler::reallocate_capacities() {
    const auto sizes = allocate_sample_sizes(budget_, sorted_ids_);
    for (const auto& [id, n] : sizes) {
        const std::size_t local = share_.local_capacity(n);
        if (local == 0)
            throw std::invalid_argument(
                "budget too small: stratum capacity " + std::to_string(n) +
                " cannot be split over " + std::to_string(share_.workers) + " workers");
        strata_[slot_by_id_[id]].reservoir.set_capacity(local);
    }
}

void OasrsSampler::offer(const Record& record) {
    Stratum& stratum = strata_[slot_of(record.stratum)];
    ++stratum.counter;
    const std::size_t before = stratum.reservoir.size();
    stratum.reservoir.offer(record.value, rng_);
    retained_ += stratum.reservoir.size() - before;
}

WeightedSample OasrsSampler::close_interval() {
    if (!interval_open_)
        throw std::logic_error("no open interval");
    WeightedSample sample;
    sample.interval_start = interval_start_;
    sample.interval_end = interval_end_;
    sample.entries.reserve(strata_.size());

    for (auto& s : strata_) {
        if (s.counter == 0) continue;  // silent this interval, no entry
        s.reservoir.shrink_to_capacity(rng_);
        SampleEntry entry;
        entry.stratum = s.id;
        entry.counter = s.counter;
        entry.values = s.reservoir.take();
        entry.weight = compute_weight(entry.counter, entry.values.size());
        sample.entries.push_back(std::move(entry));
        s.counter = 0;
    }
    retained_ = 0;
    interval_open_ = false;
    return sample;
}

void OasrsSampler::set_total_budget(std::size_t total) {
    if (total == 0)
        throw std::invalid_argument("sample budget must be positive");
    pending_budget_ = total;
}

} // namespace apstream
