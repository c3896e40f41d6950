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
#include "apstream/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "apstream/oasrs.hpp"

namespace apstream {

namespace {

struct Keyed {
    double key;
    std::uint32_t index;
};

//! Random-sort selection: draw a key per item, keep the k smallest.
//! Items keyed above q are ruled out up front so the selection runs over
//! a small candidate set; keys below p would win outright, which the
//! k-smallest pick over candidates subsumes. Falls back to all keys when
//! fewer than k candidates survive.
std::vector<std::uint32_t> select_k_smallest(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::uint32_t> out;
    out.reserve(std::min(n, k));
    if (n <= k) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(static_cast<std::uint32_t>(i));
        return out;
    }

    const double nd = static_cast<double>(n);
    const double band = 3.0 * std::sqrt(static_cast<double>(k)) / nd;
    const double q = std::min(1.0, static_cast<double>(k) / nd + band);

    std::vector<Keyed> candidates;
    std::vector<double> all_keys(n);
    candidates.reserve(static_cast<std::size_t>(q * nd) + 16);
    for (std::size_t i = 0; i < n; ++i) {
        const double key = rng.next_double();
        all_keys[i] = key;
        if (key <= q) candidates.push_back({key, static_cast<std::uint32_t>(i)});
    }
    if (candidates.size() < k) {
        // Threshold failure; sort everything.
        candidates.clear();
        for (std::size_t i = 0; i < n; ++i)
            candidates.push_back({all_keys[i], static_cast<std::uint32_t>(i)});
    }

    std::nth_element(candidates.begin(), candidates.begin() + (k - 1), candidates.end(),
                     [](const Keyed& a, const Keyed& b) { return a.key < b.key; });
    for (std::size_t i = 0; i < k; ++i) out.push_back(candidates[i].index);
    return out;
}

} // namespace

WeightedSample srs_sample(const Batch& batch, std::size_t k, Rng& rng) {
    if (k == 0)
        throw std::invalid_argument("sample size must be positive");

    WeightedSample sample;
    sample.interval_start = batch.interval_start;
    sample.interval_end = batch.interval_end;
    if (batch.records.empty()) return sample;

    const auto picks = select_k_smallest(batch.records.size(), k, rng);

    SampleEntry entry;
    entry.stratum = kWholeStreamStratum;
    entry.counter = batch.records.size();
    entry.values.reserve(picks.size());
    for (auto idx : picks) entry.values.push_back(batch.records[idx].value);
    entry.weight = compute_weight(entry.counter, entry.values.size());
    sample.entries.push_back(std::move(entry));
    return sample;
}

WeightedSample sts_sample(const Batch& batch, double fraction, Rng& rng) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("fraction must be in (0, 1]");

    WeightedSample sample;
    sample.interval_start = batch.interval_start;
    sample.interval_end = batch.interval_end;
    if (batch.records.empty()) return sample;

    // Group the materialized batch by stratum, preserving arrival order
    // within each group and group order by first appearance.
    std::unordered_map<StratumId, std::size_t> group_of;
    std::vector<StratumId> order;
    std::vector<std::vector<double>> groups;
    for (const Record& r : batch.records) {
        auto [it, inserted] = group_of.try_emplace(r.stratum, groups.size());
        if (inserted) {
            groups.emplace_back();
            order.push_back(r.stratum);
        }
        groups[it->second].push_back(r.value);
    }

    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& values = groups[g];
        const auto c = values.size();
        // Exact per-stratum size: round(fraction*C), never below one.
        const auto want = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(c))));
        const auto picks = select_k_smallest(c, want, rng);

        SampleEntry entry;
        entry.stratum = order[g];
        entry.counter = c;
        entry.values.reserve(picks.size());
        for (auto idx : picks) entry.values.push_back(values[idx]);
        entry.weight = compute_weight(entry.counter, entry.values.size());
        sample.entries.push_back(std::move(entry));
    }
    return sample;
}

} // namespace apstream
