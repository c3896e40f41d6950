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
#ifndef APSTREAM_WEIGHTED_SAMPLE_HPP_
#define APSTREAM_WEIGHTED_SAMPLE_HPP_

#include <cstdint>
#include <vector>

#include "apstream/record.hpp"

namespace apstream {

/*!
 * Sampled items of one stratum together with the bookkeeping the
 * estimators need: the number of items the stratum actually received
 * (`counter`) and the per-item weight, counter/|values| when the stratum
 * was oversubscribed and 1 otherwise. Each sampled value then stands for
 * `weight` original items.
 */
struct SampleEntry {
    StratumId stratum = 0;
    std::vector<double> values;
    double weight = 1.0;
    std::uint64_t counter = 0;

    std::size_t selected() const { return values.size(); }

    friend bool operator==(const SampleEntry&, const SampleEntry&) = default;
};

//! The weighted sample of one time interval: one entry per stratum that
//! received items (independent sub-samples may contribute several entries
//! for the same stratum, e.g. one per worker).
struct WeightedSample {
    std::int64_t interval_start = 0;
    std::int64_t interval_end = 0;
    std::vector<SampleEntry> entries;

    std::uint64_t total_items() const {
        std::uint64_t n = 0;
        for (const auto& e : entries) n += e.counter;
        return n;
    }

    std::size_t sampled_items() const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.values.size();
        return n;
    }

    friend bool operator==(const WeightedSample&, const WeightedSample&) = default;
};

//! Borrowed, ordered collection of sample entries. Estimators consume
//! views so a sliding window can aggregate the entries of several
//! interval samples without copying the values.
struct SampleView {
    std::vector<const SampleEntry*> entries;

    SampleView() = default;
    explicit SampleView(const WeightedSample& sample) { append(sample); }

    void append(const WeightedSample& sample) {
        entries.reserve(entries.size() + sample.entries.size());
        for (const auto& e : sample.entries) entries.push_back(&e);
    }

    std::uint64_t total_items() const {
        std::uint64_t n = 0;
        for (const auto* e : entries) n += e->counter;
        return n;
    }

    std::size_t sampled_items() const {
        std::size_t n = 0;
        for (const auto* e : entries) n += e->values.size();
        return n;
    }
};

} // namespace apstream

#endif // APSTREAM_WEIGHTED_SAMPLE_HPP_
