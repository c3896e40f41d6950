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
#ifndef APSTREAM_DISTRIBUTED_HPP_
#define APSTREAM_DISTRIBUTED_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "apstream/engine.hpp"
#include "apstream/record.hpp"
#include "apstream/weighted_sample.hpp"

namespace apstream {

struct WorkerConfig {
    std::uint32_t workers = 1;
    PartitionerKind partitioner = PartitionerKind::RoundRobin;

    void validate() const;
};

//! One worker's interval output: its independent stratified sample with
//! local counters. Immutable once emitted; the single message a worker
//! sends.
struct LocalSample {
    std::uint32_t worker_id = 0;
    WeightedSample sample;
};

/*!
 * Synchronization-free partitioned sampling of one interval. Every record
 * goes to exactly one worker; each worker runs its own stratified
 * reservoir sampler whose per-stratum capacity is its slice of the
 * stratum budget (floor(N/w), remainder to the lowest worker indices) and
 * its own seeded generator. Workers share nothing mutable and exchange no
 * messages until their samples are collected. With `parallel` the workers
 * run on std::threads; results are identical either way because each
 * worker's input slice and seed are fixed up front.
 */
std::vector<LocalSample> partition_and_sample(std::span<const Record> records,
                                              std::int64_t interval_start,
                                              std::int64_t interval_end,
                                              const WorkerConfig& config,
                                              std::size_t total_budget,
                                              std::uint64_t seed_base,
                                              bool parallel = false);

/*!
 * Combines worker samples of the same interval into one weighted sample.
 * Every (worker, stratum) pair stays an independent entry weighted by its
 * own local counter, so no counters are exchanged or renormalized; the
 * estimators consume the entries as sub-strata. Throws
 * std::invalid_argument when interval bounds disagree.
 */
WeightedSample merge_samples(const std::vector<LocalSample>& locals);

} // namespace apstream

#endif // APSTREAM_DISTRIBUTED_HPP_
