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
#include "apstream/distributed.hpp"

#include <algorithm>
#include <stdexcept>
#include <thread>

#include "apstream/oasrs.hpp"

namespace apstream {

void WorkerConfig::validate() const {
    if (workers == 0)
        throw std::invalid_argument("worker count must be positive");
}

namespace {

LocalSample run_worker(std::uint32_t worker, std::span<const Record> slice,
                       std::int64_t start, std::int64_t end,
                       const WorkerConfig& config, std::size_t total_budget,
                       std::uint64_t seed_base) {
    OasrsSampler sampler(total_budget, Rng(worker_seed(seed_base, worker)),
                         WorkerShare{config.workers, worker});
    sampler.begin_interval(start, end);
    for (const Record& r : slice) sampler.offer(r);
    return LocalSample{worker, sampler.close_interval()};
}

} // namespace

std::vector<LocalSample> partition_and_sample(std::span<const Record> records,
                                              std::int64_t interval_start,
                                              std::int64_t interval_end,
                                              const WorkerConfig& config,
                                              std::size_t total_budget,
                                              std::uint64_t seed_base,
                                              bool parallel) {
    config.validate();
    const std::uint32_t w = config.workers;

    // Route every record to exactly one worker, preserving arrival order
    // within each slice. After this point the workers touch nothing
    // shared except their own slice.
    std::vector<std::vector<Record>> slices(w);
    for (auto& s : slices) s.reserve(records.size() / w + 1);
    for (std::size_t i = 0; i < records.size(); ++i)
        slices[route_record(config.partitioner, i, w)].push_back(records[i]);

    std::vector<LocalSample> locals(w);
    if (parallel && w > 1) {
        std::vector<std::thread> threads;
        threads.reserve(w);
        for (std::uint32_t k = 0; k < w; ++k) {
            threads.emplace_back([&, k] {
                locals[k] = run_worker(k, slices[k], interval_start, interval_end,
                                       config, total_budget, seed_base);
            });
        }
        for (auto& t : threads) t.join();
    } else {
        for (std::uint32_t k = 0; k < w; ++k)
            locals[k] = run_worker(k, slices[k], interval_start, interval_end, config,
                                   total_budget, seed_base);
    }
    return locals;
}

WeightedSample merge_samples(const std::vector<LocalSample>& locals) {
    if (locals.empty())
        throw std::invalid_argument("nothing to merge");
    for (const auto& l : locals) {
        if (l.sample.interval_start != locals.front().sample.interval_start ||
            l.sample.interval_end != locals.front().sample.interval_end)
            throw std::invalid_argument("cannot merge samples of different intervals");
    }

    std::vector<const LocalSample*> ordered;
    ordered.reserve(locals.size());
    for (const auto& l : locals) ordered.push_back(&l);
    std::sort(ordered.begin(), ordered.end(),
              [](const LocalSample* a, const LocalSample* b) {
                  return a->worker_id < b->worker_id;
              });

    WeightedSample merged;
    merged.interval_start = locals.front().sample.interval_start;
    merged.interval_end = locals.front().sample.interval_end;
    for (const LocalSample* l : ordered)
        for (const auto& e : l->sample.entries) merged.entries.push_back(e);
    return merged;
}

} // namespace apstream
