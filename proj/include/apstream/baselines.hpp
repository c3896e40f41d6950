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
#ifndef APSTREAM_BASELINES_HPP_
#define APSTREAM_BASELINES_HPP_

#include <cstdint>
#include <vector>

#include "apstream/record.hpp"
#include "apstream/rng.hpp"
#include "apstream/weighted_sample.hpp"

namespace apstream {

//! One fully materialized time interval. Both baseline samplers operate
//! on complete batches; that is the cost they model.
struct Batch {
    std::int64_t interval_start = 0;
    std::int64_t interval_end = 0;
    std::vector<Record> records;
};

/*!
 * Simple random sampling over a batch via random sort: every record gets
 * a uniform key in [0,1] and the k smallest-keyed records win. Records
 * with keys above an upper threshold are ruled out immediately and the
 * selection runs over the survivors; if too few survive (vanishingly
 * rare), the selection falls back to all keys. Strata are ignored: the
 * result is a single whole-batch entry with weight |batch|/k, or weight 1
 * when the batch has at most k records.
 */
WeightedSample srs_sample(const Batch& batch, std::size_t k, Rng& rng);

/*!
 * Batch stratified sampling: groups the batch by stratum, then runs the
 * random-sort selection within each group. Each stratum of size C yields
 * exactly max(1, round(fraction*C)) items with weight C/selected, so the
 * per-stratum sample size tracks the stratum's share of the batch. The
 * whole batch must be resident before any output.
 */
WeightedSample sts_sample(const Batch& batch, double fraction, Rng& rng);

} // namespace apstream

#endif // APSTREAM_BASELINES_HPP_
