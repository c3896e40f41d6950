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
#ifndef APSTREAM_ENGINE_HPP_
#define APSTREAM_ENGINE_HPP_

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apstream/estimator.hpp"
#include "apstream/oasrs.hpp"
#include "apstream/record.hpp"
#include "apstream/types.hpp"

namespace apstream {

//! How the stream is executed: batched materializes each interval before
//! sampling it; pipelined feeds every item through the sampler as it
//! arrives and never buffers the interval.
enum class ExecutionModel { Batched, Pipelined };

enum class SamplerKind { Oasrs, Srs, Sts, None };

const char* sampler_name(SamplerKind kind);
SamplerKind sampler_from_name(const std::string& name);
const char* model_name(ExecutionModel model);

//! How records are assigned to workers when the stratified sampler is
//! partitioned: by arrival position round robin, or by a stateless hash
//! of the arrival position.
enum class PartitionerKind { RoundRobin, HashByRecordIndex };

std::uint32_t route_record(PartitionerKind partitioner, std::uint64_t arrival_index,
                           std::uint32_t workers);

//! Per-worker seed derivation; fixed per worker so results do not depend
//! on scheduling order.
std::uint64_t worker_seed(std::uint64_t base_seed, std::uint32_t worker);

struct ExecutionConfig {
    ExecutionModel model = ExecutionModel::Batched;
    SamplerKind sampler = SamplerKind::Oasrs;
    WindowSpec window;
    QueryBudget budget;
    QuerySpec query;
    std::uint64_t seed = 0;
    //! Target relative half-width; enables the sample-size feedback loop.
    std::optional<double> target_error;
    //! Allowed event-time slack for records behind the open interval.
    std::int64_t lateness_ms = 0;
    //! Run an exact pass alongside the sampler to report accuracy loss.
    bool exact_shadow = false;
    std::uint32_t workers = 1;
    PartitionerKind partitioner = PartitionerKind::RoundRobin;
    ConfidenceLevel level = ConfidenceLevel::P95;
    CriticalValueMode critical_mode = CriticalValueMode::Normal;
    //! Assumed items per interval before the first interval closes; only
    //! used to translate a fractional budget for interval one.
    std::uint64_t bootstrap_items = 1024;

    //! Throws std::invalid_argument on inconsistent combinations (the
    //! batch-only samplers under the pipelined model, partitioned workers
    //! with a sampler that cannot be partitioned, invalid sub-specs).
    void validate() const;
};

//! One emitted window: the estimate with its error bound plus the
//! bookkeeping counters for this window's span.
struct WindowResult {
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;
    EstimateReport report;
    std::optional<double> exact_result;
    std::optional<double> accuracy_loss;
    std::uint64_t items_processed = 0;
    std::uint64_t items_sampled = 0;
    double processing_ms = 0.0;

    std::string to_json(const StratumTable* names = nullptr) const;
};

//! Counters for one whole run.
struct RunStats {
    std::vector<WindowResult> windows;
    std::uint64_t items_total = 0;
    std::uint64_t late_dropped = 0;
    std::uint64_t feedback_skipped = 0;
    std::size_t peak_retained = 0;
    double wall_seconds = 0.0;
    //! Budget in force after the last window (moves under feedback).
    QueryBudget final_budget;
};

//! Pull-based record supplier; returns nullopt at end of stream.
class RecordSource {
public:
    virtual ~RecordSource() = default;
    virtual std::optional<Record> next() = 0;
};

/*!
 * Windowed query executor. Event time drives everything: records cut
 * into tumbling intervals, each interval yields one weighted sample via
 * the configured sampler, and every sliding window aggregates the entries
 * of the intervals it spans (entries stay distinct per interval, so each
 * interval's weights stand on their own). Feed records with offer(), then
 * finish() closes the last interval and returns the results.
 */
class StreamEngine {
public:
    explicit StreamEngine(ExecutionConfig config, const StratumTable* names = nullptr);
    ~StreamEngine();

    StreamEngine(const StreamEngine&) = delete;
    StreamEngine& operator=(const StreamEngine&) = delete;

    //! Processes one record; records must be in event-time order up to
    //! the configured lateness. Late records are counted and dropped.
    void offer(const Record& record);

    //! Flushes the open interval and returns the accumulated results.
    RunStats finish();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

//! Convenience drivers around StreamEngine.
RunStats run_stream(RecordSource& source, const ExecutionConfig& config,
                    const StratumTable* names = nullptr);
RunStats run_stream(std::span<const Record> records, const ExecutionConfig& config,
                    const StratumTable* names = nullptr);

//! Relative deviation |approx - exact| / |exact|; throws
//! std::domain_error when exact == 0.
double accuracy_loss(double approx, double exact);

/*!
 * Sample-size feedback: when the window's relative error bound exceeded
 * the target, the budget grows by (observed/target)^2, at most doubling
 * per step, capped by the interval's item count (fraction budgets cap at
 * 1). A zero estimate leaves the budget unchanged (relative error is
 * undefined there).
 */
QueryBudget adaptive_feedback(const WindowResult& previous, double target_error,
                              QueryBudget current, std::uint64_t interval_items,
                              bool* skipped = nullptr);

} // namespace apstream

#endif // APSTREAM_ENGINE_HPP_
