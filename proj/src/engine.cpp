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
#include "apstream/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "apstream/baselines.hpp"

namespace apstream {

namespace {

using Clock = std::chrono::steady_clock;

double ms_between(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double, std::milli>(b - a).count();
}

constexpr std::uint32_t kNoSlot = 0xffffffffu;

//! Full-pass accumulator used for exact execution and the shadow pass:
//! every value is kept, grouped by stratum, and emitted with weight 1.
struct ExactAccumulator {
    struct Group {
        StratumId id;
        std::vector<double> values;
    };

    std::vector<std::uint32_t> slot_by_id;
    std::vector<Group> groups;
    std::size_t retained = 0;

    void add(const Record& r) {
        if (r.stratum >= slot_by_id.size()) slot_by_id.resize(r.stratum + 1, kNoSlot);
        std::uint32_t slot = slot_by_id[r.stratum];
        if (slot == kNoSlot) {
            slot = static_cast<std::uint32_t>(groups.size());
            slot_by_id[r.stratum] = slot;
            groups.push_back(Group{r.stratum, {}});
        }
        groups[slot].values.push_back(r.value);
        ++retained;
    }

    WeightedSample close(std::int64_t start, std::int64_t end) {
        WeightedSample sample;
        sample.interval_start = start;
        sample.interval_end = end;
        sample.entries.reserve(groups.size());
        for (auto& g : groups) {
            if (g.values.empty()) continue;
            SampleEntry entry;
            entry.stratum = g.id;
            entry.counter = g.values.size();
            entry.weight = 1.0;
            entry.values = std::move(g.values);
            g.values = {};
            sample.entries.push_back(std::move(entry));
        }
        retained = 0;
        return sample;
    }
};

} // namespace

const char* sampler_name(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::Oasrs: return "oasrs";
        case SamplerKind::Srs: return "srs";
        case SamplerKind::Sts: return "sts";
        case SamplerKind::None: return "none";
    }
    return "?";
}

SamplerKind sampler_from_name(const std::string& name) {
    if (name == "oasrs") return SamplerKind::Oasrs;
    if (name == "srs") return SamplerKind::Srs;
    if (name == "sts") return SamplerKind::Sts;
    if (name == "none") return SamplerKind::None;
    throw std::invalid_argument("unknown sampler '" + name +
                                "' (expected oasrs, srs, sts or none)");
}

const char* model_name(ExecutionModel model) {
    return model == ExecutionModel::Batched ? "batched" : "pipelined";
}

std::uint32_t route_record(PartitionerKind partitioner, std::uint64_t arrival_index,
                           std::uint32_t workers) {
    if (partitioner == PartitionerKind::RoundRobin)
        return static_cast<std::uint32_t>(arrival_index % workers);
    return static_cast<std::uint32_t>(mix64(arrival_index) % workers);
}

std::uint64_t worker_seed(std::uint64_t base_seed, std::uint32_t worker) {
    return mix64(base_seed + 0x9e3779b97f4a7c15ULL * (worker + 1));
}

void ExecutionConfig::validate() const {
    window.validate();
    budget.validate();
    query.validate();
    if ((sampler == SamplerKind::Srs || sampler == SamplerKind::Sts) &&
        model == ExecutionModel::Pipelined)
        throw std::invalid_argument(
            "srs/sts require interval materialization; use the batched model");
    if (workers == 0)
        throw std::invalid_argument("worker count must be positive");
    if (workers > 1 && sampler != SamplerKind::Oasrs)
        throw std::invalid_argument("only the oasrs sampler can be partitioned");
    if (lateness_ms < 0)
        throw std::invalid_argument("lateness must be non-negative");
    if (target_error && !(*target_error > 0.0))
        throw std::invalid_argument("target error must be positive");
    if (bootstrap_items == 0)
        throw std::invalid_argument("bootstrap item estimate must be positive");
}

double accuracy_loss(double approx, double exact) {
    if (exact == 0.0)
        throw std::domain_error("accuracy loss undefined for exact == 0");
    return std::abs(approx - exact) / std::abs(exact);
}

QueryBudget adaptive_feedback(const WindowResult& previous, double target_error,
                              QueryBudget current, std::uint64_t interval_items,
                              bool* skipped) {
    if (skipped) *skipped = false;
    const double point = previous.report.point_estimate;
    if (previous.report.undefined || point == 0.0 || !std::isfinite(point)) {
        if (skipped) *skipped = true;
        return current;
    }
    const double half = previous.report.ci.high - point;
    const double observed = std::abs(half) / std::abs(point);
    if (observed <= target_error) return current;

    const double ratio = observed / target_error;
    const double factor = std::min(ratio * ratio, 2.0);
    QueryBudget next = current;
    if (current.kind == QueryBudget::Kind::SamplingFraction) {
        next.amount = std::min(current.amount * factor, 1.0);
    } else {
        // Grow, but never past the interval's item count (and never shrink).
        const double cap = std::max(current.amount, static_cast<double>(interval_items));
        next.amount = std::floor(std::min(current.amount * factor, cap));
    }
    return next;
}

// ---------------------------------------------------------------------------

struct StreamEngine::Impl {
    ExecutionConfig cfg;
    const StratumTable* names;

    std::int64_t interval_ms, slide_ms, window_ms;

    // Interval state. current_idx == -1 until the first record arrives.
    std::int64_t current_idx = -1;
    std::int64_t cur_start = 0, cur_end = 0;
    std::uint64_t interval_items = 0;
    std::uint64_t last_interval_items = 0;
    std::uint64_t arrival_in_interval = 0;

    std::vector<Record> batch;          // batched model buffer
    std::vector<OasrsSampler> samplers; // one per worker
    ExactAccumulator exact;             // sampler == none
    ExactAccumulator shadow;            // exact shadow pass
    Rng batch_rng{0};                   // srs/sts draws

    struct Closed {
        std::int64_t idx;
        std::shared_ptr<const WeightedSample> sample;
        std::shared_ptr<const WeightedSample> shadow;
    };
    std::deque<Closed> closed;
    std::size_t closed_retained = 0;
    std::size_t shadow_retained_closed = 0;

    std::int64_t next_window_end = 0;
    std::int64_t coverage_end = 0;

    QueryBudget budget;
    RunStats stats;
    double pending_close_ms = 0.0;
    Clock::time_point started{};
    bool timing_started = false;
    bool finished = false;

    explicit Impl(ExecutionConfig config, const StratumTable* table)
        : cfg(std::move(config)), names(table) {
        cfg.validate();
        interval_ms = cfg.window.interval_ms;
        slide_ms = cfg.window.slide_ms;
        window_ms = cfg.window.window_ms;
        budget = cfg.budget;
        // Until the first interval closes, fraction budgets reference the
        // configured bootstrap estimate.
        last_interval_items = cfg.bootstrap_items;
        batch_rng = Rng(worker_seed(cfg.seed, 0));
        if (cfg.sampler == SamplerKind::Oasrs) {
            samplers.reserve(cfg.workers);
            for (std::uint32_t w = 0; w < cfg.workers; ++w)
                samplers.emplace_back(interval_budget_for(last_interval_items),
                                      Rng(worker_seed(cfg.seed, w)),
                                      WorkerShare{cfg.workers, w});
        }
    }

    //! Translates the current budget into this interval's total sample
    //! size. Fraction budgets use the previous interval's item count (the
    //! sampler cannot see the current count up front) and are floored so
    //! that every known stratum keeps at least one slot per worker.
    std::size_t interval_budget_for(std::uint64_t reference_items) const {
        std::size_t total;
        if (budget.kind == QueryBudget::Kind::AbsoluteSampleSize) {
            total = static_cast<std::size_t>(budget.amount);
        } else {
            total = static_cast<std::size_t>(
                std::ceil(budget.amount * static_cast<double>(reference_items)));
            std::size_t strata = 0;
            for (const auto& s : samplers) strata = std::max(strata, s.stratum_count());
            total = std::max({total, std::size_t{1} * cfg.workers,
                              strata * cfg.workers});
        }
        return total;
    }

    std::size_t retained_now() const {
        std::size_t n = batch.size() + exact.retained + shadow.retained +
                        closed_retained + shadow_retained_closed;
        for (const auto& s : samplers) n += s.retained_items();
        return n;
    }

    void note_peak() {
        stats.peak_retained = std::max(stats.peak_retained, retained_now());
    }

    void open_interval(std::int64_t idx) {
        current_idx = idx;
        cur_start = idx * interval_ms;
        cur_end = cur_start + interval_ms;
        interval_items = 0;
        arrival_in_interval = 0;
        if (cfg.sampler == SamplerKind::Oasrs) {
            const std::size_t total = interval_budget_for(last_interval_items);
            for (auto& s : samplers) {
                s.set_total_budget(total);
                s.begin_interval(cur_start, cur_end);
            }
        }
    }

    void offer_to_sampler(const Record& r) {
        if (cfg.sampler == SamplerKind::Oasrs) {
            if (cfg.workers == 1) {
                samplers[0].offer(r);
            } else {
                samplers[route_record(cfg.partitioner, arrival_in_interval, cfg.workers)]
                    .offer(r);
            }
            ++arrival_in_interval;
        } else if (cfg.sampler == SamplerKind::None) {
            exact.add(r);
        }
    }

    void close_interval() {
        const auto t0 = Clock::now();
        auto sample = std::make_shared<WeightedSample>();
        sample->interval_start = cur_start;
        sample->interval_end = cur_end;

        switch (cfg.sampler) {
            case SamplerKind::Oasrs: {
                if (cfg.model == ExecutionModel::Batched) {
                    for (const Record& r : batch) offer_to_sampler(r);
                }
                if (cfg.workers == 1) {
                    *sample = samplers[0].close_interval();
                } else {
                    // One entry per (worker, stratum); each worker's local
                    // counter carries its own weight.
                    for (auto& s : samplers) {
                        WeightedSample local = s.close_interval();
                        for (auto& e : local.entries)
                            sample->entries.push_back(std::move(e));
                    }
                }
                break;
            }
            case SamplerKind::Srs: {
                Batch b{cur_start, cur_end, std::move(batch)};
                const std::size_t k = srs_budget(b.records.size());
                *sample = srs_sample(b, k, batch_rng);
                batch = std::move(b.records);
                break;
            }
            case SamplerKind::Sts: {
                Batch b{cur_start, cur_end, std::move(batch)};
                *sample = sts_sample(b, sts_fraction(b.records.size()), batch_rng);
                batch = std::move(b.records);
                break;
            }
            case SamplerKind::None: {
                if (cfg.model == ExecutionModel::Batched)
                    for (const Record& r : batch) exact.add(r);
                *sample = exact.close(cur_start, cur_end);
                break;
            }
        }

        std::shared_ptr<const WeightedSample> shadow_sample;
        if (cfg.exact_shadow)
            shadow_sample = std::make_shared<const WeightedSample>(
                shadow.close(cur_start, cur_end));

        // The sample and the batch coexist briefly; that is the peak for
        // the materializing samplers.
        stats.peak_retained = std::max(stats.peak_retained,
                                       retained_now() + sample->sampled_items());
        batch.clear();

        closed_retained += sample->sampled_items();
        if (shadow_sample) shadow_retained_closed += shadow_sample->sampled_items();
        closed.push_back(Closed{current_idx, std::move(sample), std::move(shadow_sample)});

        last_interval_items = interval_items;
        coverage_end = cur_end;
        pending_close_ms += ms_between(t0, Clock::now());

        emit_due_windows();
    }

    std::size_t srs_budget(std::size_t batch_size) const {
        if (budget.kind == QueryBudget::Kind::AbsoluteSampleSize)
            return static_cast<std::size_t>(budget.amount);
        return std::max<std::size_t>(
            1, static_cast<std::size_t>(
                   std::ceil(budget.amount * static_cast<double>(batch_size))));
    }

    double sts_fraction(std::size_t batch_size) const {
        if (budget.kind == QueryBudget::Kind::SamplingFraction) return budget.amount;
        if (batch_size == 0) return 1.0;
        return std::min(1.0, budget.amount / static_cast<double>(batch_size));
    }

    void emit_due_windows() {
        while (next_window_end <= coverage_end) {
            emit_window(next_window_end);
            next_window_end += slide_ms;
            prune_closed(next_window_end - window_ms);
        }
    }

    void emit_window(std::int64_t end) {
        const std::int64_t start = end - window_ms;
        const auto t0 = Clock::now();

        SampleView view;
        std::uint64_t items = 0;
        double exact_sum = 0.0;
        bool have_shadow = false;
        for (const auto& c : closed) {
            if (c.sample->interval_start < start || c.sample->interval_end > end)
                continue;
            view.append(*c.sample);
            items += c.sample->total_items();
            if (c.shadow) {
                exact_sum += estimate_sum(*c.shadow);
                have_shadow = true;
            }
        }

        WindowResult result;
        result.window_start = start;
        result.window_end = end;
        result.report = run_query(view, cfg.query, cfg.level, cfg.critical_mode);
        result.items_processed = items;
        result.items_sampled = view.sampled_items();
        if (have_shadow) {
            result.exact_result = exact_sum;
            if (exact_sum != 0.0 && !result.report.undefined)
                result.accuracy_loss =
                    accuracy_loss(result.report.point_estimate, exact_sum);
        }
        result.processing_ms = pending_close_ms + ms_between(t0, Clock::now());
        pending_close_ms = 0.0;

        if (cfg.target_error) {
            bool skipped = false;
            budget = adaptive_feedback(result, *cfg.target_error, budget,
                                       last_interval_items, &skipped);
            if (skipped) ++stats.feedback_skipped;
        }
        stats.windows.push_back(std::move(result));
    }

    void prune_closed(std::int64_t needed_from) {
        while (!closed.empty() && closed.front().sample->interval_end <= needed_from) {
            closed_retained -= closed.front().sample->sampled_items();
            if (closed.front().shadow)
                shadow_retained_closed -= closed.front().shadow->sampled_items();
            closed.pop_front();
        }
    }

    void offer(const Record& r) {
        if (finished)
            throw std::logic_error("engine already finished");
        if (!timing_started) {
            started = Clock::now();
            timing_started = true;
        }
        ++stats.items_total;

        if (current_idx < 0) {
            const std::int64_t idx = r.timestamp_ms / interval_ms;
            open_interval(idx);
            const std::int64_t aligned = (cur_start / slide_ms) * slide_ms;
            next_window_end = aligned + window_ms;
        } else if (r.timestamp_ms >= cur_end) {
            // A gap longer than a window restarts windowing instead of
            // fabricating per-interval empty results across the gap.
            if (r.timestamp_ms - cur_end >= window_ms) {
                close_interval();
                const std::int64_t idx = r.timestamp_ms / interval_ms;
                open_interval(idx);
                const std::int64_t aligned = (cur_start / slide_ms) * slide_ms;
                next_window_end = std::max(next_window_end, aligned + window_ms);
                prune_closed(next_window_end - window_ms);
            } else {
                while (r.timestamp_ms >= cur_end) {
                    close_interval();
                    open_interval(current_idx + 1);
                }
            }
        } else if (r.timestamp_ms < cur_start) {
            if (cur_start - r.timestamp_ms > cfg.lateness_ms) {
                ++stats.late_dropped;
                return;
            }
            // Within tolerance: admitted into the open interval.
        }

        ++interval_items;
        if (cfg.model == ExecutionModel::Batched)
            batch.push_back(r);
        else
            offer_to_sampler(r);
        if (cfg.exact_shadow) shadow.add(r);
        note_peak();
    }

    RunStats finish() {
        if (finished)
            throw std::logic_error("engine already finished");
        finished = true;
        if (current_idx >= 0) close_interval();
        stats.final_budget = budget;
        stats.wall_seconds =
            timing_started
                ? std::chrono::duration<double>(Clock::now() - started).count()
                : 0.0;
        return std::move(stats);
    }
};

StreamEngine::StreamEngine(ExecutionConfig config, const StratumTable* names)
    : impl_(std::make_unique<Impl>(std::move(config), names)) {}

StreamEngine::~StreamEngine() = default;

void StreamEngine::offer(const Record& record) { impl_->offer(record); }

RunStats StreamEngine::finish() { return impl_->finish(); }

RunStats run_stream(RecordSource& source, const ExecutionConfig& config,
                    const StratumTable* names) {
    StreamEngine engine(config, names);
    while (auto record = source.next()) engine.offer(*record);
    return engine.finish();
}

RunStats run_stream(std::span<const Record> records, const ExecutionConfig& config,
                    const StratumTable* names) {
    StreamEngine engine(config, names);
    for (const Record& r : records) engine.offer(r);
    return engine.finish();
}

std::string WindowResult::to_json(const StratumTable* names) const {
    using nlohmann::json;
    json j;
    j["window_start"] = window_start;
    j["window_end"] = window_end;
    j["estimate"] = report.undefined ? json(nullptr) : json(report.point_estimate);
    j["variance"] = report.variance;
    j["ci_low"] = report.undefined ? json(nullptr) : json(report.ci.low);
    j["ci_high"] = report.undefined ? json(nullptr) : json(report.ci.high);
    if (exact_result) j["exact"] = *exact_result;
    if (accuracy_loss) j["accuracy_loss"] = *accuracy_loss;
    j["items_processed"] = items_processed;
    j["items_sampled"] = items_sampled;
    j["processing_ms"] = processing_ms;
    if (report.degenerate_strata > 0)
        j["degenerate_strata"] = report.degenerate_strata;
    if (!report.per_stratum.empty() || report.histogram) {
        // Extended query results ride along under a dedicated key.
        j["report"] = json::parse(report.to_json(names));
    }
    return j.dump();
}

} // namespace apstream
