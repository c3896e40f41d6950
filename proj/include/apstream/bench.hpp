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
#ifndef APSTREAM_BENCH_HPP_
#define APSTREAM_BENCH_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "apstream/engine.hpp"
#include "apstream/workload.hpp"

namespace apstream {

enum class SweepVariable { Fraction, Window, Rate, Workers };
enum class ReportFormat { Json, Csv };

SweepVariable sweep_from_name(const std::string& name);
const char* sweep_name(SweepVariable v);

struct ExperimentPlan {
    //! Preset name, workload key-value file, or record file to replay.
    std::string workload = "gaussian3";
    std::vector<SamplerKind> samplers = {SamplerKind::Oasrs, SamplerKind::Srs,
                                         SamplerKind::Sts, SamplerKind::None};
    SweepVariable sweep = SweepVariable::Fraction;
    //! Fractions, window lengths in ms, total rates in items/s, or worker
    //! counts, depending on the sweep variable.
    std::vector<double> values = {0.1, 0.2, 0.4, 0.6, 0.8};
    std::uint32_t trials = 10;
    std::uint64_t seed_base = 0;
    std::string out_path;
    ReportFormat format = ReportFormat::Csv;

    WindowSpec window;
    QuerySpec query;
    ExecutionModel model = ExecutionModel::Batched;
    double duration_s = 0.0;  // 0 keeps the workload's own duration
    double fixed_fraction = 0.4;  // budget for non-fraction sweeps
    //! Run trials concurrently; throughput numbers then only reflect
    //! contention-free cells, so keep this for accuracy-only experiments.
    bool parallel_trials = false;

    void validate() const;
};

//! One (sampler, sweep value, trial) cell.
struct CellResult {
    SamplerKind sampler = SamplerKind::Oasrs;
    double sweep_value = 0.0;
    std::uint32_t trial = 0;
    double throughput = 0.0;  // items/s of the engine run
    std::optional<double> mean_loss;
    std::size_t peak_retained = 0;
    double wall_seconds = 0.0;
    std::uint64_t items = 0;
    std::vector<WindowResult> windows;
    bool failed = false;
    std::string error;
};

struct SummaryRow {
    SamplerKind sampler;
    double sweep_value;
    std::uint32_t trials;
    double throughput_mean, throughput_sd;
    double loss_mean, loss_sd;
    std::size_t peak_retained;
};

struct ExperimentResult {
    ExperimentPlan plan;
    std::vector<CellResult> cells;
    std::vector<SummaryRow> summary() const;
};

/*!
 * Runs the full sweep. Every trial generates one stream per (sweep value,
 * trial seed) and feeds the identical records to every sampler, so losses
 * compare like for like; accuracy loss is measured per window against the
 * unsampled run of the same stream. Failed cells are recorded and the
 * sweep continues.
 */
ExperimentResult run_experiment(const ExperimentPlan& plan);

/*!
 * Writes the summary table and the per-window detail rows, echoing the
 * summary to stdout. `out_path` is a file prefix: emits
 * <prefix>_summary.(csv|json) and <prefix>_windows.(csv|jsonl). An empty
 * prefix writes to stdout only. Throws std::runtime_error when the
 * destination cannot be opened.
 */
void emit_report(const ExperimentResult& result, ReportFormat format,
                 const std::string& out_path);

//! Summary CSV column names, stable across releases.
extern const char* const kSummaryCsvHeader;
//! Per-window detail CSV column names.
extern const char* const kWindowCsvHeader;

} // namespace apstream

#endif // APSTREAM_BENCH_HPP_
