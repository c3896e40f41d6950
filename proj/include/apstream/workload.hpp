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
#ifndef APSTREAM_WORKLOAD_HPP_
#define APSTREAM_WORKLOAD_HPP_

#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "apstream/engine.hpp"
#include "apstream/record.hpp"

namespace apstream {

struct GaussianDist {
    double mu = 0.0;
    double sigma = 1.0;
};
struct PoissonDist {
    double lambda = 1.0;
};
struct ConstantDist {
    double value = 0.0;
};
using ValueDist = std::variant<GaussianDist, PoissonDist, ConstantDist>;

std::string dist_to_string(const ValueDist& dist);
ValueDist dist_from_string(const std::string& text);

//! One synthetic sub-stream: value distribution, deterministic arrival
//! process at `arrival_rate` items/s, optional share bookkeeping when the
//! stream was specified through proportions.
struct StratumSpec {
    std::string name;
    ValueDist dist = ConstantDist{};
    double arrival_rate = 1.0;
    std::optional<double> share;
    //! Relative jitter in (0,1) applied to inter-arrival gaps; 0 keeps
    //! the exact 1/rate spacing.
    double jitter = 0.0;

    void validate() const;
};

struct WorkloadSpec {
    enum class Interleaving { ByTimestamp, RoundRobin };

    std::vector<StratumSpec> strata;
    double duration_s = 60.0;
    std::uint64_t seed = 0;
    Interleaving interleaving = Interleaving::ByTimestamp;

    void validate() const;

    //! Sum of the strata arrival rates (items/s).
    double total_rate() const;
    //! Expected item count of one engine interval, for budget bootstraps.
    std::uint64_t expected_items_per_interval(std::int64_t interval_ms) const;
};

/*!
 * Deterministic multi-stratum generator. Each stratum draws values from
 * its own seeded generator and emits at fixed 1/rate spacing; the
 * per-stratum processes merge into one timestamp-ordered stream (or
 * round-robin over a combined-rate clock). Identical spec and seed give a
 * byte-identical stream.
 */
class WorkloadSource final : public RecordSource {
public:
    WorkloadSource(WorkloadSpec spec, StratumTable& table);
    std::optional<Record> next() override;

private:
    struct StratumState;
    Record emit(std::size_t idx);

    WorkloadSpec spec_;
    std::vector<std::unique_ptr<StratumState>> states_;
    std::int64_t horizon_ms_;
    std::uint64_t round_robin_pos_ = 0;
};

//! Builds a generator over the given spec, interning stratum names.
WorkloadSource generate(const WorkloadSpec& spec, StratumTable& table);

//! Named stream configurations used by the benchmark sweeps: `gaussian3`
//! and `poisson3` (three equal-rate sub-streams), `skew_gaussian` and
//! `skew_poisson` (one sub-stream dominating the arrival shares). Throws
//! std::invalid_argument listing the names for anything else.
WorkloadSpec preset(const std::string& name);

std::vector<std::string> preset_names();

/*!
 * Replays a record file in order. A positive speed divides the
 * timestamps (2.0 packs items twice as densely in event time); speed 0
 * replays timestamps untouched for as-fast-as-possible runs (the engine
 * is event-time driven and never paces on the wall clock). Malformed
 * lines raise ParseError annotated with the line number.
 */
class ReplaySource final : public RecordSource {
public:
    ReplaySource(const std::string& path, double speed, StratumTable& table);
    std::optional<Record> next() override;

private:
    std::ifstream in_;
    std::string path_;
    double speed_;
    RecordParser parser_;
    std::size_t line_no_ = 0;
};

//! Loads a workload spec from a key-value file (see README for the schema).
WorkloadSpec load_workload_file(const std::string& path);

//! Drains a source to a record file; returns the record count.
std::uint64_t write_records(RecordSource& source, std::ostream& out,
                            const StratumTable& table);

} // namespace apstream

#endif // APSTREAM_WORKLOAD_HPP_
