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
#include "apstream/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace apstream {

const char* const kSummaryCsvHeader =
    "sampler,sweep_var,sweep_value,trials,throughput_mean,throughput_sd,"
    "loss_mean,loss_sd,peak_retained";

const char* const kWindowCsvHeader =
    "sampler,sweep_var,sweep_value,trial,window_start,window_end,estimate,"
    "variance,ci_low,ci_high,exact,accuracy_loss,items_processed,items_sampled,"
    "processing_ms";

SweepVariable sweep_from_name(const std::string& name) {
    if (name == "fraction") return SweepVariable::Fraction;
    if (name == "window") return SweepVariable::Window;
    if (name == "rate") return SweepVariable::Rate;
    if (name == "workers") return SweepVariable::Workers;
    throw std::invalid_argument("unknown sweep variable '" + name +
                                "' (expected fraction, window, rate or workers)");
}

const char* sweep_name(SweepVariable v) {
    switch (v) {
        case SweepVariable::Fraction: return "fraction";
        case SweepVariable::Window: return "window";
        case SweepVariable::Rate: return "rate";
        case SweepVariable::Workers: return "workers";
    }
    return "?";
}

void ExperimentPlan::validate() const {
    if (trials == 0)
        throw std::invalid_argument("trials must be >= 1");
    if (values.empty())
        throw std::invalid_argument("sweep values must be non-empty");
    if (samplers.empty())
        throw std::invalid_argument("at least one sampler required");
    window.validate();
    query.validate();
    for (double v : values) {
        switch (sweep) {
            case SweepVariable::Fraction:
                if (!(v > 0.0 && v <= 1.0))
                    throw std::invalid_argument("fractions must be in (0, 1]");
                break;
            case SweepVariable::Window:
                if (v <= 0.0 || v != std::floor(v) ||
                    static_cast<std::int64_t>(v) % 2 != 0)
                    throw std::invalid_argument(
                        "window sweep values must be even millisecond counts");
                break;
            case SweepVariable::Rate:
                if (!(v > 0.0))
                    throw std::invalid_argument("rates must be positive");
                break;
            case SweepVariable::Workers:
                if (v < 1.0 || v != std::floor(v))
                    throw std::invalid_argument("worker counts must be integers >= 1");
                break;
        }
    }
    if (!(fixed_fraction > 0.0 && fixed_fraction <= 1.0))
        throw std::invalid_argument("fixed fraction must be in (0, 1]");
}

namespace {

//! How the plan's workload string resolves.
enum class WorkloadKind { Preset, SpecFile, RecordFile };

WorkloadKind classify_workload(const std::string& name) {
    const auto presets = preset_names();
    if (std::find(presets.begin(), presets.end(), name) != presets.end())
        return WorkloadKind::Preset;
    if (!std::filesystem::exists(name))
        throw std::invalid_argument("workload '" + name +
                                    "' is neither a preset nor a file");
    // A spec file is key-value lines; a record file's first payload line
    // has two commas and no '='.
    std::ifstream in(name);
    std::string line;
    while (std::getline(in, line)) {
        if (is_skippable_line(line)) continue;
        return line.find('=') != std::string::npos ? WorkloadKind::SpecFile
                                                   : WorkloadKind::RecordFile;
    }
    return WorkloadKind::RecordFile;
}

struct TrialStream {
    StratumTable table;
    std::vector<Record> records;
};

TrialStream materialize(const ExperimentPlan& plan, WorkloadKind kind,
                        double sweep_value, std::uint64_t seed) {
    TrialStream out;
    if (kind == WorkloadKind::RecordFile) {
        ReplaySource source(plan.workload, 0.0, out.table);
        while (auto r = source.next()) out.records.push_back(*r);
        return out;
    }

    WorkloadSpec spec = kind == WorkloadKind::Preset ? preset(plan.workload)
                                                     : load_workload_file(plan.workload);
    spec.seed = seed;
    if (plan.duration_s > 0.0) spec.duration_s = plan.duration_s;
    if (plan.sweep == SweepVariable::Rate) {
        const double scale = sweep_value / spec.total_rate();
        for (auto& s : spec.strata) s.arrival_rate *= scale;
    }
    WorkloadSource source(spec, out.table);
    while (auto r = source.next()) out.records.push_back(*r);
    return out;
}

ExecutionConfig cell_config(const ExperimentPlan& plan, SamplerKind sampler,
                            double sweep_value, std::uint64_t seed,
                            const TrialStream& stream) {
    ExecutionConfig cfg;
    cfg.sampler = sampler;
    cfg.model = plan.model;
    // The batch-only samplers always run batched, whatever the plan model.
    if (sampler == SamplerKind::Srs || sampler == SamplerKind::Sts)
        cfg.model = ExecutionModel::Batched;
    cfg.window = plan.window;
    cfg.query = plan.query;
    cfg.seed = seed;

    double fraction = plan.fixed_fraction;
    switch (plan.sweep) {
        case SweepVariable::Fraction:
            fraction = sweep_value;
            break;
        case SweepVariable::Window: {
            const auto w = static_cast<std::int64_t>(sweep_value);
            cfg.window = WindowSpec{w, w / 2, w / 2};
            break;
        }
        case SweepVariable::Rate:
            break;
        case SweepVariable::Workers:
            cfg.workers = static_cast<std::uint32_t>(sweep_value);
            if (sampler != SamplerKind::Oasrs) cfg.workers = 1;
            break;
    }
    cfg.budget = QueryBudget::fraction(fraction);

    // Bootstrap the first interval's fractional budget from the observed
    // stream density.
    if (!stream.records.empty()) {
        const std::int64_t span =
            stream.records.back().timestamp_ms - stream.records.front().timestamp_ms + 1;
        const double per_interval = static_cast<double>(stream.records.size()) *
                                    static_cast<double>(cfg.window.interval_ms) /
                                    static_cast<double>(span);
        cfg.bootstrap_items =
            std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(per_interval)));
    }
    return cfg;
}

//! Exact per-window sums of the reference (unsampled) run, keyed by
//! window start.
std::map<std::int64_t, double> reference_sums(const RunStats& none_run) {
    std::map<std::int64_t, double> out;
    for (const auto& w : none_run.windows)
        out[w.window_start] = w.report.point_estimate;
    return out;
}

CellResult run_cell(const ExperimentPlan& plan, WorkloadKind kind, SamplerKind sampler,
                    double sweep_value, std::uint32_t trial) {
    CellResult cell;
    cell.sampler = sampler;
    cell.sweep_value = sweep_value;
    cell.trial = trial;
    try {
        const std::uint64_t seed = plan.seed_base + trial;
        TrialStream stream = materialize(plan, kind, sweep_value, seed);

        // Reference pass for the loss metric: the identical records, no
        // sampling, sum query.
        ExecutionConfig ref_cfg = cell_config(plan, SamplerKind::None, sweep_value,
                                              seed, stream);
        ref_cfg.query = QuerySpec{QuerySpec::Aggregate::Sum, std::nullopt, false};
        const RunStats ref = run_stream(std::span<const Record>(stream.records), ref_cfg);
        const auto exact = reference_sums(ref);

        ExecutionConfig cfg = cell_config(plan, sampler, sweep_value, seed, stream);
        const auto t0 = std::chrono::steady_clock::now();
        RunStats run = run_stream(std::span<const Record>(stream.records), cfg);
        const auto t1 = std::chrono::steady_clock::now();

        cell.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        cell.items = run.items_total;
        cell.throughput = cell.wall_seconds > 0.0
                              ? static_cast<double>(run.items_total) / cell.wall_seconds
                              : 0.0;
        cell.peak_retained = run.peak_retained;

        double loss_sum = 0.0;
        std::size_t loss_n = 0;
        for (auto& w : run.windows) {
            auto it = exact.find(w.window_start);
            if (it == exact.end()) continue;
            w.exact_result = it->second;
            if (it->second != 0.0 && !w.report.undefined) {
                w.accuracy_loss = accuracy_loss(w.report.point_estimate, it->second);
                loss_sum += *w.accuracy_loss;
                ++loss_n;
            }
        }
        if (loss_n > 0) cell.mean_loss = loss_sum / static_cast<double>(loss_n);
        cell.windows = std::move(run.windows);
    } catch (const std::exception& e) {
        cell.failed = true;
        cell.error = e.what();
    }
    return cell;
}

double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean_of(xs);
    double ssq = 0.0;
    for (double x : xs) ssq += (x - m) * (x - m);
    return std::sqrt(ssq / static_cast<double>(xs.size() - 1));
}

std::string csv_num(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

} // namespace

ExperimentResult run_experiment(const ExperimentPlan& plan) {
    plan.validate();
    const WorkloadKind kind = classify_workload(plan.workload);
    if (kind == WorkloadKind::RecordFile && plan.sweep == SweepVariable::Rate)
        throw std::invalid_argument("rate sweeps need a generated workload");

    ExperimentResult result;
    result.plan = plan;

    for (double value : plan.values) {
        for (SamplerKind sampler : plan.samplers) {
            if (plan.parallel_trials) {
                std::vector<std::future<CellResult>> futures;
                futures.reserve(plan.trials);
                for (std::uint32_t t = 0; t < plan.trials; ++t)
                    futures.push_back(std::async(std::launch::async, run_cell, plan,
                                                 kind, sampler, value, t));
                for (auto& f : futures) result.cells.push_back(f.get());
            } else {
                for (std::uint32_t t = 0; t < plan.trials; ++t)
                    result.cells.push_back(run_cell(plan, kind, sampler, value, t));
            }
        }
    }
    return result;
}

std::vector<SummaryRow> ExperimentResult::summary() const {
    std::vector<SummaryRow> rows;
    for (double value : plan.values) {
        for (SamplerKind sampler : plan.samplers) {
            std::vector<double> throughputs, losses;
            std::size_t peak = 0;
            std::uint32_t ok = 0;
            for (const auto& c : cells) {
                if (c.sampler != sampler || c.sweep_value != value || c.failed) continue;
                ++ok;
                throughputs.push_back(c.throughput);
                if (c.mean_loss) losses.push_back(*c.mean_loss);
                peak = std::max(peak, c.peak_retained);
            }
            if (ok == 0) continue;
            rows.push_back(SummaryRow{sampler, value, ok, mean_of(throughputs),
                                      sd_of(throughputs), mean_of(losses),
                                      sd_of(losses), peak});
        }
    }
    return rows;
}

void emit_report(const ExperimentResult& result, ReportFormat format,
                 const std::string& out_path) {
    const auto rows = result.summary();

    // Echo to stdout first so results survive an unwritable destination.
    std::cout << kSummaryCsvHeader << '\n';
    for (const auto& r : rows) {
        std::cout << sampler_name(r.sampler) << ',' << sweep_name(result.plan.sweep)
                  << ',' << r.sweep_value << ',' << r.trials << ','
                  << csv_num(r.throughput_mean) << ',' << csv_num(r.throughput_sd)
                  << ',' << csv_num(r.loss_mean) << ',' << csv_num(r.loss_sd) << ','
                  << r.peak_retained << '\n';
    }
    for (const auto& c : result.cells) {
        if (c.failed)
            std::cout << "# failed cell: " << sampler_name(c.sampler) << " value "
                      << c.sweep_value << " trial " << c.trial << ": " << c.error
                      << '\n';
    }

    if (out_path.empty()) return;

    const bool csv = format == ReportFormat::Csv;
    const std::string summary_path = out_path + (csv ? "_summary.csv" : "_summary.json");
    const std::string windows_path = out_path + (csv ? "_windows.csv" : "_windows.jsonl");
    std::ofstream summary_out(summary_path);
    std::ofstream windows_out(windows_path);
    if (!summary_out || !windows_out)
        throw std::runtime_error("cannot write report to prefix '" + out_path + "'");

    if (csv) {
        summary_out << kSummaryCsvHeader << '\n';
        for (const auto& r : rows) {
            summary_out << sampler_name(r.sampler) << ','
                        << sweep_name(result.plan.sweep) << ',' << r.sweep_value << ','
                        << r.trials << ',' << csv_num(r.throughput_mean) << ','
                        << csv_num(r.throughput_sd) << ',' << csv_num(r.loss_mean)
                        << ',' << csv_num(r.loss_sd) << ',' << r.peak_retained << '\n';
        }
        windows_out << kWindowCsvHeader << '\n';
        for (const auto& c : result.cells) {
            for (const auto& w : c.windows) {
                windows_out << sampler_name(c.sampler) << ','
                            << sweep_name(result.plan.sweep) << ',' << c.sweep_value
                            << ',' << c.trial << ',' << w.window_start << ','
                            << w.window_end << ','
                            << csv_num(w.report.point_estimate) << ','
                            << csv_num(w.report.variance) << ','
                            << csv_num(w.report.ci.low) << ','
                            << csv_num(w.report.ci.high) << ','
                            << (w.exact_result ? csv_num(*w.exact_result) : "") << ','
                            << (w.accuracy_loss ? csv_num(*w.accuracy_loss) : "") << ','
                            << w.items_processed << ',' << w.items_sampled << ','
                            << csv_num(w.processing_ms) << '\n';
            }
        }
    } else {
        using nlohmann::json;
        json j;
        j["workload"] = result.plan.workload;
        j["sweep"] = sweep_name(result.plan.sweep);
        j["trials"] = result.plan.trials;
        j["seed_base"] = result.plan.seed_base;
        json arr = json::array();
        for (const auto& r : rows) {
            arr.push_back({{"sampler", sampler_name(r.sampler)},
                           {"sweep_value", r.sweep_value},
                           {"trials", r.trials},
                           {"throughput_mean", r.throughput_mean},
                           {"throughput_sd", r.throughput_sd},
                           {"loss_mean", r.loss_mean},
                           {"loss_sd", r.loss_sd},
                           {"peak_retained", r.peak_retained}});
        }
        j["rows"] = std::move(arr);
        summary_out << j.dump(2) << '\n';

        for (const auto& c : result.cells) {
            for (const auto& w : c.windows) {
                json line;
                line["sampler"] = sampler_name(c.sampler);
                line["sweep_value"] = c.sweep_value;
                line["trial"] = c.trial;
                line["window"] = json::parse(w.to_json());
                windows_out << line.dump() << '\n';
            }
        }
    }
    if (!summary_out || !windows_out)
        throw std::runtime_error("error while writing report files");
}

} // namespace apstream
