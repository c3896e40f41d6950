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
#include "apstream/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "apstream/record.hpp"

namespace apstream {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool entry_degenerate(const SampleEntry& e) {
    return e.values.size() == 1 && e.counter > 1;
}

//! Variance contribution of one entry under a value transform. The
//! finite-population factor (counter - selected) zeroes out fully sampled
//! entries before any moment is touched.
template <typename Transform>
double entry_variance_of_sum(const SampleEntry& e, Transform&& f) {
    const double c = static_cast<double>(e.counter);
    const double y = static_cast<double>(e.values.size());
    if (e.values.size() >= e.counter || e.values.size() < 2) return 0.0;

    double mean = 0.0;
    for (double v : e.values) mean += f(v);
    mean /= y;
    double ssq = 0.0;
    for (double v : e.values) {
        const double d = f(v) - mean;
        ssq += d * d;
    }
    const double s2 = ssq / (y - 1.0);
    return c * (c - y) * s2 / y;
}

} // namespace

double confidence_value(ConfidenceLevel level) {
    switch (level) {
        case ConfidenceLevel::P68: return 0.68;
        case ConfidenceLevel::P95: return 0.95;
        case ConfidenceLevel::P997: return 0.997;
    }
    return 0.95;
}

const char* confidence_name(ConfidenceLevel level) {
    switch (level) {
        case ConfidenceLevel::P68: return "68%";
        case ConfidenceLevel::P95: return "95%";
        case ConfidenceLevel::P997: return "99.7%";
    }
    return "?";
}

double estimate_sum(const SampleView& sample) {
    double total = 0.0;
    for (const SampleEntry* e : sample.entries) {
        double s = 0.0;
        for (double v : e->values) s += v;
        total += s * e->weight;
    }
    return total;
}

double estimate_sum(const WeightedSample& sample) {
    return estimate_sum(SampleView(sample));
}

double estimate_mean(const SampleView& sample) {
    const std::uint64_t received = sample.total_items();
    if (received == 0)
        throw std::domain_error("mean undefined: no items received");
    return estimate_sum(sample) / static_cast<double>(received);
}

double estimate_mean(const WeightedSample& sample) {
    return estimate_mean(SampleView(sample));
}

double sample_stddev_sq(std::span<const double> items) {
    if (items.size() < 2) return 0.0;
    double mean = 0.0;
    for (double v : items) mean += v;
    mean /= static_cast<double>(items.size());
    double ssq = 0.0;
    for (double v : items) {
        const double d = v - mean;
        ssq += d * d;
    }
    return ssq / (static_cast<double>(items.size()) - 1.0);
}

double variance_of_sum(const SampleView& sample, std::size_t* degenerate) {
    double total = 0.0;
    std::size_t flagged = 0;
    for (const SampleEntry* e : sample.entries) {
        if (entry_degenerate(*e)) ++flagged;
        total += entry_variance_of_sum(*e, [](double v) { return v; });
    }
    if (degenerate) *degenerate = flagged;
    return total;
}

double variance_of_sum(const WeightedSample& sample, std::size_t* degenerate) {
    return variance_of_sum(SampleView(sample), degenerate);
}

double variance_of_mean(const SampleView& sample, std::size_t* degenerate) {
    const std::uint64_t received = sample.total_items();
    if (received == 0)
        throw std::domain_error("mean variance undefined: no items received");
    const double total = static_cast<double>(received);

    double out = 0.0;
    std::size_t flagged = 0;
    for (const SampleEntry* e : sample.entries) {
        if (entry_degenerate(*e)) ++flagged;
        const double c = static_cast<double>(e->counter);
        const double y = static_cast<double>(e->values.size());
        if (e->values.size() >= e->counter || e->values.size() < 2) continue;
        const double share = c / total;
        const double s2 = sample_stddev_sq(e->values);
        out += share * share * (s2 / y) * ((c - y) / c);
    }
    if (degenerate) *degenerate = flagged;
    return out;
}

double critical_value(ConfidenceLevel level, CriticalValueMode mode,
                      std::int64_t dof, bool* fell_back) {
    if (fell_back) *fell_back = false;
    if (mode == CriticalValueMode::StudentT) {
        if (dof >= 1) {
            const double alpha = 1.0 - confidence_value(level);
            boost::math::students_t_distribution<double> dist(static_cast<double>(dof));
            return boost::math::quantile(dist, 1.0 - alpha / 2.0);
        }
        if (fell_back) *fell_back = true;
    }
    switch (level) {
        case ConfidenceLevel::P68: return 1.0;
        case ConfidenceLevel::P95: return 2.0;
        case ConfidenceLevel::P997: return 3.0;
    }
    return 2.0;
}

EstimateReport error_bound(double point, double variance, ConfidenceLevel level,
                           CriticalValueMode mode, std::int64_t dof) {
    if (variance < 0.0)
        throw std::invalid_argument("variance must be non-negative");
    EstimateReport report;
    report.point_estimate = point;
    report.variance = variance;
    report.std_dev = std::sqrt(variance);
    report.level = level;
    report.mode = mode;
    const double mult = critical_value(level, mode, dof, &report.t_fallback);
    if (report.t_fallback) report.mode = CriticalValueMode::Normal;
    const double half = mult * report.std_dev;
    report.ci = {point - half, point + half};
    return report;
}

std::int64_t degrees_of_freedom(const SampleView& sample) {
    std::int64_t selected = 0;
    std::int64_t entries = 0;
    for (const SampleEntry* e : sample.entries) {
        selected += static_cast<std::int64_t>(e->values.size());
        ++entries;
    }
    return selected - entries;
}

HistogramEstimate estimate_histogram(const SampleView& sample, double bucket_width,
                                     ConfidenceLevel level, CriticalValueMode mode) {
    if (!(bucket_width > 0.0))
        throw std::invalid_argument("bucket width must be positive");

    HistogramEstimate hist;
    hist.bucket_width = bucket_width;

    std::map<std::int64_t, double> counts;
    for (const SampleEntry* e : sample.entries) {
        for (double v : e->values) {
            const auto bucket = static_cast<std::int64_t>(std::floor(v / bucket_width));
            counts[bucket] += e->weight;
        }
    }

    const std::int64_t dof = degrees_of_freedom(sample);
    for (const auto& [bucket, weighted] : counts) {
        // A bucket count is the estimated sum of membership indicators.
        double variance = 0.0;
        for (const SampleEntry* e : sample.entries) {
            variance += entry_variance_of_sum(*e, [&](double v) {
                return std::floor(v / bucket_width) == static_cast<double>(bucket) ? 1.0
                                                                                   : 0.0;
            });
        }
        BucketEstimate b;
        b.weighted_count = weighted;
        b.variance = variance;
        b.std_dev = std::sqrt(variance);
        const double mult = critical_value(level, mode, dof);
        b.ci = {weighted - mult * b.std_dev, weighted + mult * b.std_dev};
        hist.buckets.emplace(bucket, b);
    }
    return hist;
}

namespace {

//! Per-stratum sub-reports: entries of the same stratum (several
//! intervals or workers) group into one sub-sample each.
std::vector<StratumReport> per_stratum_reports(const SampleView& sample,
                                               const QuerySpec& query,
                                               ConfidenceLevel level,
                                               CriticalValueMode mode) {
    std::unordered_map<StratumId, SampleView> groups;
    std::vector<StratumId> order;
    for (const SampleEntry* e : sample.entries) {
        auto [it, inserted] = groups.try_emplace(e->stratum);
        if (inserted) order.push_back(e->stratum);
        it->second.entries.push_back(e);
    }

    std::vector<StratumReport> out;
    out.reserve(order.size());
    for (StratumId id : order) {
        const SampleView& view = groups[id];
        StratumReport r;
        r.stratum = id;
        r.items = view.total_items();
        r.sampled = view.sampled_items();
        double variance = 0.0;
        switch (query.aggregate) {
            case QuerySpec::Aggregate::Sum:
            case QuerySpec::Aggregate::Histogram:
                r.point_estimate = estimate_sum(view);
                variance = variance_of_sum(view);
                break;
            case QuerySpec::Aggregate::Mean:
                r.point_estimate = estimate_mean(view);
                variance = variance_of_mean(view);
                break;
            case QuerySpec::Aggregate::Count:
                r.point_estimate = static_cast<double>(r.items);
                variance = 0.0;
                break;
        }
        r.variance = variance;
        const double mult = critical_value(level, mode, degrees_of_freedom(view));
        const double half = mult * std::sqrt(variance);
        r.ci = {r.point_estimate - half, r.point_estimate + half};
        out.push_back(r);
    }
    return out;
}

} // namespace

EstimateReport run_query(const SampleView& sample, const QuerySpec& query,
                         ConfidenceLevel level, CriticalValueMode mode) {
    query.validate();
    const std::int64_t dof = degrees_of_freedom(sample);

    double point = 0.0;
    double variance = 0.0;
    std::size_t degenerate = 0;
    bool undefined = false;

    switch (query.aggregate) {
        case QuerySpec::Aggregate::Sum:
            point = estimate_sum(sample);
            variance = variance_of_sum(sample, &degenerate);
            break;
        case QuerySpec::Aggregate::Mean:
            if (sample.total_items() == 0) {
                point = kNaN;
                undefined = true;
            } else {
                point = estimate_mean(sample);
                variance = variance_of_mean(sample, &degenerate);
            }
            break;
        case QuerySpec::Aggregate::Count:
            // The weight of an oversubscribed entry is counter/selected,
            // so summing weight over selected items recovers the counter;
            // the count estimate is exact with zero variance.
            for (const SampleEntry* e : sample.entries)
                point += e->weight * static_cast<double>(e->values.size());
            variance = 0.0;
            break;
        case QuerySpec::Aggregate::Histogram:
            point = estimate_sum(sample);
            variance = variance_of_sum(sample, &degenerate);
            break;
    }

    EstimateReport report = error_bound(undefined ? 0.0 : point, variance, level,
                                        mode, dof);
    report.query = query;
    report.degenerate_strata = degenerate;
    if (undefined) {
        report.point_estimate = kNaN;
        report.ci = {kNaN, kNaN};
        report.undefined = true;
    }
    if (query.aggregate == QuerySpec::Aggregate::Histogram)
        report.histogram = estimate_histogram(sample, *query.bucket_width, level, mode);
    if (query.per_stratum && !undefined)
        report.per_stratum = per_stratum_reports(sample, query, level, mode);
    return report;
}

std::string EstimateReport::to_json(const StratumTable* names) const {
    using nlohmann::json;
    json j;
    j["query"] = aggregate_name(query.aggregate);
    j["estimate"] = undefined ? json(nullptr) : json(point_estimate);
    j["variance"] = variance;
    j["std_dev"] = std_dev;
    j["ci_low"] = undefined ? json(nullptr) : json(ci.low);
    j["ci_high"] = undefined ? json(nullptr) : json(ci.high);
    j["level"] = confidence_name(level);
    j["critical_mode"] = mode == CriticalValueMode::StudentT ? "student_t" : "normal";
    if (t_fallback) j["t_fallback"] = true;
    if (degenerate_strata > 0) j["degenerate_strata"] = degenerate_strata;
    if (!per_stratum.empty()) {
        json arr = json::array();
        for (const auto& r : per_stratum) {
            json s;
            if (names)
                s["stratum"] = names->name(r.stratum);
            else
                s["stratum"] = r.stratum;
            s["estimate"] = r.point_estimate;
            s["variance"] = r.variance;
            s["ci_low"] = r.ci.low;
            s["ci_high"] = r.ci.high;
            s["items"] = r.items;
            s["sampled"] = r.sampled;
            arr.push_back(std::move(s));
        }
        j["per_stratum"] = std::move(arr);
    }
    if (histogram) {
        json buckets = json::array();
        for (const auto& [idx, b] : histogram->buckets) {
            json e;
            e["bucket_start"] = static_cast<double>(idx) * histogram->bucket_width;
            e["count"] = b.weighted_count;
            e["variance"] = b.variance;
            e["ci_low"] = b.ci.low;
            e["ci_high"] = b.ci.high;
            buckets.push_back(std::move(e));
        }
        j["histogram"] = {{"bucket_width", histogram->bucket_width},
                          {"buckets", std::move(buckets)}};
    }
    return j.dump();
}

} // namespace apstream
