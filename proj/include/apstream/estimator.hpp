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
#ifndef APSTREAM_ESTIMATOR_HPP_
#define APSTREAM_ESTIMATOR_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apstream/types.hpp"
#include "apstream/weighted_sample.hpp"

namespace apstream {

class StratumTable;

//! Confidence level of a reported interval. The normal-rule multipliers
//! for one, two and three standard deviations cover 68%, 95% and 99.7%.
enum class ConfidenceLevel { P68, P95, P997 };

//! How the interval multiplier is derived: the fixed 1/2/3 sigma rule, or
//! a Student-t critical value using the sample's degrees of freedom.
enum class CriticalValueMode { Normal, StudentT };

double confidence_value(ConfidenceLevel level);
const char* confidence_name(ConfidenceLevel level);

struct ConfidenceInterval {
    double low = 0.0;
    double high = 0.0;
};

struct BucketEstimate {
    double weighted_count = 0.0;
    double variance = 0.0;
    double std_dev = 0.0;
    ConfidenceInterval ci;
};

struct HistogramEstimate {
    double bucket_width = 0.0;
    //! Keyed by bucket index; bucket b spans [b*width, (b+1)*width).
    std::map<std::int64_t, BucketEstimate> buckets;
};

struct StratumReport {
    StratumId stratum = 0;
    double point_estimate = 0.0;
    double variance = 0.0;
    ConfidenceInterval ci;
    std::uint64_t items = 0;
    std::size_t sampled = 0;
};

/*!
 * An approximate query result with its error bound: the point estimate,
 * the estimated variance and standard deviation of the estimator, and a
 * confidence interval symmetric about the point.
 */
struct EstimateReport {
    QuerySpec query;
    double point_estimate = 0.0;
    double variance = 0.0;
    double std_dev = 0.0;
    ConfidenceInterval ci;
    ConfidenceLevel level = ConfidenceLevel::P95;
    CriticalValueMode mode = CriticalValueMode::Normal;
    //! Set when Student-t was requested but the degrees of freedom were
    //! below 1 and the normal rule was used instead.
    bool t_fallback = false;
    //! Strata sampled down to a single item: their spread is unknowable,
    //! enters the variance as 0, and the bound is understated.
    std::size_t degenerate_strata = 0;
    //! Mean is undefined on an empty sample; the estimate is NaN and this
    //! flag is set instead of an error so empty windows stay reportable.
    bool undefined = false;
    std::vector<StratumReport> per_stratum;
    std::optional<HistogramEstimate> histogram;

    //! One-line JSON object; stratum ids become names when a table is given.
    std::string to_json(const StratumTable* names = nullptr) const;
};

//! Sum of all items each entry's sample stands for: per entry, the sample
//! sum scaled by the entry weight; entries add up.
double estimate_sum(const SampleView& sample);
double estimate_sum(const WeightedSample& sample);

//! Mean over all received items: the estimated sum divided by the total
//! arrival count. Throws std::domain_error when no items arrived.
double estimate_mean(const SampleView& sample);
double estimate_mean(const WeightedSample& sample);

//! Unbiased sample variance with the n-1 divisor; 0 for fewer than two
//! items (callers flag such entries as degenerate).
double sample_stddev_sq(std::span<const double> items);

/*!
 * Estimated variance of the sum estimator. Each entry is an independent
 * without-replacement sample of its stratum, so the per-entry variance is
 *     counter * (counter - selected) * s^2 / selected
 * with s^2 the sample variance of the entry's values; the finite
 * population factor vanishes when a stratum is fully sampled. Entries add
 * up. `degenerate` (optional) receives the count of entries with one
 * selected item but more arrivals, whose s^2 is taken as 0.
 */
double variance_of_sum(const SampleView& sample, std::size_t* degenerate = nullptr);
double variance_of_sum(const WeightedSample& sample, std::size_t* degenerate = nullptr);

/*!
 * Estimated variance of the mean estimator: with stratum share
 * w_i = counter_i / total, the entries contribute
 *     w_i^2 * (s_i^2 / selected_i) * (counter_i - selected_i) / counter_i.
 * Throws std::domain_error when no items arrived.
 */
double variance_of_mean(const SampleView& sample, std::size_t* degenerate = nullptr);

/*!
 * Builds the error-bound report around a point estimate. Normal mode uses
 * the 1/2/3 sigma multipliers; Student-t uses the critical value at the
 * requested confidence with the given degrees of freedom and falls back
 * to the normal rule (flagged) when dof < 1.
 */
EstimateReport error_bound(double point, double variance, ConfidenceLevel level,
                           CriticalValueMode mode, std::int64_t dof);

//! Two-sided critical multiplier for the given level. Normal mode ignores
//! dof. `fell_back` (optional) reports a t → normal fallback.
double critical_value(ConfidenceLevel level, CriticalValueMode mode,
                      std::int64_t dof, bool* fell_back = nullptr);

//! Weighted per-bucket counts with per-bucket error bounds: each sampled
//! item adds its entry weight to the bucket holding its value, and the
//! bucket's variance is the sum-estimator variance of the items'
//! membership indicators.
HistogramEstimate estimate_histogram(const SampleView& sample, double bucket_width,
                                     ConfidenceLevel level = ConfidenceLevel::P95,
                                     CriticalValueMode mode = CriticalValueMode::Normal);

//! Degrees of freedom of a stratified sample: selected items minus the
//! number of independent entries.
std::int64_t degrees_of_freedom(const SampleView& sample);

//! Runs the configured aggregate over the sample and assembles the full
//! report, including per-stratum sub-reports when requested.
EstimateReport run_query(const SampleView& sample, const QuerySpec& query,
                         ConfidenceLevel level = ConfidenceLevel::P95,
                         CriticalValueMode mode = CriticalValueMode::Normal);

} // namespace apstream

#endif // APSTREAM_ESTIMATOR_HPP_
