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
#ifndef APSTREAM_TYPES_HPP_
#define APSTREAM_TYPES_HPP_

#include <cstdint>
#include <optional>

namespace apstream {

/*!
 * Sliding-window geometry, all in event-time milliseconds. The stream is
 * cut into tumbling intervals of `interval_ms`; windows of `window_ms`
 * advance by `slide_ms` and are composed from whole intervals, so the
 * slide must divide the window and the interval must divide the slide.
 */
struct WindowSpec {
    std::int64_t window_ms = 10'000;
    std::int64_t slide_ms = 5'000;
    std::int64_t interval_ms = 5'000;

    //! Throws std::invalid_argument when the divisibility or positivity
    //! constraints are violated.
    void validate() const;
};

//! User-facing sampling budget: either a fixed number of retained items
//! per interval or a fraction of the interval's item count.
struct QueryBudget {
    enum class Kind { AbsoluteSampleSize, SamplingFraction };

    Kind kind = Kind::SamplingFraction;
    double amount = 1.0;

    static QueryBudget absolute(std::uint64_t n) {
        return {Kind::AbsoluteSampleSize, static_cast<double>(n)};
    }
    static QueryBudget fraction(double f) {
        return {Kind::SamplingFraction, f};
    }

    void validate() const;
};

//! The aggregate to compute over each window.
struct QuerySpec {
    enum class Aggregate { Sum, Mean, Count, Histogram };

    Aggregate aggregate = Aggregate::Sum;
    //! Bucket width; present exactly when aggregate == Histogram.
    std::optional<double> bucket_width;
    //! Also report one sub-result per stratum.
    bool per_stratum = false;

    void validate() const;
};

const char* aggregate_name(QuerySpec::Aggregate a);

} // namespace apstream

#endif // APSTREAM_TYPES_HPP_
