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
#include "apstream/types.hpp"

#include <cmath>
#include <stdexcept>

namespace apstream {

void WindowSpec::validate() const {
    if (window_ms <= 0 || slide_ms <= 0 || interval_ms <= 0)
        throw std::invalid_argument("window, slide and interval must be positive");
    if (window_ms % slide_ms != 0)
        throw std::invalid_argument("slide must divide the window length");
    if (slide_ms % interval_ms != 0)
        throw std::invalid_argument("interval must divide the slide");
}

void QueryBudget::validate() const {
    if (!std::isfinite(amount))
        throw std::invalid_argument("budget amount must be finite");
    if (kind == Kind::SamplingFraction) {
        if (!(amount > 0.0 && amount <= 1.0))
            throw std::invalid_argument("sampling fraction must be in (0, 1]");
    } else {
        if (amount < 1.0 || amount != std::floor(amount))
            throw std::invalid_argument("absolute sample size must be an integer >= 1");
    }
}

void QuerySpec::validate() const {
    const bool histogram = aggregate == Aggregate::Histogram;
    if (histogram != bucket_width.has_value())
        throw std::invalid_argument(
            "bucket width must be given exactly for histogram queries");
    if (histogram && !(*bucket_width > 0.0))
        throw std::invalid_argument("bucket width must be positive");
}

const char* aggregate_name(QuerySpec::Aggregate a) {
    switch (a) {
        case QuerySpec::Aggregate::Sum: return "sum";
        case QuerySpec::Aggregate::Mean: return "mean";
        case QuerySpec::Aggregate::Count: return "count";
        case QuerySpec::Aggregate::Histogram: return "histogram";
    }
    return "?";
}

} // namespace apstream
