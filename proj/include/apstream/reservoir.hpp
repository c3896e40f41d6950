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
#ifndef APSTREAM_RESERVOIR_HPP_
#define APSTREAM_RESERVOIR_HPP_

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace apstream {

/*!
 * One-pass uniform sampler with a fixed-capacity buffer (Vitter's
 * Algorithm R). The first `capacity` offered items fill the reservoir;
 * afterwards the i-th offered item is accepted with probability
 * capacity/i and replaces a uniformly random slot. Every offered item
 * therefore ends up in the reservoir with equal probability, without
 * knowing the stream length in advance.
 *
 * The capacity may be lowered while items are buffered; the buffer is
 * only trimmed by an explicit `shrink_to_capacity`, keeping offers O(1).
 */
template <typename T>
class ReservoirSampler {
public:
    explicit ReservoirSampler(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0)
            throw std::invalid_argument("reservoir capacity must be positive");
        items_.reserve(capacity);
    }

    //! Offer one item; may store it, depending on the draw.
    template <typename Rng>
    void offer(const T& item, Rng& rng) {
        ++seen_;
        if (items_.size() < capacity_) {
            items_.push_back(item);
            return;
        }
        // Accept with probability capacity/seen: a uniform slot draw over
        // [0, seen) lands below capacity exactly that often.
        const std::uint64_t slot = rng.bounded(seen_);
        if (slot < capacity_)
            items_[static_cast<std::size_t>(slot)] = item;
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return items_.size(); }
    std::uint64_t seen() const { return seen_; }
    const std::vector<T>& items() const { return items_; }

    //! Lower (or restore) the capacity without touching buffered items.
    void set_capacity(std::size_t capacity) {
        if (capacity == 0)
            throw std::invalid_argument("reservoir capacity must be positive");
        capacity_ = capacity;
    }

    //! Drop a uniformly random subset of buffered items so that at most
    //! `capacity` remain. Used after a capacity reduction.
    template <typename Rng>
    void shrink_to_capacity(Rng& rng) {
        if (items_.size() <= capacity_) return;
        // Partial Fisher-Yates: the first `capacity_` slots become a
        // uniform subset of the buffer.
        for (std::size_t i = 0; i < capacity_; ++i) {
            const std::size_t j =
                i + static_cast<std::size_t>(rng.bounded(items_.size() - i));
            std::swap(items_[i], items_[j]);
        }
        items_.resize(capacity_);
    }

    //! Move the buffered items out, leaving the reservoir empty with
    //! seen = 0 and the capacity unchanged.
    std::vector<T> take() {
        std::vector<T> out = std::move(items_);
        items_ = {};
        items_.reserve(capacity_);
        seen_ = 0;
        return out;
    }

    //! Empty the reservoir and reset the offer count.
    void reset() {
        items_.clear();
        seen_ = 0;
    }

private:
    std::size_t capacity_;
    std::uint64_t seen_ = 0;
    std::vector<T> items_;
};

// TODO: switch the steady-state replacement path to Algorithm L gap
// skipping; at small sampling fractions most offers draw and reject.

} // namespace apstream

#endif // APSTREAM_RESERVOIR_HPP_
