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
#ifndef APSTREAM_RECORD_HPP_
#define APSTREAM_RECORD_HPP_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace apstream {

//! Dense stratum identifier. Stratum names are interned once at ingestion
//! so per-item stratum lookup downstream is a plain array index.
using StratumId = std::uint32_t;

//! Pseudo-stratum id used when a sampler treats the whole stream as one
//! stratum (e.g. simple random sampling over a batch).
inline constexpr StratumId kWholeStreamStratum = 0xffffffffu;

//! One timestamped data item: event time in ms, interned stratum, value.
struct Record {
    std::int64_t timestamp_ms = 0;
    StratumId stratum = 0;
    double value = 0.0;

    friend bool operator==(const Record&, const Record&) = default;
};

//! Error raised when an ingestion line cannot be decoded. Carries the
//! offending field and the byte offset where decoding stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string field, std::size_t position, const std::string& what)
        : std::runtime_error("parse error in field '" + field + "' at offset "
                             + std::to_string(position) + ": " + what),
          field_(std::move(field)), position_(position) {}

    const std::string& field() const { return field_; }
    std::size_t position() const { return position_; }

private:
    std::string field_;
    std::size_t position_;
};

/*!
 * Append-only bidirectional map between stratum names and dense ids.
 * Ids are assigned in first-seen order starting at 0.
 */
class StratumTable {
public:
    //! Returns the id for `name`, interning it if unseen.
    //! Names must be non-empty and free of ',' and line breaks.
    StratumId intern(std::string_view name);

    //! Id for an already interned name, or nullopt.
    std::optional<StratumId> find(std::string_view name) const;

    //! Name for an id; kWholeStreamStratum maps to "__all__".
    const std::string& name(StratumId id) const;

    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, StratumId> ids_;
};

/*!
 * Decoder for the line-oriented ingestion format
 *
 *     timestamp,stratum,value
 *
 * Timestamps are non-negative integer milliseconds, values finite doubles.
 * '#'-prefixed lines and blank lines are skipped by callers via
 * `is_skippable_line`. Interns stratum names into the given table.
 */
class RecordParser {
public:
    struct Options {
        //! Reject lines whose timestamp is below the previous line's.
        bool enforce_monotone = false;
    };

    explicit RecordParser(StratumTable& table, Options options = {})
        : table_(&table), options_(options) {}

    //! Decodes one line; throws ParseError on malformed input and on
    //! invariant violations (non-finite value, negative timestamp).
    Record parse(std::string_view line);

private:
    StratumTable* table_;
    Options options_;
    std::int64_t last_timestamp_ = -1;
};

//! True for comment ('#') and blank lines.
bool is_skippable_line(std::string_view line);

//! Encodes a record in the ingestion format. Values use the shortest
//! representation that round-trips exactly, so parse(serialize(r)) == r.
std::string serialize_record(const Record& record, const StratumTable& table);

} // namespace apstream

#endif // APSTREAM_RECORD_HPP_
