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
#include "apstream/record.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>

namespace apstream {

namespace {

const std::string kWholeStreamName = "__all__";

bool valid_stratum_name(std::string_view name) {
    if (name.empty()) return false;
    for (char c : name)
        if (c == ',' || c == '\n' || c == '\r') return false;
    return true;
}

} // namespace

StratumId StratumTable::intern(std::string_view name) {
    if (!valid_stratum_name(name))
        throw std::invalid_argument("invalid stratum name: '" + std::string(name) + "'");
    auto it = ids_.find(std::string(name));
    if (it != ids_.end()) return it->second;
    const auto id = static_cast<StratumId>(names_.size());
    names_.emplace_back(name);
    ids_.emplace(names_.back(), id);
    return id;
}

std::optional<StratumId> StratumTable::find(std::string_view name) const {
    auto it = ids_.find(std::string(name));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

const std::string& StratumTable::name(StratumId id) const {
    if (id == kWholeStreamStratum) return kWholeStreamName;
    if (id >= names_.size())
        throw std::out_of_range("unknown stratum id " + std::to_string(id));
    return names_[id];
}

bool is_skippable_line(std::string_view line) {
    for (char c : line) {
        if (c == ' ' || c == '\t') continue;
        return c == '#';
    }
    return true;
}

Record RecordParser::parse(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    const std::size_t comma1 = line.find(',');
    if (comma1 == std::string_view::npos)
        throw ParseError("timestamp", line.size(), "missing field separator");
    const std::size_t comma2 = line.find(',', comma1 + 1);
    if (comma2 == std::string_view::npos)
        throw ParseError("stratum", line.size(), "missing field separator");

    Record record;

    const std::string_view ts_text = line.substr(0, comma1);
    auto ts_result = std::from_chars(ts_text.data(), ts_text.data() + ts_text.size(),
                                     record.timestamp_ms);
    if (ts_result.ec != std::errc{} || ts_result.ptr != ts_text.data() + ts_text.size())
        throw ParseError("timestamp", 0, "not a base-10 integer");
    if (record.timestamp_ms < 0)
        throw ParseError("timestamp", 0, "must be non-negative");

    const std::string_view stratum_text = line.substr(comma1 + 1, comma2 - comma1 - 1);
    if (stratum_text.empty())
        throw ParseError("stratum", comma1 + 1, "empty stratum name");

    const std::string_view value_text = line.substr(comma2 + 1);
    auto value_result = std::from_chars(value_text.data(),
                                        value_text.data() + value_text.size(),
                                        record.value);
    if (value_result.ec != std::errc{} ||
        value_result.ptr != value_text.data() + value_text.size())
        throw ParseError("value", comma2 + 1, "not a decimal number");
    if (!std::isfinite(record.value))
        throw ParseError("value", comma2 + 1, "non-finite value rejected");

    if (options_.enforce_monotone && record.timestamp_ms < last_timestamp_)
        throw ParseError("timestamp", 0,
                         "timestamp regressed from " + std::to_string(last_timestamp_));
    last_timestamp_ = record.timestamp_ms;

    record.stratum = table_->intern(stratum_text);
    return record;
}

std::string serialize_record(const Record& record, const StratumTable& table) {
    std::array<char, 32> buf;
    std::string out;
    out.reserve(32);

    auto ts = std::to_chars(buf.data(), buf.data() + buf.size(), record.timestamp_ms);
    out.append(buf.data(), ts.ptr);
    out.push_back(',');
    out.append(table.name(record.stratum));
    out.push_back(',');
    // Shortest form that parses back to the same double.
    auto val = std::to_chars(buf.data(), buf.data() + buf.size(), record.value);
    out.append(buf.data(), val.ptr);
    return out;
}

} // namespace apstream
