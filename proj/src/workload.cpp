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
#include "apstream/workload.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace apstream {

std::string dist_to_string(const ValueDist& dist) {
    std::ostringstream os;
    if (const auto* g = std::get_if<GaussianDist>(&dist))
        os << "gaussian(" << g->mu << "," << g->sigma << ")";
    else if (const auto* p = std::get_if<PoissonDist>(&dist))
        os << "poisson(" << p->lambda << ")";
    else if (const auto* c = std::get_if<ConstantDist>(&dist))
        os << "constant(" << c->value << ")";
    return os.str();
}

ValueDist dist_from_string(const std::string& text) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw std::invalid_argument("malformed distribution '" + text +
                                    "' (expected name(args))");
    const std::string name = text.substr(0, open);
    const std::string args = text.substr(open + 1, close - open - 1);

    std::vector<double> nums;
    std::stringstream ss(args);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            nums.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw std::invalid_argument("bad numeric argument in '" + text + "'");
        }
    }

    if (name == "gaussian" && nums.size() == 2) return GaussianDist{nums[0], nums[1]};
    if (name == "poisson" && nums.size() == 1) return PoissonDist{nums[0]};
    if (name == "constant" && nums.size() == 1) return ConstantDist{nums[0]};
    throw std::invalid_argument("unknown distribution '" + text +
                                "' (expected gaussian(mu,sigma), poisson(lambda) or "
                                "constant(v))");
}

void StratumSpec::validate() const {
    if (name.empty())
        throw std::invalid_argument("stratum name must be non-empty");
    if (!(arrival_rate > 0.0))
        throw std::invalid_argument("arrival rate must be positive");
    if (jitter < 0.0 || jitter >= 1.0)
        throw std::invalid_argument("jitter must be in [0, 1)");
    if (share && !(*share > 0.0 && *share <= 1.0))
        throw std::invalid_argument("stratum share must be in (0, 1]");
    if (const auto* g = std::get_if<GaussianDist>(&dist)) {
        if (g->sigma < 0.0)
            throw std::invalid_argument("gaussian sigma must be non-negative");
    } else if (const auto* p = std::get_if<PoissonDist>(&dist)) {
        if (!(p->lambda > 0.0))
            throw std::invalid_argument("poisson lambda must be positive");
    }
}

void WorkloadSpec::validate() const {
    if (strata.empty())
        throw std::invalid_argument("workload needs at least one stratum");
    if (!(duration_s > 0.0))
        throw std::invalid_argument("duration must be positive");
    bool any_share = false, all_share = true;
    double share_sum = 0.0;
    for (const auto& s : strata) {
        s.validate();
        if (s.share) {
            any_share = true;
            share_sum += *s.share;
        } else {
            all_share = false;
        }
    }
    if (any_share) {
        if (!all_share)
            throw std::invalid_argument("either all strata carry shares or none");
        if (std::abs(share_sum - 1.0) > 1e-9)
            throw std::invalid_argument("stratum shares must sum to 1");
    }
}

double WorkloadSpec::total_rate() const {
    double r = 0.0;
    for (const auto& s : strata) r += s.arrival_rate;
    return r;
}

std::uint64_t WorkloadSpec::expected_items_per_interval(std::int64_t interval_ms) const {
    return static_cast<std::uint64_t>(
        std::ceil(total_rate() * static_cast<double>(interval_ms) / 1000.0));
}

// ---------------------------------------------------------------------------

struct WorkloadSource::StratumState {
    StratumId id;
    StratumSpec spec;
    Rng rng;
    std::normal_distribution<double> normal;
    std::poisson_distribution<long long> poisson;
    std::uint64_t emitted = 0;
    std::int64_t next_ts = 0;
    double spacing_ms;

    StratumState(StratumId id_, const StratumSpec& spec_, std::uint64_t seed)
        : id(id_), spec(spec_), rng(seed),
          normal(0.0, 1.0), poisson(1.0), spacing_ms(1000.0 / spec_.arrival_rate) {
        if (const auto* g = std::get_if<GaussianDist>(&spec.dist))
            normal = std::normal_distribution<double>(g->mu, g->sigma);
        else if (const auto* p = std::get_if<PoissonDist>(&spec.dist))
            poisson = std::poisson_distribution<long long>(p->lambda);
        advance_ts();
    }

    void advance_ts() {
        double t = static_cast<double>(emitted) * spacing_ms;
        if (spec.jitter > 0.0) t += rng.next_double() * spec.jitter * spacing_ms;
        next_ts = static_cast<std::int64_t>(std::floor(t));
    }

    double draw_value() {
        if (std::holds_alternative<GaussianDist>(spec.dist)) return normal(rng);
        if (std::holds_alternative<PoissonDist>(spec.dist))
            return static_cast<double>(poisson(rng));
        return std::get<ConstantDist>(spec.dist).value;
    }
};

WorkloadSource::WorkloadSource(WorkloadSpec spec, StratumTable& table)
    : spec_(std::move(spec)) {
    spec_.validate();
    horizon_ms_ = static_cast<std::int64_t>(std::llround(spec_.duration_s * 1000.0));
    states_.reserve(spec_.strata.size());
    for (std::size_t i = 0; i < spec_.strata.size(); ++i) {
        const StratumId id = table.intern(spec_.strata[i].name);
        // Values are independent per stratum: each stratum owns a
        // generator derived from (seed, stratum position).
        states_.push_back(std::make_unique<StratumState>(
            id, spec_.strata[i], mix64(spec_.seed + 0x517cc1b727220a95ULL * (i + 1))));
    }
}

Record WorkloadSource::emit(std::size_t idx) {
    StratumState& s = *states_[idx];
    Record r{s.next_ts, s.id, s.draw_value()};
    ++s.emitted;
    s.advance_ts();
    return r;
}

std::optional<Record> WorkloadSource::next() {
    if (spec_.interleaving == WorkloadSpec::Interleaving::RoundRobin) {
        // Strata take turns on a combined-rate clock.
        const double spacing = 1000.0 / spec_.total_rate();
        const auto ts = static_cast<std::int64_t>(
            std::floor(static_cast<double>(round_robin_pos_) * spacing));
        if (ts >= horizon_ms_) return std::nullopt;
        const std::size_t idx = round_robin_pos_ % states_.size();
        ++round_robin_pos_;
        Record r{ts, states_[idx]->id, states_[idx]->draw_value()};
        return r;
    }

    // Earliest next arrival wins; ties go to the lowest stratum position
    // so the merge is deterministic.
    std::size_t best = states_.size();
    for (std::size_t i = 0; i < states_.size(); ++i) {
        if (states_[i]->next_ts >= horizon_ms_) continue;
        if (best == states_.size() || states_[i]->next_ts < states_[best]->next_ts)
            best = i;
    }
    if (best == states_.size()) return std::nullopt;
    return emit(best);
}

WorkloadSource generate(const WorkloadSpec& spec, StratumTable& table) {
    return WorkloadSource(spec, table);
}

// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() {
    return {"gaussian3", "poisson3", "skew_gaussian", "skew_poisson"};
}

WorkloadSpec preset(const std::string& name) {
    WorkloadSpec spec;
    spec.duration_s = 60.0;
    spec.seed = 1;

    if (name == "gaussian3") {
        spec.strata = {
            {"A", GaussianDist{10.0, 5.0}, 2000.0, std::nullopt, 0.0},
            {"B", GaussianDist{1000.0, 50.0}, 2000.0, std::nullopt, 0.0},
            {"C", GaussianDist{10000.0, 500.0}, 2000.0, std::nullopt, 0.0},
        };
        return spec;
    }
    if (name == "poisson3") {
        spec.strata = {
            {"A", PoissonDist{10.0}, 2000.0, std::nullopt, 0.0},
            {"B", PoissonDist{1000.0}, 2000.0, std::nullopt, 0.0},
            {"C", PoissonDist{100000000.0}, 2000.0, std::nullopt, 0.0},
        };
        return spec;
    }
    if (name == "skew_gaussian") {
        // One sub-stream dominates the arrivals; the rare one carries the
        // large values.
        spec.strata = {
            {"A", GaussianDist{100.0, 10.0}, 8000.0, 0.80, 0.0},
            {"B", GaussianDist{1000.0, 100.0}, 1900.0, 0.19, 0.0},
            {"C", GaussianDist{10000.0, 1000.0}, 100.0, 0.01, 0.0},
        };
        return spec;
    }
    if (name == "skew_poisson") {
        spec.strata = {
            {"A", PoissonDist{10.0}, 8000.0, 0.80, 0.0},
            {"B", PoissonDist{1000.0}, 1999.0, 0.1999, 0.0},
            {"C", PoissonDist{100000000.0}, 1.0, 0.0001, 0.0},
        };
        return spec;
    }

    std::string known;
    for (const auto& n : preset_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown preset '" + name + "' (available: " + known +
                                ")");
}

// ---------------------------------------------------------------------------

ReplaySource::ReplaySource(const std::string& path, double speed, StratumTable& table)
    : in_(path), path_(path), speed_(speed), parser_(table) {
    if (!in_)
        throw std::runtime_error("cannot open record file: " + path);
    if (speed < 0.0)
        throw std::invalid_argument("replay speed must be >= 0");
}

std::optional<Record> ReplaySource::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (is_skippable_line(line)) continue;
        Record r;
        try {
            r = parser_.parse(line);
        } catch (const ParseError& e) {
            throw ParseError(e.field(), e.position(),
                             path_ + ":" + std::to_string(line_no_) + ": " + e.what());
        }
        if (speed_ > 0.0)
            r.timestamp_ms = static_cast<std::int64_t>(
                std::llround(static_cast<double>(r.timestamp_ms) / speed_));
        return r;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

} // namespace

WorkloadSpec load_workload_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open workload file: " + path);

    WorkloadSpec spec;
    spec.strata.clear();
    double total_rate = 0.0;
    std::map<std::string, std::size_t> index;
    std::vector<StratumSpec> strata;
    std::vector<bool> has_rate;

    auto stratum_of = [&](const std::string& name) -> std::size_t {
        auto [it, inserted] = index.try_emplace(name, strata.size());
        if (inserted) {
            strata.push_back(StratumSpec{name, ConstantDist{0.0}, 1.0, std::nullopt, 0.0});
            has_rate.push_back(false);
        }
        return it->second;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable_line(line)) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "duration_s") {
                spec.duration_s = std::stod(value);
            } else if (key == "seed") {
                spec.seed = std::stoull(value);
            } else if (key == "total_rate") {
                total_rate = std::stod(value);
            } else if (key == "interleaving") {
                if (value == "by_timestamp")
                    spec.interleaving = WorkloadSpec::Interleaving::ByTimestamp;
                else if (value == "round_robin")
                    spec.interleaving = WorkloadSpec::Interleaving::RoundRobin;
                else
                    throw std::invalid_argument("unknown interleaving '" + value + "'");
            } else if (key.rfind("stratum.", 0) == 0) {
                const auto rest = key.substr(8);
                const auto dot = rest.rfind('.');
                if (dot == std::string::npos)
                    throw std::invalid_argument("expected stratum.<name>.<field>");
                const std::string name = rest.substr(0, dot);
                const std::string field = rest.substr(dot + 1);
                StratumSpec& s = strata[stratum_of(name)];
                if (field == "dist") {
                    s.dist = dist_from_string(value);
                } else if (field == "rate") {
                    s.arrival_rate = std::stod(value);
                    has_rate[index[name]] = true;
                } else if (field == "share") {
                    s.share = std::stod(value);
                } else if (field == "jitter") {
                    s.jitter = std::stod(value);
                } else {
                    throw std::invalid_argument("unknown stratum field '" + field + "'");
                }
            } else {
                throw std::invalid_argument("unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                                     e.what());
        }
    }

    // Shares translate to rates against the declared total.
    for (std::size_t i = 0; i < strata.size(); ++i) {
        if (!has_rate[i]) {
            if (!strata[i].share)
                throw std::runtime_error("stratum '" + strata[i].name +
                                         "' needs rate or share");
            if (!(total_rate > 0.0))
                throw std::runtime_error("shares require a positive total_rate");
            strata[i].arrival_rate = *strata[i].share * total_rate;
        }
    }
    spec.strata = std::move(strata);
    spec.validate();
    return spec;
}

std::uint64_t write_records(RecordSource& source, std::ostream& out,
                            const StratumTable& table) {
    std::uint64_t n = 0;
    while (auto r = source.next()) {
        out << serialize_record(*r, table) << '\n';
        ++n;
    }
    if (!out)
        throw std::runtime_error("failed writing record stream");
    return n;
}

} // namespace apstream
