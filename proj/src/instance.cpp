#include "ddpp/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ddpp/errors.hpp"
#include "ddpp/rng.hpp"
#include "json.hpp"

namespace ddpp {

namespace {

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

double round_one_decimal(double v) { return std::round(v * 10.0) / 10.0; }

}  // namespace

void ProblemInstance::validate() const {
    if (num_drones < 1)
        throw ValidationError("instance '" + label + "': number of drones must be at least 1, got " +
                              std::to_string(num_drones));
    if (!std::isfinite(battery_budget) || battery_budget <= 0.0)
        throw ValidationError("instance '" + label + "': battery budget must be positive, got " +
                              format_number(battery_budget));
    if (costs.empty())
        throw ValidationError("instance '" + label + "': at least one delivery is required");
    if (intervals.size() != costs.size())
        throw ValidationError("instance '" + label + "': " + std::to_string(costs.size()) +
                              " costs but " + std::to_string(intervals.size()) + " intervals");
    for (std::size_t j = 0; j < costs.size(); ++j) {
        const double c = costs[j];
        if (!std::isfinite(c) || c <= 0.0 || c > battery_budget)
            throw ValidationError("instance '" + label + "': cost of delivery " + std::to_string(j) +
                                  " is " + format_number(c) + ", must lie in (0, B] with B = " +
                                  format_number(battery_budget));
    }
    for (std::size_t j = 0; j < intervals.size(); ++j) {
        if (intervals[j].start >= intervals[j].end)
            throw ValidationError("instance '" + label + "': interval of delivery " +
                                  std::to_string(j) + " is [" + std::to_string(intervals[j].start) +
                                  ", " + std::to_string(intervals[j].end) + "], start must precede end");
    }
}

ConflictSet::ConflictSet(std::vector<std::pair<int, int>> pairs) : pairs_(std::move(pairs)) {
    for (auto& [j, k] : pairs_) {
        if (j == k) throw ValidationError("conflict pair (" + std::to_string(j) + ", " +
                                          std::to_string(k) + ") repeats a delivery");
        if (j > k) std::swap(j, k);
    }
    std::sort(pairs_.begin(), pairs_.end());
    pairs_.erase(std::unique(pairs_.begin(), pairs_.end()), pairs_.end());
}

bool ConflictSet::contains(int j, int k) const {
    if (j > k) std::swap(j, k);
    return std::binary_search(pairs_.begin(), pairs_.end(), std::make_pair(j, k));
}

ConflictSet conflict_pairs(const ProblemInstance& inst, OverlapConvention convention) {
    const int n = inst.num_deliveries();
    std::vector<std::pair<int, int>> out;
    for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
            const int lo = std::max(inst.intervals[j].start, inst.intervals[k].start);
            const int hi = std::min(inst.intervals[j].end, inst.intervals[k].end);
            const bool overlap =
                convention == OverlapConvention::PositiveOverlap ? lo < hi : lo <= hi;
            if (overlap) out.emplace_back(j, k);
        }
    }
    return ConflictSet(std::move(out));
}

ProblemInstance generate_instance(std::uint64_t seed, int num_drones, int num_deliveries,
                                  double battery_budget, CostDistribution dist) {
    if (num_deliveries < 1)
        throw ValidationError("cannot generate an instance with " +
                              std::to_string(num_deliveries) + " deliveries");
    Rng rng(seed);

    ProblemInstance inst;
    inst.num_drones = num_drones;
    inst.battery_budget = battery_budget;
    {
        std::ostringstream label;
        label << "gen(seed=" << seed << ",m=" << num_drones << ",N=" << num_deliveries
              << ",B=" << format_number(battery_budget) << ",dist=" << to_string(dist) << ")";
        inst.label = label.str();
    }

    inst.costs.reserve(num_deliveries);
    for (int j = 0; j < num_deliveries; ++j) {
        double c = 0.0;
        int attempts = 0;
        do {
            if (++attempts > 100000)
                throw SolverError("cost sampling did not produce a value in (0, B) after 100000 draws");
            double raw;
            if (dist == CostDistribution::Uniform) {
                raw = rng.next_double() * battery_budget;
            } else {
                // Box-Muller, cosine branch only, so every draw consumes
                // exactly two words of the stream.
                const double u1 = static_cast<double>((rng.next_u64() >> 11) + 1) * 0x1.0p-53;
                const double u2 = rng.next_double();
                const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
                raw = battery_budget / 2.0 + battery_budget / 6.0 * z;
            }
            c = round_one_decimal(raw);
        } while (!(c > 0.0 && c < battery_budget));
        inst.costs.push_back(c);
    }

    inst.intervals.reserve(num_deliveries);
    for (int j = 0; j < num_deliveries; ++j) {
        // Working day 8..20; delivery windows last one or two hours.
        const int length = 1 + static_cast<int>(rng.next_below(2));
        const int start = 8 + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(13 - length)));
        inst.intervals.push_back({start, start + length});
    }

    inst.validate();
    return inst;
}

ProblemInstance parse_instance_json(const std::string& text, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ": not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ParseError(origin + ": top level must be an object");

    for (const char* field : {"label", "m", "B", "costs", "intervals"}) {
        if (!doc.contains(field))
            throw ParseError(origin + ": missing field '" + field + "'");
    }

    ProblemInstance inst;
    try {
        inst.label = doc["label"].get<std::string>();
        inst.num_drones = doc["m"].get<int>();
        inst.battery_budget = doc["B"].get<double>();
        inst.costs = doc["costs"].get<std::vector<double>>();
        for (const auto& pair : doc["intervals"]) {
            if (!pair.is_array() || pair.size() != 2)
                throw ParseError(origin + ": each interval must be a [start, end] pair");
            inst.intervals.push_back({pair[0].get<int>(), pair[1].get<int>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": malformed field: " + e.what());
    }

    inst.validate();
    return inst;
}

ProblemInstance load_instance(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open instance file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_instance_json(buffer.str(), path.string());
}

std::string instance_to_json(const ProblemInstance& inst) {
    nlohmann::json doc;
    doc["label"] = inst.label;
    doc["m"] = inst.num_drones;
    doc["B"] = inst.battery_budget;
    doc["costs"] = inst.costs;
    auto intervals = nlohmann::json::array();
    for (const auto& iv : inst.intervals) intervals.push_back({iv.start, iv.end});
    doc["intervals"] = intervals;
    return doc.dump(2) + "\n";
}

void save_instance(const ProblemInstance& inst, const std::filesystem::path& path) {
    inst.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write instance file '" + path.string() + "'");
    out << instance_to_json(inst);
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

ProblemInstance scale_costs(const ProblemInstance& inst, double factor) {
    if (!std::isfinite(factor) || factor <= 0.0)
        throw ValidationError("cost scale factor must be positive, got " + format_number(factor));
    ProblemInstance scaled = inst;
    scaled.battery_budget = inst.battery_budget * factor;
    for (auto& c : scaled.costs) c *= factor;
    if (factor != 1.0) scaled.label = inst.label + " x" + format_number(factor);
    scaled.validate();
    return scaled;
}

const char* to_string(OverlapConvention convention) {
    return convention == OverlapConvention::PositiveOverlap ? "open" : "closed";
}

const char* to_string(CostDistribution dist) {
    return dist == CostDistribution::Uniform ? "uniform" : "gaussian";
}

}  // namespace ddpp
