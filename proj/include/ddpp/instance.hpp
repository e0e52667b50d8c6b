#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ddpp {

// Two intervals "conflict" when the same drone cannot serve both deliveries.
// PositiveOverlap requires a flight window of positive length in common
// (max(start) < min(end)); Closed also counts intervals that merely touch at
// an endpoint (max(start) <= min(end)).
enum class OverlapConvention { PositiveOverlap, Closed };

enum class CostDistribution { Uniform, Gaussian };

// Delivery window in whole hours of the working day. start < end always.
struct TimeInterval {
    int start = 0;
    int end = 0;

    friend bool operator==(const TimeInterval&, const TimeInterval&) = default;
};

// One packing problem: N deliveries with battery costs and time windows,
// to be served by at most m identical drones with battery budget B.
struct ProblemInstance {
    std::string label;
    int num_drones = 0;                   // m
    double battery_budget = 0.0;          // B
    std::vector<double> costs;            // c_j, one per delivery
    std::vector<TimeInterval> intervals;  // I_j, one per delivery

    int num_deliveries() const { return static_cast<int>(costs.size()); }

    // Throws ValidationError when any documented invariant is broken:
    // m >= 1, B > 0, at least one delivery, costs and intervals the same
    // length, every 0 < c_j <= B, every interval with start < end.
    // A cost exactly equal to B is accepted: singleton deliveries remain
    // schedulable and the shipped benchmark data contains such a value.
    void validate() const;
};

// Unordered conflicting delivery pairs, stored as (j, k) with j < k in
// lexicographic order. kappa() is the pair count used in variable budgets.
class ConflictSet {
  public:
    ConflictSet() = default;
    explicit ConflictSet(std::vector<std::pair<int, int>> pairs);

    const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
    std::size_t kappa() const { return pairs_.size(); }
    bool contains(int j, int k) const;
    bool empty() const { return pairs_.empty(); }

  private:
    std::vector<std::pair<int, int>> pairs_;
};

// All conflicting pairs of the instance under the given convention.
ConflictSet conflict_pairs(const ProblemInstance& inst, OverlapConvention convention);

// Random instance in the benchmark family: interval lengths 1 or 2 hours
// inside the 8..20 working day, costs drawn Uniform(0, B) or
// Gaussian(B/2, B/6), both rounded to one decimal and redrawn until the
// rounded value lies strictly inside (0, B). Deterministic in the seed.
ProblemInstance generate_instance(std::uint64_t seed, int num_drones, int num_deliveries,
                                  double battery_budget, CostDistribution dist);

// JSON instance files with fields label, m, B, costs, intervals.
ProblemInstance load_instance(const std::filesystem::path& path);
void save_instance(const ProblemInstance& inst, const std::filesystem::path& path);
ProblemInstance parse_instance_json(const std::string& text, const std::string& origin);
std::string instance_to_json(const ProblemInstance& inst);

// Copy of the instance with costs and budget multiplied by `factor`.
// Feasibility and drone counts are unchanged; with one-decimal costs and
// factor 10 the scaled costs are integers, which makes penalty arithmetic
// exact.
ProblemInstance scale_costs(const ProblemInstance& inst, double factor);

const char* to_string(OverlapConvention convention);
const char* to_string(CostDistribution dist);

}  // namespace ddpp
