#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddpp/annealer.hpp"
#include "ddpp/instance.hpp"
#include "ddpp/matrix.hpp"
#include "ddpp/qubo.hpp"

namespace ddpp {

// Outcome of the three independent schedule checks. Every component is always
// evaluated; a violation in one never masks the others.
struct FeasibilityTriplet {
    bool battery = false;      // every drone load within budget
    bool time_disjoint = false;  // no drone serves a conflicting pair
    bool assign_once = false;  // every delivery served exactly once

    bool all() const { return battery && time_disjoint && assign_once; }

    friend bool operator==(const FeasibilityTriplet&, const FeasibilityTriplet&) = default;
};

// Assignment block of a sample as a drone-by-delivery matrix. Slack bits are
// ignored. Throws ValidationError when the model has no assignment block or
// the bit vector does not cover the registry.
BinaryMatrix decode(const QuboModel& model, std::span<const std::uint8_t> bits);

FeasibilityTriplet check_feasibility(const ProblemInstance& inst, const ConflictSet& conflicts,
                                     const BinaryMatrix& x);

struct BenchmarkConfig {
    int runs = 10;
    int reads = 1000;
    int sweeps = 1000;
    std::uint64_t seed = 0;
    int formulation = 2;  // which model the sampler runs on
    double k = 120.0;
    OverlapConvention convention = OverlapConvention::PositiveOverlap;
    BuildOptions build;
    int jobs = 1;          // instances processed concurrently
    int exact_cap = 24;    // skip the exact reference above this many deliveries
};

// One sampler run: the best read of one anneal call, decoded and checked.
struct RunResult {
    int run_index = 0;
    std::uint64_t seed = 0;
    double seconds = 0.0;
    double best_energy = 0.0;  // raw model energy of the best read
    double h0 = 0.0;           // spread objective of the decoded assignment
    int drones_used = 0;       // nonzero rows of the decoded assignment
    FeasibilityTriplet feasibility;
};

// One instance across all runs. The "best" fields all refer to the single run
// whose decoded assignment has the smallest spread objective (ties: lowest
// run index); raw model energy only ranks reads inside a run.
struct RunReport {
    std::string instance;
    int num_deliveries = 0;
    int variables = 0;
    std::vector<RunResult> runs;

    double avg_seconds = 0.0;
    double avg_h0 = 0.0;
    double best_h0 = 0.0;
    int best_run_index = 0;
    double avg_drones = 0.0;
    int best_drones = 0;
    std::array<double, 3> feasibility_avg{};  // battery, time, assign-once
    FeasibilityTriplet feasibility_best;

    std::optional<int> exact_h0;      // absent when skipped or infeasible
    std::optional<int> exact_drones;
    std::string note;  // per-instance failure or skip reason; batch continues
};

// Seed for run r of instance i under base seed s. Exposed so runs can be
// replayed individually.
std::uint64_t derive_run_seed(std::uint64_t base_seed, int instance_index, int run);

// Full benchmark over a list of instances: exact reference (where tractable),
// then `runs` anneal calls per instance. Instance order in the result matches
// the input; jobs > 1 only distributes instances across threads and never
// changes any reported number except the timing fields.
std::vector<RunReport> run_benchmark(const std::vector<ProblemInstance>& instances,
                                     const BenchmarkConfig& config);

// Feasibility-rate view used for scaling studies over instance size.
struct ScalingPoint {
    std::string instance;
    int num_deliveries = 0;
    int variables = 0;
    double feasible_fraction = 0.0;       // runs with a fully feasible best
    std::optional<double> avg_feasible_h0;  // over those runs only
    std::optional<int> exact_h0;
};

std::vector<ScalingPoint> scaling_experiment(const std::vector<ProblemInstance>& instances,
                                             const BenchmarkConfig& config);

// Reports as delimiter-separated tables. Every writer starts with comment
// lines echoing the fully-resolved configuration.
void write_summary_csv(std::ostream& out, std::span<const RunReport> reports,
                       const BenchmarkConfig& config);
void write_runs_csv(std::ostream& out, const RunReport& report, const BenchmarkConfig& config);
void write_scaling_csv(std::ostream& out, std::span<const ScalingPoint> points,
                       const BenchmarkConfig& config);

}  // namespace ddpp
