#pragma once

#include <cstdint>
#include <vector>

#include "ddpp/instance.hpp"
#include "ddpp/qubo.hpp"

namespace ddpp {

// Every nonempty delivery subset a single drone can serve: battery load
// within budget and no conflicting pair inside the subset. Bit j of a mask
// marks delivery j.
struct FeasibleSubsetTable {
    int num_deliveries = 0;
    std::vector<std::uint32_t> masks;  // feasible masks, ascending
    std::vector<char> flags;           // size 1 << N, O(1) membership

    bool is_feasible(std::uint32_t mask) const { return flags[mask] != 0; }
};

// Exhaustive enumeration over all 2^N - 1 nonempty subsets. Instances with
// more than 24 deliveries are refused (SolverError): the table alone would
// stop fitting in memory and the partition search on top of it is already
// exponential.
FeasibleSubsetTable enumerate_feasible_subsets(const ProblemInstance& inst,
                                               const ConflictSet& conflicts);

// Ground truth for one instance, from dynamic programming over subsets.
struct ExactSolution {
    int min_drones = 0;    // fewest feasible parts covering all deliveries
    int min_h0 = 0;        // smallest spread objective using at most m parts
    int min_h0_drones = 0; // parts used by the reported partition
    std::vector<std::uint32_t> partition;  // disjoint masks attaining min_h0
};

// Minimum drone count and minimum spread objective over all partitions of
// the deliveries into at most m feasible subsets. Throws InfeasibleError when
// no such partition exists. Among partitions attaining min_h0 the one with
// the fewest parts is reported. O(3^N) over the subset lattice.
ExactSolution solve_exact(const ProblemInstance& inst, const ConflictSet& conflicts);

// ceil(total cost / B): no schedule can use fewer drones than this.
int battery_lower_bound(const ProblemInstance& inst);
// Largest set of pairwise conflicting deliveries; each needs its own drone.
int clique_lower_bound(const ProblemInstance& inst, OverlapConvention convention);

struct BruteForceResult {
    std::vector<std::uint8_t> bits;
    double energy = 0.0;
};

// Exact QUBO minimum by Gray-code enumeration of all assignments. Models with
// more than 26 variables are refused (SolverError). Among ties the
// lexicographically smallest bit vector (registry order) is returned.
BruteForceResult brute_force_qubo(const QuboModel& model);

}  // namespace ddpp
