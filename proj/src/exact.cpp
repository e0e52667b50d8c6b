#include "ddpp/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "ddpp/errors.hpp"

namespace ddpp {

namespace {

// Benchmark costs carry one decimal, so subset sums accumulate tiny binary
// representation errors; comparisons against the budget allow for them.
double budget_tolerance(double battery_budget) {
    return 1e-9 * std::max(1.0, battery_budget);
}

int lowest_bit(std::uint32_t mask) { return std::countr_zero(mask); }

}  // namespace

FeasibleSubsetTable enumerate_feasible_subsets(const ProblemInstance& inst,
                                               const ConflictSet& conflicts) {
    inst.validate();
    const int n = inst.num_deliveries();
    if (n > 24)
        throw SolverError("exact enumeration supports at most 24 deliveries, got " +
                          std::to_string(n));

    // per-delivery mask of conflicting partners
    std::vector<std::uint32_t> conflict_mask(n, 0);
    for (const auto& [j, k] : conflicts.pairs()) {
        conflict_mask[j] |= 1u << k;
        conflict_mask[k] |= 1u << j;
    }

    const std::uint32_t states = 1u << n;
    const double budget = inst.battery_budget + budget_tolerance(inst.battery_budget);

    FeasibleSubsetTable table;
    table.num_deliveries = n;
    table.flags.assign(states, 0);

    std::vector<double> load(states, 0.0);
    std::vector<char> disjoint(states, 1);
    for (std::uint32_t mask = 1; mask < states; ++mask) {
        const int j = lowest_bit(mask);
        const std::uint32_t rest = mask & (mask - 1);
        load[mask] = load[rest] + inst.costs[j];
        disjoint[mask] = disjoint[rest] && (conflict_mask[j] & rest) == 0;
        if (disjoint[mask] && load[mask] <= budget) {
            table.flags[mask] = 1;
            table.masks.push_back(mask);
        }
    }
    return table;
}

ExactSolution solve_exact(const ProblemInstance& inst, const ConflictSet& conflicts) {
    const FeasibleSubsetTable table = enumerate_feasible_subsets(inst, conflicts);
    const int n = table.num_deliveries;
    const int m = inst.num_drones;
    const std::uint32_t full = (1u << n) - 1;
    constexpr int kUnreachable = std::numeric_limits<int>::max() / 2;

    // fewest feasible parts covering each delivery set; every part contains
    // the lowest uncovered delivery, which prunes symmetric orderings
    std::vector<int> parts(full + 1, kUnreachable);
    parts[0] = 0;
    for (std::uint32_t u = 1; u <= full; ++u) {
        const std::uint32_t low = u & (0u - u);
        const std::uint32_t rest = u ^ low;
        for (std::uint32_t t = rest;; t = (t - 1) & rest) {
            const std::uint32_t s = t | low;
            if (table.flags[s] && parts[u ^ s] + 1 < parts[u]) parts[u] = parts[u ^ s] + 1;
            if (t == 0) break;
        }
    }
    if (parts[full] > m)
        throw InfeasibleError("instance '" + inst.label + "' admits no schedule with " +
                              std::to_string(m) + " drones" +
                              (parts[full] >= kUnreachable
                                   ? " (some deliveries cannot be served at all)"
                                   : ": at least " + std::to_string(parts[full]) +
                                         " drones are needed"));

    // spread objective: minimizing sum_i (N - sigma_i) sigma_i over at most m
    // parts is maximizing the sum of squared part sizes, layered by part count
    const int max_parts = std::min(m, n);
    std::vector<std::vector<int>> best_sq(max_parts + 1,
                                          std::vector<int>(full + 1, -1));
    best_sq[0][0] = 0;
    for (int p = 1; p <= max_parts; ++p) {
        const auto& prev = best_sq[p - 1];
        auto& cur = best_sq[p];
        for (std::uint32_t u = 1; u <= full; ++u) {
            const std::uint32_t low = u & (0u - u);
            const std::uint32_t rest = u ^ low;
            int best = -1;
            for (std::uint32_t t = rest;; t = (t - 1) & rest) {
                const std::uint32_t s = t | low;
                if (table.flags[s]) {
                    const int before = prev[u ^ s];
                    if (before >= 0) {
                        const int size = std::popcount(s);
                        if (before + size * size > best) best = before + size * size;
                    }
                }
                if (t == 0) break;
            }
            cur[u] = best;
        }
    }

    int top_sq = -1, top_parts = 0;
    for (int p = 1; p <= max_parts; ++p) {
        if (best_sq[p][full] > top_sq) {
            top_sq = best_sq[p][full];
            top_parts = p;
        }
    }

    ExactSolution solution;
    solution.min_drones = parts[full];
    solution.min_h0 = n * n - top_sq;
    solution.min_h0_drones = top_parts;

    // walk the layers back, taking the first submask that reproduces the
    // table value so the reported partition is deterministic
    std::uint32_t u = full;
    for (int p = top_parts; p >= 1; --p) {
        const std::uint32_t low = u & (0u - u);
        const std::uint32_t rest = u ^ low;
        for (std::uint32_t t = rest;; t = (t - 1) & rest) {
            const std::uint32_t s = t | low;
            if (table.flags[s]) {
                const int before = best_sq[p - 1][u ^ s];
                const int size = std::popcount(s);
                if (before >= 0 && before + size * size == best_sq[p][u]) {
                    solution.partition.push_back(s);
                    u ^= s;
                    break;
                }
            }
            if (t == 0) break;
        }
    }
    std::sort(solution.partition.begin(), solution.partition.end());
    return solution;
}

int battery_lower_bound(const ProblemInstance& inst) {
    double total = 0.0;
    for (double c : inst.costs) total += c;
    return static_cast<int>(
        std::ceil(total / inst.battery_budget - budget_tolerance(inst.battery_budget)));
}

int clique_lower_bound(const ProblemInstance& inst, OverlapConvention convention) {
    int lo = inst.intervals.front().start;
    int hi = inst.intervals.front().end;
    for (const auto& iv : inst.intervals) {
        lo = std::min(lo, iv.start);
        hi = std::max(hi, iv.end);
    }
    // intervals have integer endpoints: any set with pairwise overlap shares
    // either a unit segment [t, t+1] (positive overlap) or a point t (closed)
    int best = 0;
    for (int t = lo; t <= hi; ++t) {
        int count = 0;
        for (const auto& iv : inst.intervals) {
            const bool covers = convention == OverlapConvention::PositiveOverlap
                                    ? iv.start <= t && t + 1 <= iv.end
                                    : iv.start <= t && t <= iv.end;
            if (covers) ++count;
        }
        best = std::max(best, count);
    }
    return best;
}

BruteForceResult brute_force_qubo(const QuboModel& model) {
    const std::size_t n = model.num_variables();
    if (n == 0) throw ValidationError("model has no variables");
    if (n > 26)
        throw SolverError("exhaustive search supports at most 26 variables, got " +
                          std::to_string(n));

    // Gray-code walk: consecutive states differ in exactly one variable, so
    // each of the 2^n states costs one local-field update
    std::vector<std::uint8_t> bits(n, 0);
    std::vector<double> field(model.linear().begin(), model.linear().end());
    double energy = model.offset();

    std::vector<std::uint8_t> best_bits = bits;
    double best_energy = energy;

    const std::uint64_t states = 1ull << n;
    for (std::uint64_t g = 1; g < states; ++g) {
        const auto v = static_cast<std::uint32_t>(std::countr_zero(g));
        energy += (1 - 2 * static_cast<int>(bits[v])) * field[v];
        bits[v] ^= 1;
        const double step = bits[v] ? 1.0 : -1.0;
        const auto neighbors = model.neighbor_indices(v);
        const auto weights = model.neighbor_weights(v);
        for (std::size_t e = 0; e < neighbors.size(); ++e)
            field[neighbors[e]] += step * weights[e];

        if (energy < best_energy ||
            (energy == best_energy &&
             std::lexicographical_compare(bits.begin(), bits.end(), best_bits.begin(),
                                          best_bits.end()))) {
            best_energy = energy;
            best_bits = bits;
        }
    }

    // report the exact energy of the winner, free of accumulated drift
    const double exact_best = evaluate_energy(model, best_bits);
    return BruteForceResult{std::move(best_bits), exact_best};
}

}  // namespace ddpp
