#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ddpp/instance.hpp"
#include "ddpp/matrix.hpp"

namespace ddpp {

// Variable kinds in registry order. A model's registry always lists the
// assignment block first, then the drone-used block, then slack blocks in
// constraint order (battery, conflict, link, usage).
enum class VarKind : std::uint8_t {
    Assignment,     // x[i][j]  drone i serves delivery j
    DroneUsed,      // y[i]     drone i serves at least one delivery
    BatterySlack,   // s[i][l]  binary expansion of unused battery of drone i
    ConflictSlack,  // t[i][p]  slack for conflicting pair p on drone i
    LinkSlack,      // r[i][j]  slack tying x[i][j] to y[i]
    UsageSlack,     // p[i][l]  binary expansion of (row load - y) of drone i
};

struct VarKey {
    VarKind kind = VarKind::Assignment;
    std::int32_t i = 0;  // drone index
    std::int32_t a = 0;  // delivery, bit position, or conflict-pair index

    std::string to_string() const;
    static VarKey parse(const std::string& name);  // throws ParseError

    friend bool operator==(const VarKey&, const VarKey&) = default;
    friend auto operator<=>(const VarKey&, const VarKey&) = default;
};

// How conflict slacks are allocated. PerPair gives every conflicting pair on
// every drone its own slack bit, so the conflict penalty can reach zero on
// any feasible schedule. PerDrone shares one bit per drone, which matches the
// recorded variable budgets but leaves a small positive floor whenever a
// drone serves one delivery out of several conflicting pairs.
enum class SlackMode { PerPair, PerDrone };

// Width of the battery slack register. Budget uses ceil(log2(B)) bits, the
// default rule; values up to B are then representable exactly when B is not
// a power of two. BudgetPlusOne uses ceil(log2(B+1)) bits so the full-budget
// slack of an idle drone always fits.
enum class SlackBitsRule { Budget, BudgetPlusOne };

struct BuildOptions {
    SlackMode slack_mode = SlackMode::PerPair;
    SlackBitsRule slack_bits = SlackBitsRule::Budget;
};

// Penalty weights for the constraint terms. Index 0..4 map to the battery,
// assign-once, conflict, link and usage constraints; the two-term model only
// reads the first three. The assign-once weight carries the extra factor k.
struct PenaltyWeights {
    std::array<double, 5> alpha{};
    double k = 120.0;

    // alpha_i = m N^2 / 4 except the assign-once weight, which is k m N^2 / 4.
    static PenaltyWeights defaults(int num_drones, int num_deliveries, double k = 120.0);
};

struct QuadTerm {
    std::uint32_t u = 0;  // registry index, u < v
    std::uint32_t v = 0;
    double weight = 0.0;

    friend bool operator==(const QuadTerm&, const QuadTerm&) = default;
};

// Model construction and layout facts that reports and decoders need.
struct ModelInfo {
    int formulation = 0;  // 1 or 2; 0 for imported models of unknown origin
    int num_drones = 0;
    int num_deliveries = 0;
    double battery_budget = 0.0;
    PenaltyWeights weights;
    BuildOptions options;
    std::vector<std::pair<int, int>> conflict_pairs;  // defines t[i][p] meaning
    std::string instance_label;
};

// Sparse QUBO over binary variables: offset + sum h_v z_v + sum J_uv z_u z_v.
// Quadratic terms are unique, ordered pairs u < v sorted lexicographically.
// A compressed adjacency is kept alongside for samplers that need fast
// neighbourhood access.
class QuboModel {
  public:
    QuboModel() = default;
    QuboModel(std::vector<VarKey> registry, std::vector<double> linear,
              std::vector<QuadTerm> quadratic, double offset, ModelInfo info);

    std::size_t num_variables() const { return registry_.size(); }
    const std::vector<VarKey>& registry() const { return registry_; }
    const std::vector<double>& linear() const { return linear_; }
    const std::vector<QuadTerm>& quadratic() const { return quadratic_; }
    double offset() const { return offset_; }
    const ModelInfo& info() const { return info_; }

    // Registry index of a key, or -1 when the model has no such variable.
    int find(const VarKey& key) const;

    // Neighbourhood of variable v as parallel index/weight spans.
    std::span<const std::uint32_t> neighbor_indices(std::uint32_t v) const;
    std::span<const double> neighbor_weights(std::uint32_t v) const;

    // Largest single-flip energy swing: max_v |h_v| + sum_u |J_uv|.
    double max_flip_scale() const;
    // Smallest per-variable scale: min_v max(|h_v|, min nonzero |J_uv|).
    double min_flip_scale() const;

  private:
    std::vector<VarKey> registry_;
    std::vector<double> linear_;
    std::vector<QuadTerm> quadratic_;
    double offset_ = 0.0;
    ModelInfo info_;

    // CSR adjacency over quadratic terms, both directions.
    std::vector<std::uint32_t> adj_offsets_;
    std::vector<std::uint32_t> adj_index_;
    std::vector<double> adj_weight_;
};

// Bits in the battery slack register for budget B under the given rule.
int battery_slack_bits(double battery_budget, SlackBitsRule rule);
// Bits in the usage slack register: ceil(log2(N)).
int usage_slack_bits(int num_deliveries);

// Five-term model: minimize used drones, with battery, assign-once, conflict,
// link and usage constraints as quadratic penalties.
QuboModel build_qubo1(const ProblemInstance& inst, const ConflictSet& conflicts,
                      const PenaltyWeights& weights, const BuildOptions& options = {});

// Two-term model: spread objective sum_i (N - sigma_i) sigma_i plus battery,
// assign-once and conflict penalties. No drone-used variables.
QuboModel build_qubo2(const ProblemInstance& inst, const ConflictSet& conflicts,
                      const PenaltyWeights& weights, const BuildOptions& options = {});

// Registry sizes the builders will produce, straight from the closed-form
// variable budgets.
std::size_t predict_var_count_q1(int m, int n, double battery_budget, std::size_t kappa,
                                 const BuildOptions& options = {});
std::size_t predict_var_count_q2(int m, int n, double battery_budget, std::size_t kappa,
                                 const BuildOptions& options = {});

// Energy of a full assignment (bits.size() must equal the registry size).
double evaluate_energy(const QuboModel& model, std::span<const std::uint8_t> bits);
// Energy of a by-name assignment; missing keys raise ValidationError naming
// the first absent variable.
double evaluate_energy(const QuboModel& model,
                       const std::unordered_map<std::string, int>& by_name);

// Spread objective of an assignment matrix: sum_i (N - sigma_i) sigma_i.
double evaluate_h0(const ProblemInstance& inst, const BinaryMatrix& x);

// Full bit vector for the model with the assignment block copied from `x` and
// every slack block set to its constructive value (drone-used indicators,
// binary-encoded battery remainders, pair slacks 1 - x_ij - x_ik, link and
// usage registers). On a feasible schedule with integer loads and a wide
// enough battery register this zeroes every penalty term. Values that do not
// fit a register are clamped, so the result is always a valid assignment.
std::vector<std::uint8_t> complete_slacks(const QuboModel& model, const ProblemInstance& inst,
                                          const BinaryMatrix& x);

// JSON export with fields offset, variables, linear, quadratic, metadata.
std::string qubo_to_json(const QuboModel& model);
void save_qubo(const QuboModel& model, const std::filesystem::path& path);
// Import of the same format. Files without the metadata block are accepted;
// assignment-block dimensions are then inferred from the variable names.
QuboModel parse_qubo_json(const std::string& text, const std::string& origin);
QuboModel load_qubo(const std::filesystem::path& path);

const char* to_string(SlackMode mode);
const char* to_string(SlackBitsRule rule);

}  // namespace ddpp
