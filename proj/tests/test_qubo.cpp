#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "ddpp/errors.hpp"
#include "ddpp/exact.hpp"
#include "ddpp/instance.hpp"
#include "ddpp/matrix.hpp"
#include "ddpp/qubo.hpp"
#include "ddpp/rng.hpp"

using namespace ddpp;
namespace fs = std::filesystem;

namespace {

fs::path data_file(const std::string& rel) { return fs::path(DDPP_DATA_DIR) / rel; }

std::vector<fs::path> data_set(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(fs::path(DDPP_DATA_DIR) / dir))
        if (entry.path().extension() == ".inst") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

// two deliveries, no conflict, both fit on one drone
ProblemInstance toy_instance() {
    ProblemInstance inst;
    inst.label = "toy";
    inst.num_drones = 2;
    inst.battery_budget = 3.0;
    inst.costs = {1.0, 1.0};
    inst.intervals = {{8, 9}, {10, 11}};
    return inst;
}

ProblemInstance random_integer_instance(Rng& rng, int num_drones, int num_deliveries,
                                        double budget) {
    ProblemInstance inst;
    inst.label = "random";
    inst.num_drones = num_drones;
    inst.battery_budget = budget;
    for (int j = 0; j < num_deliveries; ++j) {
        inst.costs.push_back(1.0 + rng.next_below(static_cast<std::uint32_t>(budget)));
        const int len = 1 + static_cast<int>(rng.next_below(2));
        const int start = 8 + static_cast<int>(rng.next_below(13 - len));
        inst.intervals.push_back({start, start + len});
    }
    inst.validate();
    return inst;
}

// dense reference evaluation, the long way around
double dense_energy(const QuboModel& model, const std::vector<std::uint8_t>& bits) {
    double energy = model.offset();
    for (std::size_t v = 0; v < model.num_variables(); ++v)
        if (bits[v]) energy += model.linear()[v];
    for (const QuadTerm& term : model.quadratic())
        if (bits[term.u] && bits[term.v]) energy += term.weight;
    return energy;
}

}  // namespace

TEST_CASE("variable names round-trip through text") {
    const std::vector<VarKey> keys = {
        {VarKind::Assignment, 3, 7},   {VarKind::DroneUsed, 0, 0},  {VarKind::BatterySlack, 2, 5},
        {VarKind::ConflictSlack, 1, 4}, {VarKind::LinkSlack, 9, 11}, {VarKind::UsageSlack, 4, 0}};
    const std::vector<std::string> names = {"x[3][7]", "y[0]", "s[2][5]",
                                            "t[1][4]", "r[9][11]", "p[4][0]"};
    for (std::size_t idx = 0; idx < keys.size(); ++idx) {
        CHECK(keys[idx].to_string() == names[idx]);
        CHECK(VarKey::parse(names[idx]) == keys[idx]);
    }
    CHECK_THROWS_AS(VarKey::parse(""), ParseError);
    CHECK_THROWS_AS(VarKey::parse("x[1]"), ParseError);
    CHECK_THROWS_AS(VarKey::parse("y[1][2]"), ParseError);
    CHECK_THROWS_AS(VarKey::parse("q[0][0]"), ParseError);
    CHECK_THROWS_AS(VarKey::parse("x[0][0]tail"), ParseError);
    CHECK_THROWS_AS(VarKey::parse("x[a][0]"), ParseError);
}

TEST_CASE("slack register widths") {
    CHECK(battery_slack_bits(1.0, SlackBitsRule::Budget) == 0);
    CHECK(battery_slack_bits(1.0, SlackBitsRule::BudgetPlusOne) == 1);
    CHECK(battery_slack_bits(2.0, SlackBitsRule::Budget) == 1);
    CHECK(battery_slack_bits(2.0, SlackBitsRule::BudgetPlusOne) == 2);
    CHECK(battery_slack_bits(3.0, SlackBitsRule::Budget) == 2);
    CHECK(battery_slack_bits(3.0, SlackBitsRule::BudgetPlusOne) == 2);
    CHECK(battery_slack_bits(50.0, SlackBitsRule::Budget) == 6);
    CHECK(battery_slack_bits(50.0, SlackBitsRule::BudgetPlusOne) == 6);
    CHECK(battery_slack_bits(64.0, SlackBitsRule::Budget) == 6);
    CHECK(battery_slack_bits(64.0, SlackBitsRule::BudgetPlusOne) == 7);
    CHECK(battery_slack_bits(70.0, SlackBitsRule::Budget) == 7);
    CHECK(battery_slack_bits(100.0, SlackBitsRule::Budget) == 7);
    CHECK(battery_slack_bits(0.5, SlackBitsRule::Budget) == 0);
    CHECK_THROWS_AS(battery_slack_bits(0.0, SlackBitsRule::Budget), ValidationError);
    CHECK_THROWS_AS(battery_slack_bits(1e20, SlackBitsRule::Budget), BuildError);

    CHECK(usage_slack_bits(1) == 0);
    CHECK(usage_slack_bits(2) == 1);
    CHECK(usage_slack_bits(3) == 2);
    CHECK(usage_slack_bits(4) == 2);
    CHECK(usage_slack_bits(10) == 4);
    CHECK(usage_slack_bits(12) == 4);
    CHECK_THROWS_AS(usage_slack_bits(0), ValidationError);
}

TEST_CASE("default penalty weights") {
    const PenaltyWeights weights = PenaltyWeights::defaults(10, 8);
    CHECK(weights.alpha[0] == 160.0);
    CHECK(weights.alpha[1] == 19200.0);  // assign-once carries the factor k
    CHECK(weights.alpha[2] == 160.0);
    CHECK(weights.alpha[3] == 160.0);
    CHECK(weights.alpha[4] == 160.0);
    CHECK(weights.k == 120.0);
    const PenaltyWeights other = PenaltyWeights::defaults(2, 3, 10.0);
    CHECK(other.alpha[0] == 4.5);
    CHECK(other.alpha[1] == 45.0);
}

TEST_CASE("registry layout follows the documented block order") {
    const ProblemInstance inst = load_instance(data_file("table7/n6.inst"));
    const ConflictSet conflicts = conflict_pairs(inst, OverlapConvention::PositiveOverlap);
    const PenaltyWeights weights = PenaltyWeights::defaults(inst.num_drones, inst.num_deliveries());
    for (const QuboModel& model : {build_qubo1(inst, conflicts, weights),
                                   build_qubo2(inst, conflicts, weights)}) {
        const auto& registry = model.registry();
        CHECK(std::is_sorted(registry.begin(), registry.end(),
                             [](const VarKey& a, const VarKey& b) { return a.kind < b.kind; }));
        // assignment block first, drone-major
        int slot = 0;
        for (int i = 0; i < inst.num_drones; ++i)
            for (int j = 0; j < inst.num_deliveries(); ++j, ++slot) {
                CHECK(registry[slot] == VarKey{VarKind::Assignment, i, j});
            }
        // every name round-trips and find() inverts the registry
        for (std::size_t v = 0; v < registry.size(); ++v) {
            CHECK(VarKey::parse(registry[v].to_string()) == registry[v]);
            CHECK(model.find(registry[v]) == static_cast<int>(v));
        }
        CHECK(model.find(VarKey{VarKind::Assignment, 99, 0}) == -1);
    }
}

TEST_CASE("predicted variable counts equal built registry sizes") {
    Rng rng(321);
    for (int trial = 0; trial < 150; ++trial) {
        const int m = 1 + static_cast<int>(rng.next_below(4));
        const int n = 1 + static_cast<int>(rng.next_below(6));
        const double budget = std::vector<double>{3, 5, 6, 7, 50}[rng.next_below(5)];
        const ProblemInstance inst = random_integer_instance(rng, m, n, budget);
        const ConflictSet conflicts = conflict_pairs(inst, OverlapConvention::PositiveOverlap);
        const PenaltyWeights weights = PenaltyWeights::defaults(m, n);
        for (auto mode : {SlackMode::PerPair, SlackMode::PerDrone}) {
            for (auto rule : {SlackBitsRule::Budget, SlackBitsRule::BudgetPlusOne}) {
                const BuildOptions options{mode, rule};
                CHECK(build_qubo1(inst, conflicts, weights, options).num_variables() ==
                      predict_var_count_q1(m, n, budget, conflicts.kappa(), options));
                CHECK(build_qubo2(inst, conflicts, weights, options).num_variables() ==
                      predict_var_count_q2(m, n, budget, conflicts.kappa(), options));
            }
        }
    }
}

TEST_CASE("variable budgets of the shipped instances") {
    // counts confirmed against an independent implementation of the
    // closed-form budgets
    const std::vector<std::size_t> set1_q1 = {420, 450, 480, 420, 400, 470,
                                              520, 540, 450, 490, 410, 520};
    const std::vector<std::size_t> set1_q2 = {270, 300, 310, 270, 250, 300,
                                              350, 370, 300, 320, 260, 350};
    const std::vector<std::size_t> set1_q2_shared = {180, 180, 200, 180, 180, 190,
                                                     200, 190, 180, 200, 180, 200};
    const std::vector<std::size_t> set1_kappa = {10, 13, 12, 10, 8, 12, 16, 19, 13, 13, 9, 16};

    const std::vector<std::size_t> set6_q2 = {210, 200, 200, 180, 240, 200,
                                              170, 230, 190, 190, 200, 190};
    const std::vector<std::size_t> set6_q2_shared = {160, 160, 160, 150, 160, 150,
                                                     140, 160, 160, 150, 150, 150};
    const std::vector<std::size_t> set6_kappa = {6, 5, 5, 4, 9, 6, 4, 8, 4, 5, 6, 5};

    const std::vector<std::size_t> set7_q1 = {180, 220, 250, 340, 320};
    const std::vector<std::size_t> set7_q2 = {110, 130, 150, 230, 200};
    const std::vector<std::size_t> set7_kappa = {1, 1, 2, 10, 5};

    const BuildOptions per_pair;
    const BuildOptions shared{SlackMode::PerDrone, SlackBitsRule::Budget};

    auto check_set = [&](const std::string& dir, const std::vector<std::size_t>* q1,
                         const std::vector<std::size_t>& q2,
                         const std::vector<std::size_t>* q2_shared,
                         const std::vector<std::size_t>& kappa) {
        const auto files = data_set(dir);
        REQUIRE(files.size() == kappa.size());
        for (std::size_t idx = 0; idx < files.size(); ++idx) {
            const ProblemInstance inst = load_instance(files[idx]);
            const ConflictSet conflicts =
                conflict_pairs(inst, OverlapConvention::PositiveOverlap);
            CHECK(conflicts.kappa() == kappa[idx]);
            const int m = inst.num_drones;
            const int n = inst.num_deliveries();
            if (q1)
                CHECK(predict_var_count_q1(m, n, inst.battery_budget, conflicts.kappa(),
                                           per_pair) == (*q1)[idx]);
            CHECK(predict_var_count_q2(m, n, inst.battery_budget, conflicts.kappa(), per_pair) ==
                  q2[idx]);
            if (q2_shared)
                CHECK(predict_var_count_q2(m, n, inst.battery_budget, conflicts.kappa(),
                                           shared) == (*q2_shared)[idx]);
        }
    };

    check_set("table1", &set1_q1, set1_q2, &set1_q2_shared, set1_kappa);
    check_set("table6", nullptr, set6_q2, &set6_q2_shared, set6_kappa);
    check_set("table7", &set7_q1, set7_q2, nullptr, set7_kappa);

    // five-term count for m=5, N=4, B=5 with three conflicting pairs
    CHECK(predict_var_count_q1(5, 4, 5.0, 3, per_pair) == 85);
}

TEST_CASE("two-delivery models have the documented ground states") {
    const ProblemInstance inst = toy_instance();
    const ConflictSet conflicts = conflict_pairs(inst, OverlapConvention::PositiveOverlap);
    REQUIRE(conflicts.empty());
    const PenaltyWeights weights = PenaltyWeights::defaults(2, 2);

    const QuboModel q1 = build_qubo1(inst, conflicts, weights);
    REQUIRE(q1.num_variables() == 16);
    const BruteForceResult ground1 = brute_force_qubo(q1);
    // both deliveries ride the same drone: one drone used, all penalties zero
    CHECK(ground1.energy == 1.0);

    const QuboModel q2 = build_qubo2(inst, conflicts, weights);
    REQUIRE(q2.num_variables() == 8);
    const BruteForceResult ground2 = brute_force_qubo(q2);
    // sigma = (0, 2): the spread objective (N - sigma) sigma vanishes
    CHECK(ground2.energy == 0.0);
}

TEST_CASE("all-zero assignment energy is the sum of violated constants") {
    ProblemInstance inst;
    inst.label = "single";
    inst.num_drones = 1;
    inst.battery_budget = 2.0;
    inst.costs = {1.0};
    inst.intervals = {{8, 9}};
    const QuboModel q1 = build_qubo1(inst, ConflictSet{}, PenaltyWeights::defaults(1, 1));
    const std::vector<std::uint8_t> zeros(q1.num_variables(), 0);
    // battery: 0.25 * (0 - 2)^2 = 1, assign-once: 30 * (0 - 1)^2 = 30
    CHECK(evaluate_energy(q1, zeros) == 31.0);
}

TEST_CASE("sparse energy evaluation matches a dense reference") {
    Rng rng(1234);
    for (int trial = 0; trial < 12; ++trial) {
        const int m = 1 + static_cast<int>(rng.next_below(2));
        const int n = 2 + static_cast<int>(rng.next_below(3));
        const ProblemInstance inst = random_integer_instance(rng, m, n, 5.0);
        const ConflictSet conflicts = conflict_pairs(inst, OverlapConvention::PositiveOverlap);
        const PenaltyWeights weights = PenaltyWeights::defaults(m, n);
        for (const QuboModel& model : {build_qubo1(inst, conflicts, weights),
                                       build_qubo2(inst, conflicts, weights)}) {
            for (int draw = 0; draw < 200; ++draw) {
                std::vector<std::uint8_t> bits(model.num_variables());
                for (auto& bit : bits) bit = static_cast<std::uint8_t>(rng.next_bit());
                const double expected = dense_energy(model, bits);
                CHECK(evaluate_energy(model, bits) ==
                      doctest::Approx(expected).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("quadratic terms are normalized and deduplicated") {
    const ProblemInstance inst = toy_instance();
    const QuboModel model =
        build_qubo2(inst, ConflictSet{}, PenaltyWeights::defaults(2, 2));
    const auto& quadratic = model.quadratic();
    CHECK(std::is_sorted(quadratic.begin(), quadratic.end(),
                         [](const QuadTerm& a, const QuadTerm& b) {
                             return std::pair{a.u, a.v} < std::pair{b.u, b.v};
                         }));
    for (const QuadTerm& term : quadratic) {
        CHECK(term.u < term.v);
        CHECK(term.v < model.num_variables());
        CHECK(term.weight != 0.0);
    }
    // adjacency mirrors the term list in both directions
    std::size_t degree_sum = 0;
    for (std::uint32_t v = 0; v < model.num_variables(); ++v)
        degree_sum += model.neighbor_indices(v).size();
    CHECK(degree_sum == 2 * quadratic.size());
}

TEST_CASE("constructive slack completion zeroes every penalty") {
    Rng rng(777);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.next_below(4));
        const double budget = std::vector<double>{3, 5, 6, 7}[rng.next_below(4)];
        // m = N keeps every instance trivially feasible
        const ProblemInstance inst = random_integer_instance(rng, n, n, budget);
        const ConflictSet conflicts = conflict_pairs(inst, OverlapConvention::PositiveOverlap);
        const ExactSolution solution = solve_exact(inst, conflicts);

        BinaryMatrix x(inst.num_drones, n);
        for (std::size_t part = 0; part < solution.partition.size(); ++part)
            for (int j = 0; j < n; ++j)
                if (solution.partition[part] >> j & 1) x.at(static_cast<int>(part), j) = 1;

        const PenaltyWeights weights = PenaltyWeights::defaults(inst.num_drones, n);
        const QuboModel q1 = build_qubo1(inst, conflicts, weights);
        const QuboModel q2 = build_qubo2(inst, conflicts, weights);
        // with all penalties at zero the five-term energy is the used-drone
        // count and the two-term energy is the spread objective
        CHECK(evaluate_energy(q1, complete_slacks(q1, inst, x)) ==
              static_cast<double>(solution.min_h0_drones));
        CHECK(evaluate_energy(q2, complete_slacks(q2, inst, x)) ==
              static_cast<double>(solution.min_h0));
    }
}

TEST_CASE("slack completion with fractional costs needs the scaled route") {
    // one-decimal costs: scaling by 10 makes loads integral, and the widened
    // register rule keeps the full-budget slack representable
    const ProblemInstance inst = load_instance(data_file("table7/n4.inst"));
    const ProblemInstance scaled = scale_costs(inst, 10.0);
    const ConflictSet conflicts = conflict_pairs(scaled, OverlapConvention::PositiveOverlap);
    const ExactSolution solution = solve_exact(scaled, conflicts);
    BinaryMatrix x(scaled.num_drones, scaled.num_deliveries());
    for (std::size_t part = 0; part < solution.partition.size(); ++part)
        for (int j = 0; j < scaled.num_deliveries(); ++j)
            if (solution.partition[part] >> j & 1) x.at(static_cast<int>(part), j) = 1;

    const PenaltyWeights weights =
        PenaltyWeights::defaults(scaled.num_drones, scaled.num_deliveries());
    const BuildOptions wide{SlackMode::PerPair, SlackBitsRule::BudgetPlusOne};
    const QuboModel q2 = build_qubo2(scaled, conflicts, weights, wide);
    CHECK(evaluate_energy(q2, complete_slacks(q2, scaled, x)) ==
          static_cast<double>(solution.min_h0));
}

TEST_CASE("energy by variable name") {
    const ProblemInstance inst = toy_instance();
    const QuboModel model = build_qubo2(inst, ConflictSet{}, PenaltyWeights::defaults(2, 2));
    std::unordered_map<std::string, int> assignment;
    for (const VarKey& key : model.registry()) assignment[key.to_string()] = 0;
    assignment["x[0][0]"] = 1;
    assignment["x[0][1]"] = 1;
    std::vector<std::uint8_t> bits(model.num_variables(), 0);
    bits[0] = bits[1] = 1;
    CHECK(evaluate_energy(model, assignment) == evaluate_energy(model, bits));

    assignment.erase("x[1][1]");
    CHECK_THROWS_WITH_AS(evaluate_energy(model, assignment),
                         doctest::Contains("missing variable 'x[1][1]'"), ValidationError);
}

TEST_CASE("spread objective of an assignment matrix") {
    ProblemInstance inst;
    inst.label = "h0";
    inst.num_drones = 2;
    inst.battery_budget = 10.0;
    inst.costs = {1, 1, 1};
    inst.intervals = {{8, 9}, {9, 10}, {10, 11}};
    BinaryMatrix x(2, 3);
    x.at(0, 0) = x.at(0, 1) = 1;  // sigma_0 = 2 -> (3-2)*2 = 2
    x.at(1, 2) = 1;               // sigma_1 = 1 -> (3-1)*1 = 2
    CHECK(evaluate_h0(inst, x) == 4.0);
    CHECK(evaluate_h0(inst, BinaryMatrix(2, 3)) == 0.0);
    CHECK_THROWS_AS(evaluate_h0(inst, BinaryMatrix(3, 2)), ValidationError);
}

TEST_CASE("oversized penalty weights are rejected at build time") {
    ProblemInstance inst = toy_instance();
    PenaltyWeights weights = PenaltyWeights::defaults(2, 2);
    weights.alpha[0] = 1e19;
    CHECK_THROWS_AS(build_qubo2(inst, ConflictSet{}, weights), BuildError);
    weights = PenaltyWeights::defaults(2, 2);
    weights.alpha[1] = -1.0;
    CHECK_THROWS_AS(build_qubo2(inst, ConflictSet{}, weights), ValidationError);
    // conflict indices must refer to existing deliveries
    CHECK_THROWS_AS(build_qubo2(inst, ConflictSet({{0, 5}}), PenaltyWeights::defaults(2, 2)),
                    ValidationError);
}

TEST_CASE("model JSON round-trips with metadata") {
    const ProblemInstance inst = load_instance(data_file("table7/n4.inst"));
    const ConflictSet conflicts = conflict_pairs(inst, OverlapConvention::PositiveOverlap);
    const QuboModel model = build_qubo2(inst, conflicts,
                                        PenaltyWeights::defaults(inst.num_drones, 4));
    const QuboModel back = parse_qubo_json(qubo_to_json(model), "round-trip");

    REQUIRE(back.num_variables() == model.num_variables());
    CHECK(back.registry() == model.registry());
    CHECK(back.linear() == model.linear());
    CHECK(back.quadratic() == model.quadratic());
    CHECK(back.offset() == model.offset());
    CHECK(back.info().formulation == 2);
    CHECK(back.info().num_drones == inst.num_drones);
    CHECK(back.info().num_deliveries == 4);
    CHECK(back.info().battery_budget == inst.battery_budget);
    CHECK(back.info().conflict_pairs == conflicts.pairs());
    CHECK(back.info().instance_label == inst.label);

    Rng rng(5);
    std::vector<std::uint8_t> bits(model.num_variables());
    for (auto& bit : bits) bit = static_cast<std::uint8_t>(rng.next_bit());
    CHECK(evaluate_energy(back, bits) == evaluate_energy(model, bits));
}

TEST_CASE("model files round-trip") {
    const fs::path path = fs::temp_directory_path() / "ddpp_test_model_roundtrip.json";
    const ProblemInstance inst = toy_instance();
    const QuboModel model = build_qubo1(inst, ConflictSet{}, PenaltyWeights::defaults(2, 2));
    save_qubo(model, path);
    const QuboModel back = load_qubo(path);
    CHECK(back.registry() == model.registry());
    CHECK(back.linear() == model.linear());
    CHECK(back.quadratic() == model.quadratic());
    fs::remove(path);
}

TEST_CASE("metadata-free model files are importable") {
    const std::string text = R"({
        "offset": 0.5,
        "variables": ["x[0][0]", "x[0][1]", "x[1][0]", "x[1][1]"],
        "linear": {"x[0][0]": -1.0, "x[1][1]": 2.0},
        "quadratic": [["x[0][0]", "x[0][1]", 3.0],
                      ["x[1][0]", "x[1][0]", 4.0],
                      ["x[0][1]", "x[0][0]", 1.0]]
    })";
    const QuboModel model = parse_qubo_json(text, "handmade");
    CHECK(model.num_variables() == 4);
    CHECK(model.info().formulation == 0);
    // dimensions inferred from the assignment block
    CHECK(model.info().num_drones == 2);
    CHECK(model.info().num_deliveries == 2);
    // the self-pair folds into the linear term, duplicate pairs merge
    CHECK(model.linear()[model.find(VarKey{VarKind::Assignment, 1, 0})] == 4.0);
    REQUIRE(model.quadratic().size() == 1);
    CHECK(model.quadratic()[0].weight == 4.0);
    CHECK(model.offset() == 0.5);
}

TEST_CASE("model import rejects malformed files") {
    CHECK_THROWS_AS(parse_qubo_json("[1,2,3", "bad"), ParseError);
    CHECK_THROWS_WITH_AS(parse_qubo_json(R"({"variables":[],"linear":{},"quadratic":[]})", "bad"),
                         doctest::Contains("missing field 'offset'"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_qubo_json(
            R"({"offset":0,"variables":["x[0][0]","x[0][0]"],"linear":{},"quadratic":[]})", "bad"),
        doctest::Contains("duplicate variable"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_qubo_json(
            R"({"offset":0,"variables":["x[0][0]"],"linear":{"y[0]":1.0},"quadratic":[]})", "bad"),
        doctest::Contains("unknown variable"), ParseError);
    CHECK_THROWS_AS(
        parse_qubo_json(
            R"({"offset":0,"variables":["x[0][0]"],"linear":{},"quadratic":[["x[0][0]",1.0]]})",
            "bad"),
        ParseError);
}
