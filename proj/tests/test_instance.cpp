#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ddpp/errors.hpp"
#include "ddpp/instance.hpp"
#include "ddpp/rng.hpp"

using namespace ddpp;
namespace fs = std::filesystem;

namespace {

ProblemInstance small_instance() {
    ProblemInstance inst;
    inst.label = "small";
    inst.num_drones = 2;
    inst.battery_budget = 10.0;
    inst.costs = {3.0, 4.0, 2.5};
    inst.intervals = {{8, 10}, {9, 11}, {12, 14}};
    return inst;
}

fs::path data_file(const std::string& rel) { return fs::path(DDPP_DATA_DIR) / rel; }

// Independent overlap oracle: two integer-hour windows conflict under the
// open rule when they share a whole unit hour, and under the closed rule when
// they share at least an integer time point. Scans hours directly instead of
// comparing endpoints.
bool shares_unit_hour(const TimeInterval& a, const TimeInterval& b) {
    for (int t = std::min(a.start, b.start); t < std::max(a.end, b.end); ++t)
        if (a.start <= t && t + 1 <= a.end && b.start <= t && t + 1 <= b.end) return true;
    return false;
}

bool shares_time_point(const TimeInterval& a, const TimeInterval& b) {
    for (int t = std::min(a.start, b.start); t <= std::max(a.end, b.end); ++t)
        if (a.start <= t && t <= a.end && b.start <= t && t <= b.end) return true;
    return false;
}

}  // namespace

TEST_CASE("validate accepts a well-formed instance") {
    CHECK_NOTHROW(small_instance().validate());
}

TEST_CASE("validate rejects broken instances") {
    auto broken = [](auto mutate) {
        ProblemInstance inst = small_instance();
        mutate(inst);
        return inst;
    };
    CHECK_THROWS_AS(broken([](auto& i) { i.num_drones = 0; }).validate(), ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.battery_budget = 0.0; }).validate(), ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.battery_budget = -5.0; }).validate(), ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.battery_budget = 1.0 / 0.0; }).validate(),
                    ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) {
                        i.costs.clear();
                        i.intervals.clear();
                    }).validate(),
                    ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.intervals.pop_back(); }).validate(), ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.costs[1] = 0.0; }).validate(), ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.costs[1] = -1.0; }).validate(), ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.costs[1] = 10.5; }).validate(), ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.intervals[0] = {9, 9}; }).validate(), ValidationError);
    CHECK_THROWS_AS(broken([](auto& i) { i.intervals[0] = {11, 9}; }).validate(), ValidationError);
}

TEST_CASE("a cost equal to the budget is allowed") {
    // such a delivery is still servable by a dedicated drone, and the shipped
    // benchmark data contains one
    ProblemInstance inst = small_instance();
    inst.costs[0] = inst.battery_budget;
    CHECK_NOTHROW(inst.validate());
}

TEST_CASE("conflict set normalizes pairs") {
    ConflictSet set({{2, 1}, {1, 2}, {0, 2}});
    REQUIRE(set.kappa() == 2);
    CHECK(set.pairs() == std::vector<std::pair<int, int>>{{0, 2}, {1, 2}});
    CHECK(set.contains(1, 2));
    CHECK(set.contains(2, 1));
    CHECK(set.contains(0, 2));
    CHECK_FALSE(set.contains(0, 1));
    CHECK_FALSE(ConflictSet{}.contains(0, 1));
    CHECK(ConflictSet{}.empty());
    CHECK_THROWS_AS(ConflictSet({{3, 3}}), ValidationError);
}

TEST_CASE("conflict pairs match an hour-scanning oracle on random instances") {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        ProblemInstance inst;
        inst.label = "trial";
        inst.num_drones = 1;
        inst.battery_budget = 100.0;
        const int n = 2 + static_cast<int>(rng.next_below(6));
        for (int j = 0; j < n; ++j) {
            inst.costs.push_back(1.0);
            const int len = 1 + static_cast<int>(rng.next_below(5));
            const int start = 8 + static_cast<int>(rng.next_below(13 - len));
            inst.intervals.push_back({start, start + len});
        }
        inst.validate();

        for (auto convention : {OverlapConvention::PositiveOverlap, OverlapConvention::Closed}) {
            std::vector<std::pair<int, int>> expected;
            for (int j = 0; j < n; ++j)
                for (int k = j + 1; k < n; ++k) {
                    const bool conflict = convention == OverlapConvention::PositiveOverlap
                                              ? shares_unit_hour(inst.intervals[j], inst.intervals[k])
                                              : shares_time_point(inst.intervals[j], inst.intervals[k]);
                    if (conflict) expected.emplace_back(j, k);
                }
            CHECK(conflict_pairs(inst, convention).pairs() == expected);
        }
    }
}

TEST_CASE("conventions differ exactly on touching intervals") {
    ProblemInstance inst = small_instance();
    inst.intervals = {{8, 10}, {10, 12}, {9, 11}};
    const ConflictSet open_set = conflict_pairs(inst, OverlapConvention::PositiveOverlap);
    const ConflictSet closed_set = conflict_pairs(inst, OverlapConvention::Closed);
    CHECK(open_set.pairs() == std::vector<std::pair<int, int>>{{0, 2}, {1, 2}});
    CHECK(closed_set.pairs() == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
}

TEST_CASE("4-delivery reference instance has the expected conflicts") {
    const ProblemInstance inst = load_instance(data_file("table7/n4.inst"));
    CHECK(conflict_pairs(inst, OverlapConvention::PositiveOverlap).pairs() ==
          std::vector<std::pair<int, int>>{{1, 3}});
    CHECK(conflict_pairs(inst, OverlapConvention::Closed).pairs() ==
          std::vector<std::pair<int, int>>{{0, 3}, {1, 3}});
}

TEST_CASE("generator is deterministic and respects documented bounds") {
    const ProblemInstance a = generate_instance(7, 10, 50, 70.0, CostDistribution::Uniform);
    const ProblemInstance b = generate_instance(7, 10, 50, 70.0, CostDistribution::Uniform);
    CHECK(a.costs == b.costs);
    CHECK(a.intervals == b.intervals);
    CHECK(a.label == b.label);

    const ProblemInstance c = generate_instance(8, 10, 50, 70.0, CostDistribution::Uniform);
    CHECK(a.costs != c.costs);

    for (auto dist : {CostDistribution::Uniform, CostDistribution::Gaussian}) {
        const ProblemInstance inst = generate_instance(11, 4, 200, 100.0, dist);
        CHECK_NOTHROW(inst.validate());
        CHECK(inst.num_deliveries() == 200);
        CHECK(inst.num_drones == 4);
        for (int j = 0; j < inst.num_deliveries(); ++j) {
            const double cost = inst.costs[j];
            CHECK(cost > 0.0);
            CHECK(cost < 100.0);
            // one decimal digit
            CHECK(std::abs(cost * 10.0 - std::round(cost * 10.0)) < 1e-9);
            const TimeInterval window = inst.intervals[j];
            CHECK(window.start >= 8);
            CHECK(window.end <= 20);
            const int len = window.end - window.start;
            CHECK(len >= 1);
            CHECK(len <= 2);
        }
        CHECK(inst.label.find("seed=11") != std::string::npos);
    }
}

TEST_CASE("generated cost distributions have the right location") {
    // 10^4 draws: both families center on B/2. Uniform(0,B) has sd B/sqrt(12),
    // the bell curve sd B/6; either way the sample mean is within a few
    // tenths, so a +-3 band is a safe location check at B=100.
    for (auto dist : {CostDistribution::Uniform, CostDistribution::Gaussian}) {
        const ProblemInstance inst = generate_instance(5, 1, 10000, 100.0, dist);
        double sum = 0.0;
        for (double cost : inst.costs) sum += cost;
        const double mean = sum / static_cast<double>(inst.costs.size());
        CHECK(mean > 47.0);
        CHECK(mean < 53.0);
    }
}

TEST_CASE("instance JSON round-trips") {
    const ProblemInstance inst = generate_instance(3, 5, 12, 70.0, CostDistribution::Gaussian);
    const ProblemInstance back = parse_instance_json(instance_to_json(inst), "round-trip");
    CHECK(back.label == inst.label);
    CHECK(back.num_drones == inst.num_drones);
    CHECK(back.battery_budget == inst.battery_budget);
    CHECK(back.costs == inst.costs);
    CHECK(back.intervals == inst.intervals);
}

TEST_CASE("instance file round-trips") {
    const fs::path path = fs::temp_directory_path() / "ddpp_test_instance_roundtrip.inst";
    const ProblemInstance inst = small_instance();
    save_instance(inst, path);
    const ProblemInstance back = load_instance(path);
    CHECK(back.costs == inst.costs);
    CHECK(back.intervals == inst.intervals);
    fs::remove(path);
}

TEST_CASE("instance parsing reports broken input") {
    CHECK_THROWS_AS(parse_instance_json("{not json", "bad"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_instance_json(R"({"label":"x","m":1,"costs":[1.0],"intervals":[[8,9]]})", "bad"),
        doctest::Contains("missing field 'B'"), ParseError);
    CHECK_THROWS_WITH_AS(
        parse_instance_json(R"({"label":"x","B":5.0,"costs":[1.0],"intervals":[[8,9]]})", "bad"),
        doctest::Contains("missing field 'm'"), ParseError);
    // loaded instances are validated, not just parsed
    CHECK_THROWS_AS(
        parse_instance_json(R"({"label":"x","m":1,"B":5.0,"costs":[9.0],"intervals":[[8,9]]})",
                            "bad"),
        ValidationError);
    CHECK_THROWS_AS(load_instance(fs::temp_directory_path() / "ddpp_no_such_file.inst"), IoError);
}

TEST_CASE("cost scaling multiplies costs and budget only") {
    const ProblemInstance inst = small_instance();
    const ProblemInstance scaled = scale_costs(inst, 10.0);
    CHECK(scaled.battery_budget == 100.0);
    CHECK(scaled.costs == std::vector<double>{30.0, 40.0, 25.0});
    CHECK(scaled.intervals == inst.intervals);
    CHECK(scaled.num_drones == inst.num_drones);
    CHECK(scaled.label.find("x10") != std::string::npos);
    // identity factor keeps the label
    CHECK(scale_costs(inst, 1.0).label == inst.label);
    // conflicts are a pure function of the intervals
    CHECK(conflict_pairs(scaled, OverlapConvention::PositiveOverlap).pairs() ==
          conflict_pairs(inst, OverlapConvention::PositiveOverlap).pairs());
}

TEST_CASE("shipped data files load and validate") {
    int count = 0;
    for (const auto& entry : fs::recursive_directory_iterator(DDPP_DATA_DIR)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".inst") continue;
        const ProblemInstance inst = load_instance(entry.path());
        CHECK(inst.num_drones == 10);
        CHECK(inst.num_deliveries() >= 4);
        CHECK(inst.num_deliveries() <= 12);
        ++count;
    }
    CHECK(count == 29);
}

TEST_CASE("enum names") {
    CHECK(std::string(to_string(OverlapConvention::PositiveOverlap)) == "open");
    CHECK(std::string(to_string(OverlapConvention::Closed)) == "closed");
    CHECK(std::string(to_string(CostDistribution::Uniform)) == "uniform");
    CHECK(std::string(to_string(CostDistribution::Gaussian)) == "gaussian");
}
