#include "ddpp/qubo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "ddpp/errors.hpp"
#include "json.hpp"

namespace ddpp {

namespace {

// Anything beyond this magnitude is treated as a builder overflow; doubles
// still have integer resolution well past it, so legitimate penalty
// coefficients stay far below.
constexpr double kCoefficientLimit = 1e18;

char kind_letter(VarKind kind) {
    switch (kind) {
        case VarKind::Assignment: return 'x';
        case VarKind::DroneUsed: return 'y';
        case VarKind::BatterySlack: return 's';
        case VarKind::ConflictSlack: return 't';
        case VarKind::LinkSlack: return 'r';
        case VarKind::UsageSlack: return 'p';
    }
    return '?';
}

bool kind_has_two_indices(VarKind kind) { return kind != VarKind::DroneUsed; }

}  // namespace

std::string VarKey::to_string() const {
    char buf[48];
    if (kind_has_two_indices(kind))
        std::snprintf(buf, sizeof(buf), "%c[%d][%d]", kind_letter(kind), i, a);
    else
        std::snprintf(buf, sizeof(buf), "%c[%d]", kind_letter(kind), i);
    return buf;
}

VarKey VarKey::parse(const std::string& name) {
    if (name.empty()) throw ParseError("empty variable name");
    VarKind kind;
    switch (name[0]) {
        case 'x': kind = VarKind::Assignment; break;
        case 'y': kind = VarKind::DroneUsed; break;
        case 's': kind = VarKind::BatterySlack; break;
        case 't': kind = VarKind::ConflictSlack; break;
        case 'r': kind = VarKind::LinkSlack; break;
        case 'p': kind = VarKind::UsageSlack; break;
        default: throw ParseError("unknown variable name '" + name + "'");
    }
    int i = 0, a = 0, consumed = 0;
    if (kind_has_two_indices(kind)) {
        if (std::sscanf(name.c_str() + 1, "[%d][%d]%n", &i, &a, &consumed) != 2 ||
            1 + consumed != static_cast<int>(name.size()))
            throw ParseError("malformed variable name '" + name + "'");
    } else {
        if (std::sscanf(name.c_str() + 1, "[%d]%n", &i, &consumed) != 1 ||
            1 + consumed != static_cast<int>(name.size()))
            throw ParseError("malformed variable name '" + name + "'");
    }
    if (i < 0 || a < 0) throw ParseError("negative index in variable name '" + name + "'");
    return {kind, i, a};
}

PenaltyWeights PenaltyWeights::defaults(int num_drones, int num_deliveries, double k) {
    const double base = num_drones * static_cast<double>(num_deliveries) * num_deliveries / 4.0;
    PenaltyWeights w;
    w.k = k;
    w.alpha = {base, k * base, base, base, base};
    return w;
}

QuboModel::QuboModel(std::vector<VarKey> registry, std::vector<double> linear,
                     std::vector<QuadTerm> quadratic, double offset, ModelInfo info)
    : registry_(std::move(registry)),
      linear_(std::move(linear)),
      quadratic_(std::move(quadratic)),
      offset_(offset),
      info_(std::move(info)) {
    const auto n = registry_.size();
    if (linear_.size() != n)
        throw BuildError("linear coefficient count " + std::to_string(linear_.size()) +
                         " does not match registry size " + std::to_string(n));

    for (auto& term : quadratic_) {
        if (term.u == term.v)
            throw BuildError("self-pair on variable index " + std::to_string(term.u));
        if (term.u > term.v) std::swap(term.u, term.v);
        if (term.v >= n)
            throw BuildError("quadratic term references variable index " + std::to_string(term.v) +
                             " outside the registry");
    }
    std::sort(quadratic_.begin(), quadratic_.end(),
              [](const QuadTerm& a, const QuadTerm& b) {
                  return std::tie(a.u, a.v) < std::tie(b.u, b.v);
              });
    // merge duplicates, drop exact cancellations
    std::vector<QuadTerm> merged;
    merged.reserve(quadratic_.size());
    for (const auto& term : quadratic_) {
        if (!merged.empty() && merged.back().u == term.u && merged.back().v == term.v)
            merged.back().weight += term.weight;
        else
            merged.push_back(term);
    }
    std::erase_if(merged, [](const QuadTerm& t) { return t.weight == 0.0; });
    quadratic_ = std::move(merged);

    auto check = [](double v, const char* what) {
        if (!std::isfinite(v) || std::abs(v) > kCoefficientLimit)
            throw BuildError(std::string(what) + " coefficient " + std::to_string(v) +
                             " exceeds the representable range");
    };
    check(offset_, "offset");
    for (double h : linear_) check(h, "linear");
    for (const auto& term : quadratic_) check(term.weight, "quadratic");

    // CSR adjacency, both directions of every term
    adj_offsets_.assign(n + 1, 0);
    for (const auto& term : quadratic_) {
        ++adj_offsets_[term.u + 1];
        ++adj_offsets_[term.v + 1];
    }
    for (std::size_t v = 1; v <= n; ++v) adj_offsets_[v] += adj_offsets_[v - 1];
    adj_index_.resize(adj_offsets_[n]);
    adj_weight_.resize(adj_offsets_[n]);
    std::vector<std::uint32_t> cursor(adj_offsets_.begin(), adj_offsets_.end() - 1);
    for (const auto& term : quadratic_) {
        adj_index_[cursor[term.u]] = term.v;
        adj_weight_[cursor[term.u]++] = term.weight;
        adj_index_[cursor[term.v]] = term.u;
        adj_weight_[cursor[term.v]++] = term.weight;
    }
}

int QuboModel::find(const VarKey& key) const {
    for (std::size_t idx = 0; idx < registry_.size(); ++idx)
        if (registry_[idx] == key) return static_cast<int>(idx);
    return -1;
}

std::span<const std::uint32_t> QuboModel::neighbor_indices(std::uint32_t v) const {
    return {adj_index_.data() + adj_offsets_[v],
            adj_index_.data() + adj_offsets_[v + 1]};
}

std::span<const double> QuboModel::neighbor_weights(std::uint32_t v) const {
    return {adj_weight_.data() + adj_offsets_[v],
            adj_weight_.data() + adj_offsets_[v + 1]};
}

double QuboModel::max_flip_scale() const {
    double best = 0.0;
    for (std::size_t v = 0; v < registry_.size(); ++v) {
        double swing = std::abs(linear_[v]);
        for (double w : neighbor_weights(static_cast<std::uint32_t>(v))) swing += std::abs(w);
        best = std::max(best, swing);
    }
    return best;
}

double QuboModel::min_flip_scale() const {
    double best = 0.0;
    bool found = false;
    for (std::size_t v = 0; v < registry_.size(); ++v) {
        double smallest_quad = 0.0;
        for (double w : neighbor_weights(static_cast<std::uint32_t>(v))) {
            const double mag = std::abs(w);
            if (mag > 0.0 && (smallest_quad == 0.0 || mag < smallest_quad)) smallest_quad = mag;
        }
        const double scale = std::max(std::abs(linear_[v]), smallest_quad);
        // variables with no energy contribution at all do not set the scale
        if (scale > 0.0 && (!found || scale < best)) {
            best = scale;
            found = true;
        }
    }
    return best;
}

int battery_slack_bits(double battery_budget, SlackBitsRule rule) {
    if (!(battery_budget > 0.0))
        throw ValidationError("battery budget must be positive to size the slack register");
    const double threshold =
        rule == SlackBitsRule::Budget ? battery_budget : battery_budget + 1.0;
    int bits = 0;
    while (std::ldexp(1.0, bits) < threshold) {
        if (++bits > 62) throw BuildError("battery budget too large for a binary slack register");
    }
    return bits;
}

int usage_slack_bits(int num_deliveries) {
    if (num_deliveries < 1)
        throw ValidationError("delivery count must be positive to size the usage register");
    int bits = 0;
    while ((1LL << bits) < num_deliveries) ++bits;
    return bits;
}

namespace {

// Accumulates terms with index arithmetic; duplicate pairs are merged and the
// z^2 = z identity folds squares into linear coefficients.
class Assembler {
  public:
    explicit Assembler(std::vector<VarKey> registry)
        : registry_(std::move(registry)), linear_(registry_.size(), 0.0) {}

    void add_offset(double w) { offset_ += w; }
    void add_linear(int v, double w) { linear_[v] += w; }

    void add_quadratic(int u, int v, double w) {
        if (u == v) {
            linear_[u] += w;
            return;
        }
        if (u > v) std::swap(u, v);
        quad_[{u, v}] += w;
    }

    // weight * (sum_i coef_i z_i + constant)^2
    void add_squared(std::span<const std::pair<int, double>> terms, double constant,
                     double weight) {
        add_offset(weight * constant * constant);
        for (std::size_t a = 0; a < terms.size(); ++a) {
            const auto [va, ca] = terms[a];
            add_linear(va, weight * (ca * ca + 2.0 * constant * ca));
            for (std::size_t b = a + 1; b < terms.size(); ++b) {
                const auto [vb, cb] = terms[b];
                add_quadratic(va, vb, weight * 2.0 * ca * cb);
            }
        }
    }

    QuboModel finish(ModelInfo info) && {
        std::vector<QuadTerm> quadratic;
        quadratic.reserve(quad_.size());
        for (const auto& [key, w] : quad_)
            quadratic.push_back({static_cast<std::uint32_t>(key.first),
                                 static_cast<std::uint32_t>(key.second), w});
        return QuboModel(std::move(registry_), std::move(linear_), std::move(quadratic), offset_,
                         std::move(info));
    }

  private:
    std::vector<VarKey> registry_;
    std::vector<double> linear_;
    std::map<std::pair<int, int>, double> quad_;
    double offset_ = 0.0;
};

// Registry index arithmetic shared by both builders. Blocks are laid out in
// constraint order behind the assignment (and drone-used) blocks.
struct Layout {
    int m = 0, n = 0;
    int battery_bits = 0, usage_bits = 0;
    std::size_t kappa = 0;
    SlackMode slack_mode = SlackMode::PerPair;
    bool with_drone_vars = false;  // y, r, p blocks exist (five-term model)

    int x(int i, int j) const { return i * n + j; }
    int y(int i) const { return m * n + i; }
    int battery_base() const { return with_drone_vars ? m * n + m : m * n; }
    int s(int i, int l) const { return battery_base() + i * battery_bits + l; }
    int conflict_base() const { return battery_base() + m * battery_bits; }
    int conflict_slots_per_drone() const {
        if (kappa == 0) return 0;
        return slack_mode == SlackMode::PerPair ? static_cast<int>(kappa) : 1;
    }
    int t(int i, int p) const { return conflict_base() + i * conflict_slots_per_drone() + p; }
    int link_base() const { return conflict_base() + m * conflict_slots_per_drone(); }
    int r(int i, int j) const { return link_base() + i * n + j; }
    int usage_base() const { return link_base() + m * n; }
    int p(int i, int l) const { return usage_base() + i * usage_bits + l; }

    std::size_t total(bool five_term) const {
        std::size_t count = static_cast<std::size_t>(m) * n +
                            static_cast<std::size_t>(m) * battery_bits +
                            static_cast<std::size_t>(m) * conflict_slots_per_drone();
        if (five_term)
            count += static_cast<std::size_t>(m)            // y
                     + static_cast<std::size_t>(m) * n      // r
                     + static_cast<std::size_t>(m) * usage_bits;
        return count;
    }
};

Layout make_layout(const ProblemInstance& inst, const ConflictSet& conflicts,
                   const BuildOptions& options, bool with_drone_vars) {
    Layout lay;
    lay.m = inst.num_drones;
    lay.n = inst.num_deliveries();
    lay.battery_bits = battery_slack_bits(inst.battery_budget, options.slack_bits);
    lay.usage_bits = usage_slack_bits(lay.n);
    lay.kappa = conflicts.kappa();
    lay.slack_mode = options.slack_mode;
    lay.with_drone_vars = with_drone_vars;
    return lay;
}

std::vector<VarKey> make_registry(const Layout& lay) {
    std::vector<VarKey> reg;
    reg.reserve(lay.total(lay.with_drone_vars));
    for (int i = 0; i < lay.m; ++i)
        for (int j = 0; j < lay.n; ++j) reg.push_back({VarKind::Assignment, i, j});
    if (lay.with_drone_vars)
        for (int i = 0; i < lay.m; ++i) reg.push_back({VarKind::DroneUsed, i, 0});
    for (int i = 0; i < lay.m; ++i)
        for (int l = 0; l < lay.battery_bits; ++l) reg.push_back({VarKind::BatterySlack, i, l});
    for (int i = 0; i < lay.m; ++i)
        for (int p = 0; p < lay.conflict_slots_per_drone(); ++p)
            reg.push_back({VarKind::ConflictSlack, i, p});
    if (lay.with_drone_vars) {
        for (int i = 0; i < lay.m; ++i)
            for (int j = 0; j < lay.n; ++j) reg.push_back({VarKind::LinkSlack, i, j});
        for (int i = 0; i < lay.m; ++i)
            for (int l = 0; l < lay.usage_bits; ++l) reg.push_back({VarKind::UsageSlack, i, l});
    }
    return reg;
}

void check_build_inputs(const ProblemInstance& inst, const ConflictSet& conflicts,
                        const PenaltyWeights& weights, int num_weights) {
    inst.validate();
    for (const auto& [j, k] : conflicts.pairs())
        if (j < 0 || k >= inst.num_deliveries())
            throw ValidationError("conflict pair (" + std::to_string(j) + ", " +
                                  std::to_string(k) + ") references a delivery outside 0.." +
                                  std::to_string(inst.num_deliveries() - 1));
    for (int idx = 0; idx < num_weights; ++idx)
        if (!(weights.alpha[idx] > 0.0))
            throw ValidationError("penalty weight " + std::to_string(idx + 1) +
                                  " must be positive");
}

// battery constraint: (sum_j c_j x_ij + sum_l 2^l s_il - B)^2 per drone
void add_battery_penalty(Assembler& qubo, const Layout& lay, const ProblemInstance& inst,
                         double weight) {
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < lay.m; ++i) {
        terms.clear();
        for (int j = 0; j < lay.n; ++j) terms.emplace_back(lay.x(i, j), inst.costs[j]);
        for (int l = 0; l < lay.battery_bits; ++l)
            terms.emplace_back(lay.s(i, l), std::ldexp(1.0, l));
        qubo.add_squared(terms, -inst.battery_budget, weight);
    }
}

// assign-once constraint: (sum_i x_ij - 1)^2 per delivery
void add_assign_once_penalty(Assembler& qubo, const Layout& lay, double weight) {
    std::vector<std::pair<int, double>> terms;
    for (int j = 0; j < lay.n; ++j) {
        terms.clear();
        for (int i = 0; i < lay.m; ++i) terms.emplace_back(lay.x(i, j), 1.0);
        qubo.add_squared(terms, -1.0, weight);
    }
}

// conflict constraint: (x_ij + x_ik + t - 1)^2 per drone and conflicting pair
void add_conflict_penalty(Assembler& qubo, const Layout& lay, const ConflictSet& conflicts,
                          double weight) {
    for (int i = 0; i < lay.m; ++i) {
        int p = 0;
        for (const auto& [j, k] : conflicts.pairs()) {
            const int slack = lay.slack_mode == SlackMode::PerPair ? lay.t(i, p) : lay.t(i, 0);
            const std::pair<int, double> terms[] = {
                {lay.x(i, j), 1.0}, {lay.x(i, k), 1.0}, {slack, 1.0}};
            qubo.add_squared(terms, -1.0, weight);
            ++p;
        }
    }
}

ModelInfo make_info(int formulation, const ProblemInstance& inst, const ConflictSet& conflicts,
                    const PenaltyWeights& weights, const BuildOptions& options) {
    ModelInfo info;
    info.formulation = formulation;
    info.num_drones = inst.num_drones;
    info.num_deliveries = inst.num_deliveries();
    info.battery_budget = inst.battery_budget;
    info.weights = weights;
    info.options = options;
    info.conflict_pairs = conflicts.pairs();
    info.instance_label = inst.label;
    return info;
}

}  // namespace

QuboModel build_qubo1(const ProblemInstance& inst, const ConflictSet& conflicts,
                      const PenaltyWeights& weights, const BuildOptions& options) {
    check_build_inputs(inst, conflicts, weights, 5);
    const Layout lay = make_layout(inst, conflicts, options, true);
    Assembler qubo(make_registry(lay));

    // objective: number of drones switched on
    for (int i = 0; i < lay.m; ++i) qubo.add_linear(lay.y(i), 1.0);

    add_battery_penalty(qubo, lay, inst, weights.alpha[0]);
    add_assign_once_penalty(qubo, lay, weights.alpha[1]);
    add_conflict_penalty(qubo, lay, conflicts, weights.alpha[2]);

    // link constraint: (x_ij - y_i + r_ij)^2 ties assignments to used drones
    for (int i = 0; i < lay.m; ++i) {
        for (int j = 0; j < lay.n; ++j) {
            const std::pair<int, double> terms[] = {
                {lay.x(i, j), 1.0}, {lay.y(i), -1.0}, {lay.r(i, j), 1.0}};
            qubo.add_squared(terms, 0.0, weights.alpha[3]);
        }
    }

    // usage constraint: (-sum_j x_ij + y_i + sum_l 2^l p_il)^2 forces y_i on
    // any drone that serves something
    std::vector<std::pair<int, double>> terms;
    for (int i = 0; i < lay.m; ++i) {
        terms.clear();
        for (int j = 0; j < lay.n; ++j) terms.emplace_back(lay.x(i, j), -1.0);
        terms.emplace_back(lay.y(i), 1.0);
        for (int l = 0; l < lay.usage_bits; ++l)
            terms.emplace_back(lay.p(i, l), std::ldexp(1.0, l));
        qubo.add_squared(terms, 0.0, weights.alpha[4]);
    }

    return std::move(qubo).finish(make_info(1, inst, conflicts, weights, options));
}

QuboModel build_qubo2(const ProblemInstance& inst, const ConflictSet& conflicts,
                      const PenaltyWeights& weights, const BuildOptions& options) {
    check_build_inputs(inst, conflicts, weights, 3);
    const Layout lay = make_layout(inst, conflicts, options, false);
    Assembler qubo(make_registry(lay));

    // spread objective: sum_i (N - sigma_i) sigma_i with sigma_i the row load;
    // expanded per drone this is (N-1) sum_j x_ij - 2 sum_{j<k} x_ij x_ik
    for (int i = 0; i < lay.m; ++i) {
        for (int j = 0; j < lay.n; ++j) {
            qubo.add_linear(lay.x(i, j), static_cast<double>(lay.n - 1));
            for (int k = j + 1; k < lay.n; ++k)
                qubo.add_quadratic(lay.x(i, j), lay.x(i, k), -2.0);
        }
    }

    add_battery_penalty(qubo, lay, inst, weights.alpha[0]);
    add_assign_once_penalty(qubo, lay, weights.alpha[1]);
    add_conflict_penalty(qubo, lay, conflicts, weights.alpha[2]);

    return std::move(qubo).finish(make_info(2, inst, conflicts, weights, options));
}

std::size_t predict_var_count_q1(int m, int n, double battery_budget, std::size_t kappa,
                                 const BuildOptions& options) {
    const std::size_t conflict_slots =
        kappa == 0 ? 0 : (options.slack_mode == SlackMode::PerPair ? kappa : 1);
    return static_cast<std::size_t>(m)                                            // y
           + static_cast<std::size_t>(m) * n                                      // x
           + static_cast<std::size_t>(m) * battery_slack_bits(battery_budget, options.slack_bits)
           + static_cast<std::size_t>(m) * conflict_slots                         // t
           + static_cast<std::size_t>(m) * n                                      // r
           + static_cast<std::size_t>(m) * usage_slack_bits(n);                   // p
}

std::size_t predict_var_count_q2(int m, int n, double battery_budget, std::size_t kappa,
                                 const BuildOptions& options) {
    const std::size_t conflict_slots =
        kappa == 0 ? 0 : (options.slack_mode == SlackMode::PerPair ? kappa : 1);
    return static_cast<std::size_t>(m) * n
           + static_cast<std::size_t>(m) * battery_slack_bits(battery_budget, options.slack_bits)
           + static_cast<std::size_t>(m) * conflict_slots;
}

double evaluate_energy(const QuboModel& model, std::span<const std::uint8_t> bits) {
    if (bits.size() != model.num_variables())
        throw ValidationError("assignment covers " + std::to_string(bits.size()) +
                              " variables, model has " + std::to_string(model.num_variables()));
    double energy = model.offset();
    const auto& linear = model.linear();
    for (std::size_t v = 0; v < bits.size(); ++v)
        if (bits[v]) energy += linear[v];
    for (const auto& term : model.quadratic())
        if (bits[term.u] && bits[term.v]) energy += term.weight;
    return energy;
}

double evaluate_energy(const QuboModel& model,
                       const std::unordered_map<std::string, int>& by_name) {
    std::vector<std::uint8_t> bits(model.num_variables(), 0);
    for (std::size_t v = 0; v < model.num_variables(); ++v) {
        const std::string name = model.registry()[v].to_string();
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw ValidationError("assignment is missing variable '" + name + "'");
        if (it->second != 0 && it->second != 1)
            throw ValidationError("variable '" + name + "' must be 0 or 1, got " +
                                  std::to_string(it->second));
        bits[v] = static_cast<std::uint8_t>(it->second);
    }
    return evaluate_energy(model, bits);
}

double evaluate_h0(const ProblemInstance& inst, const BinaryMatrix& x) {
    if (x.rows != inst.num_drones || x.cols != inst.num_deliveries())
        throw ValidationError("assignment matrix is " + std::to_string(x.rows) + "x" +
                              std::to_string(x.cols) + ", instance needs " +
                              std::to_string(inst.num_drones) + "x" +
                              std::to_string(inst.num_deliveries()));
    const double n = inst.num_deliveries();
    double h0 = 0.0;
    for (int i = 0; i < x.rows; ++i) {
        const double sigma = x.row_sum(i);
        h0 += (n - sigma) * sigma;
    }
    return h0;
}

std::vector<std::uint8_t> complete_slacks(const QuboModel& model, const ProblemInstance& inst,
                                          const BinaryMatrix& x) {
    const auto& info = model.info();
    if (x.rows != info.num_drones || x.cols != info.num_deliveries)
        throw ValidationError("assignment matrix does not match the model dimensions");

    const int m = info.num_drones;
    const int n = info.num_deliveries;

    std::vector<double> load(m, 0.0);
    std::vector<int> sigma(m, 0), used(m, 0);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) {
            if (x.at(i, j)) {
                load[i] += inst.costs[j];
                ++sigma[i];
            }
        }
        used[i] = sigma[i] > 0 ? 1 : 0;
    }

    // best shared conflict-slack value per drone (per-drone mode only)
    std::vector<int> shared_t(m, 0);
    if (info.options.slack_mode == SlackMode::PerDrone && !info.conflict_pairs.empty()) {
        for (int i = 0; i < m; ++i) {
            double cost[2] = {0.0, 0.0};
            for (const auto& [j, k] : info.conflict_pairs) {
                for (int t = 0; t < 2; ++t) {
                    const double r = x.at(i, j) + x.at(i, k) + t - 1.0;
                    cost[t] += r * r;
                }
            }
            shared_t[i] = cost[1] < cost[0] ? 1 : 0;
        }
    }

    auto register_bit = [](long long value, int bit) -> std::uint8_t {
        return static_cast<std::uint8_t>((value >> bit) & 1);
    };

    const int battery_bits = battery_slack_bits(inst.battery_budget, info.options.slack_bits);
    const long long battery_cap = (1LL << battery_bits) - 1;
    const int usage_bits = usage_slack_bits(n);
    const long long usage_cap = (1LL << usage_bits) - 1;

    std::vector<std::uint8_t> bits(model.num_variables(), 0);
    for (std::size_t v = 0; v < model.num_variables(); ++v) {
        const VarKey& key = model.registry()[v];
        switch (key.kind) {
            case VarKind::Assignment:
                bits[v] = x.at(key.i, key.a);
                break;
            case VarKind::DroneUsed:
                bits[v] = static_cast<std::uint8_t>(used[key.i]);
                break;
            case VarKind::BatterySlack: {
                const long long s = std::clamp(
                    std::llround(inst.battery_budget - load[key.i]), 0LL, battery_cap);
                bits[v] = register_bit(s, key.a);
                break;
            }
            case VarKind::ConflictSlack: {
                if (info.options.slack_mode == SlackMode::PerDrone) {
                    bits[v] = static_cast<std::uint8_t>(shared_t[key.i]);
                } else {
                    const auto& [j, k] = info.conflict_pairs.at(key.a);
                    const int t = 1 - x.at(key.i, j) - x.at(key.i, k);
                    bits[v] = static_cast<std::uint8_t>(std::clamp(t, 0, 1));
                }
                break;
            }
            case VarKind::LinkSlack:
                bits[v] = static_cast<std::uint8_t>(
                    std::clamp(used[key.i] - static_cast<int>(x.at(key.i, key.a)), 0, 1));
                break;
            case VarKind::UsageSlack: {
                const long long p = std::clamp(
                    static_cast<long long>(sigma[key.i] - used[key.i]), 0LL, usage_cap);
                bits[v] = register_bit(p, key.a);
                break;
            }
        }
    }
    return bits;
}

std::string qubo_to_json(const QuboModel& model) {
    nlohmann::json doc;
    doc["offset"] = model.offset();

    auto variables = nlohmann::json::array();
    for (const auto& key : model.registry()) variables.push_back(key.to_string());
    doc["variables"] = variables;

    nlohmann::json linear = nlohmann::json::object();
    for (std::size_t v = 0; v < model.num_variables(); ++v)
        linear[model.registry()[v].to_string()] = model.linear()[v];
    doc["linear"] = linear;

    auto quadratic = nlohmann::json::array();
    for (const auto& term : model.quadratic())
        quadratic.push_back({model.registry()[term.u].to_string(),
                             model.registry()[term.v].to_string(), term.weight});
    doc["quadratic"] = quadratic;

    const auto& info = model.info();
    nlohmann::json meta;
    meta["formulation"] = info.formulation;
    meta["m"] = info.num_drones;
    meta["n"] = info.num_deliveries;
    meta["B"] = info.battery_budget;
    meta["k"] = info.weights.k;
    meta["alpha"] = info.weights.alpha;
    meta["slack_mode"] = to_string(info.options.slack_mode);
    meta["slack_bits"] = to_string(info.options.slack_bits);
    auto conflicts = nlohmann::json::array();
    for (const auto& [j, k] : info.conflict_pairs) conflicts.push_back({j, k});
    meta["conflicts"] = conflicts;
    meta["instance"] = info.instance_label;
    doc["metadata"] = meta;

    return doc.dump(2) + "\n";
}

void save_qubo(const QuboModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write model file '" + path.string() + "'");
    out << qubo_to_json(model);
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

QuboModel parse_qubo_json(const std::string& text, const std::string& origin) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(origin + ": not valid JSON: " + e.what());
    }
    for (const char* field : {"offset", "variables", "linear", "quadratic"}) {
        if (!doc.contains(field))
            throw ParseError(origin + ": missing field '" + field + "'");
    }

    try {
        std::vector<VarKey> registry;
        std::unordered_map<std::string, int> index;
        for (const auto& name : doc["variables"]) {
            const std::string s = name.get<std::string>();
            if (!index.emplace(s, static_cast<int>(registry.size())).second)
                throw ParseError(origin + ": duplicate variable '" + s + "'");
            registry.push_back(VarKey::parse(s));
        }

        auto lookup = [&](const std::string& name) {
            auto it = index.find(name);
            if (it == index.end())
                throw ParseError(origin + ": coefficient references unknown variable '" + name +
                                 "'");
            return it->second;
        };

        std::vector<double> linear(registry.size(), 0.0);
        for (const auto& [name, value] : doc["linear"].items())
            linear[lookup(name)] += value.get<double>();

        std::vector<QuadTerm> quadratic;
        for (const auto& entry : doc["quadratic"]) {
            if (!entry.is_array() || entry.size() != 3)
                throw ParseError(origin + ": each quadratic entry must be [u, v, weight]");
            const int u = lookup(entry[0].get<std::string>());
            const int v = lookup(entry[1].get<std::string>());
            const double w = entry[2].get<double>();
            if (u == v)
                linear[u] += w;  // z^2 = z
            else
                quadratic.push_back({static_cast<std::uint32_t>(std::min(u, v)),
                                     static_cast<std::uint32_t>(std::max(u, v)), w});
        }

        ModelInfo info;
        if (doc.contains("metadata")) {
            const auto& meta = doc["metadata"];
            info.formulation = meta.value("formulation", 0);
            info.num_drones = meta.value("m", 0);
            info.num_deliveries = meta.value("n", 0);
            info.battery_budget = meta.value("B", 0.0);
            info.weights.k = meta.value("k", 120.0);
            if (meta.contains("alpha")) {
                const auto alpha = meta["alpha"].get<std::vector<double>>();
                for (std::size_t idx = 0; idx < alpha.size() && idx < 5; ++idx)
                    info.weights.alpha[idx] = alpha[idx];
            }
            if (meta.value("slack_mode", std::string("per-pair")) == std::string("per-drone"))
                info.options.slack_mode = SlackMode::PerDrone;
            if (meta.value("slack_bits", std::string("budget")) == std::string("budget+1"))
                info.options.slack_bits = SlackBitsRule::BudgetPlusOne;
            for (const auto& pair : meta.value("conflicts", nlohmann::json::array()))
                info.conflict_pairs.emplace_back(pair[0].get<int>(), pair[1].get<int>());
            info.instance_label = meta.value("instance", std::string());
        }
        if (info.num_drones == 0 || info.num_deliveries == 0) {
            // fall back to the assignment block for the matrix dimensions
            for (const auto& key : registry) {
                if (key.kind != VarKind::Assignment) continue;
                info.num_drones = std::max(info.num_drones, key.i + 1);
                info.num_deliveries = std::max(info.num_deliveries, key.a + 1);
            }
        }

        return QuboModel(std::move(registry), std::move(linear), std::move(quadratic),
                         doc["offset"].get<double>(), std::move(info));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": malformed field: " + e.what());
    }
}

QuboModel load_qubo(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open model file '" + path.string() + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_qubo_json(buffer.str(), path.string());
}

const char* to_string(SlackMode mode) {
    return mode == SlackMode::PerPair ? "per-pair" : "per-drone";
}

const char* to_string(SlackBitsRule rule) {
    return rule == SlackBitsRule::Budget ? "budget" : "budget+1";
}

}  // namespace ddpp
