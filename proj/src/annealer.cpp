#include "ddpp/annealer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "ddpp/errors.hpp"

namespace ddpp {

namespace {

// exp(-x) underflows any acceptance draw long before this; skipping the draw
// entirely keeps the stream consumption of hopeless proposals fixed.
constexpr double kRejectExponent = 44.0;

double interpolate_beta(const AnnealSchedule& schedule, int sweep) {
    if (schedule.sweeps <= 1) return schedule.beta_start;
    return schedule.beta_start + (schedule.beta_end - schedule.beta_start) *
                                     static_cast<double>(sweep) / (schedule.sweeps - 1);
}

Sample run_read(const QuboModel& model, const AnnealSchedule& schedule, std::uint64_t seed,
                int read_index) {
    const std::size_t n = model.num_variables();
    Rng rng = make_read_rng(seed, read_index);
    std::vector<std::uint8_t> bits = initial_assignment(n, rng);

    // local fields: f[v] = h_v + sum_u J_uv z_u, so a flip of v changes the
    // energy by (1 - 2 z_v) f[v]
    std::vector<double> field(model.linear().begin(), model.linear().end());
    for (const auto& term : model.quadratic()) {
        if (bits[term.u]) field[term.v] += term.weight;
        if (bits[term.v]) field[term.u] += term.weight;
    }
    double energy = evaluate_energy(model, bits);

    std::vector<std::uint32_t> order(n);
    for (std::size_t v = 0; v < n; ++v) order[v] = static_cast<std::uint32_t>(v);

    for (int sweep = 0; sweep < schedule.sweeps; ++sweep) {
        const double beta = interpolate_beta(schedule, sweep);
        for (std::size_t a = n - 1; a > 0; --a)
            std::swap(order[a], order[rng.next_below(static_cast<std::uint32_t>(a + 1))]);

        for (std::size_t idx = 0; idx < n; ++idx) {
            const std::uint32_t v = order[idx];
            const double delta_e = (1 - 2 * static_cast<int>(bits[v])) * field[v];
            bool accept;
            if (delta_e <= 0.0) {
                accept = true;
            } else {
                const double exponent = beta * delta_e;
                accept = exponent < kRejectExponent && rng.next_double() < std::exp(-exponent);
            }
            if (!accept) continue;

            bits[v] ^= 1;
            energy += delta_e;
            const double step = bits[v] ? 1.0 : -1.0;
            const auto neighbors = model.neighbor_indices(v);
            const auto weights = model.neighbor_weights(v);
            for (std::size_t e = 0; e < neighbors.size(); ++e)
                field[neighbors[e]] += step * weights[e];
        }
    }

    // incremental bookkeeping must agree with a from-scratch evaluation
    const double checked = evaluate_energy(model, bits);
    if (std::abs(energy - checked) > 1e-6 * (1.0 + std::abs(checked)))
        throw SolverError("incremental energy " + std::to_string(energy) +
                          " drifted from full evaluation " + std::to_string(checked) +
                          " in read " + std::to_string(read_index));

    return Sample{std::move(bits), checked, read_index};
}

}  // namespace

std::pair<double, double> default_beta_range(const QuboModel& model) {
    const double largest = model.max_flip_scale();
    if (largest <= 0.0)
        throw ValidationError(
            "model has no nonzero coefficients, no temperature scale exists");
    const double smallest = model.min_flip_scale();
    return {std::log(2.0) / largest, std::log(1000.0) / smallest};
}

AnnealSchedule default_schedule(const QuboModel& model, int sweeps) {
    const auto [lo, hi] = default_beta_range(model);
    return AnnealSchedule{lo, hi, sweeps};
}

SampleSet::SampleSet(std::vector<Sample> samples, std::uint64_t seed)
    : samples_(std::move(samples)), seed_(seed) {
    std::sort(samples_.begin(), samples_.end(), [](const Sample& a, const Sample& b) {
        return std::tie(a.energy, a.read_index) < std::tie(b.energy, b.read_index);
    });
}

const Sample& SampleSet::best_sample() const {
    if (samples_.empty()) throw SolverError("sample set is empty");
    return samples_.front();
}

Rng make_read_rng(std::uint64_t seed, int read_index) {
    return Rng::child(seed, static_cast<std::uint64_t>(read_index));
}

std::vector<std::uint8_t> initial_assignment(std::size_t num_variables, Rng& rng) {
    std::vector<std::uint8_t> bits(num_variables);
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.next_bit());
    return bits;
}

SampleSet anneal(const QuboModel& model, const AnnealSchedule& schedule, int num_reads,
                 std::uint64_t seed, int jobs) {
    if (model.num_variables() == 0) throw ValidationError("model has no variables");
    if (num_reads < 1)
        throw ValidationError("need at least one read, got " + std::to_string(num_reads));
    if (schedule.sweeps < 1)
        throw ValidationError("need at least one sweep, got " + std::to_string(schedule.sweeps));
    if (!std::isfinite(schedule.beta_start) || !std::isfinite(schedule.beta_end) ||
        schedule.beta_start <= 0.0 || schedule.beta_end <= 0.0)
        throw ValidationError("inverse temperatures must be positive and finite");
    if (schedule.beta_start > schedule.beta_end)
        throw ValidationError("beta_start must not exceed beta_end");
    if (jobs < 1) throw ValidationError("need at least one worker, got " + std::to_string(jobs));

    std::vector<Sample> samples(num_reads);
    const int workers = std::min(jobs, num_reads);
    if (workers == 1) {
        for (int read = 0; read < num_reads; ++read)
            samples[read] = run_read(model, schedule, seed, read);
    } else {
        // reads are independent streams, so any scheduling gives the same set
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_lock;
        auto worker = [&] {
            try {
                for (int read = next.fetch_add(1); read < num_reads; read = next.fetch_add(1))
                    samples[read] = run_read(model, schedule, seed, read);
            } catch (...) {
                const std::lock_guard<std::mutex> guard(failure_lock);
                if (!failure) failure = std::current_exception();
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    return SampleSet(std::move(samples), seed);
}

void write_samples_csv(std::ostream& out, const QuboModel& model, const SampleSet& samples) {
    out << "# seed=" << samples.seed() << " reads=" << samples.num_reads()
        << " variables=" << model.num_variables() << "\n";
    if (!samples.samples().empty()) {
        const Sample& best = samples.best_sample();
        out << "# best: read=" << best.read_index << " energy=" << best.energy << " assignment=";
        for (auto b : best.bits) out << static_cast<int>(b);
        out << "\n";
    }
    out << "read,energy";
    for (const auto& key : model.registry()) out << ',' << key.to_string();
    out << "\n";
    for (const auto& sample : samples.samples()) {
        out << sample.read_index << ',' << sample.energy;
        for (auto b : sample.bits) out << ',' << static_cast<int>(b);
        out << "\n";
    }
}

}  // namespace ddpp
