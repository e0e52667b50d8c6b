#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "ddpp/qubo.hpp"
#include "ddpp/rng.hpp"

namespace ddpp {

// Inverse temperature ramp. beta is interpolated linearly from beta_start to
// beta_end over the sweeps of one read; with a single sweep only beta_start
// is used.
struct AnnealSchedule {
    double beta_start = 0.1;
    double beta_end = 10.0;
    int sweeps = 1000;
};

// Default range for a model: the hottest sweep accepts the largest possible
// uphill move with probability 1/2, the coldest accepts the smallest
// single-variable move with probability 1/1000. Throws ValidationError on a
// model with no nonzero coefficients, where no scale exists.
std::pair<double, double> default_beta_range(const QuboModel& model);
AnnealSchedule default_schedule(const QuboModel& model, int sweeps = 1000);

struct Sample {
    std::vector<std::uint8_t> bits;
    double energy = 0.0;
    int read_index = 0;
};

// All reads of one anneal call, sorted by (energy, read_index) ascending.
class SampleSet {
  public:
    SampleSet() = default;
    SampleSet(std::vector<Sample> samples, std::uint64_t seed);

    const std::vector<Sample>& samples() const { return samples_; }
    std::size_t num_reads() const { return samples_.size(); }
    std::uint64_t seed() const { return seed_; }

    // Lowest energy; ties resolved toward the lowest read index by the sort.
    const Sample& best_sample() const;

  private:
    std::vector<Sample> samples_;
    std::uint64_t seed_ = 0;
};

// RNG stream for one read. anneal() uses exactly this derivation, so a read
// can be replayed in isolation: the stream first yields the initial
// assignment bits (one next_bit per registry slot, in registry order), then
// drives the sweep loop.
Rng make_read_rng(std::uint64_t seed, int read_index);
std::vector<std::uint8_t> initial_assignment(std::size_t num_variables, Rng& rng);

// Multi-read simulated annealing with Metropolis acceptance. Each read is an
// independent restart on its own RNG stream; results are identical for a
// given (model, schedule, num_reads, seed) no matter how reads are scheduled
// across threads. Within a sweep variables are visited in a random order
// reshuffled every sweep. Energies are tracked incrementally and re-verified
// against a full evaluation at the end of every read.
SampleSet anneal(const QuboModel& model, const AnnealSchedule& schedule, int num_reads,
                 std::uint64_t seed, int jobs = 1);

// Tabular export: header line, then one row per read with columns
// read, energy, and one column per registry variable. A compact best-only
// summary is appended as comment lines.
void write_samples_csv(std::ostream& out, const QuboModel& model, const SampleSet& samples);

}  // namespace ddpp
