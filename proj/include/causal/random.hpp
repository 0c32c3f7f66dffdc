#pragma once

#include <cstdint>
#include <random>

namespace causal {

// splitmix64 finalizer. Every derived seed in the project goes through this,
// so streams for (master, i) are stable across platforms and thread counts.
std::uint64_t mix64(std::uint64_t x);

// Seed for the i-th independent stream under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i);

// Draws are implemented here rather than with <random> distributions, whose
// output is implementation-defined; sampled data must be bit-identical across
// standard libraries for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();                 // [0, 1)
    double uniform(double lo, double hi);
    double normal();                  // standard normal, Marsaglia polar
    double laplace(double scale);
    double exponential();
    bool bernoulli(double p);
    std::size_t index(std::size_t n);  // uniform in [0, n)

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace causal
