#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rmd {

/// Bad or inconsistent configuration / arguments. CLI exit code 1.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Problems with input data (files, labels, preconditions on data). CLI exit code 2.
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure (non-convergence, singular systems). CLI exit code 3.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic random stream (xoshiro256++ seeded via splitmix64).
/// Self-contained so that identical seeds give identical streams on any
/// platform, independent of the standard library's distributions.
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed);

    std::uint64_t next_u64();
    /// Uniform in [0, 1).
    double next_double();
    /// Uniform in (0, 1].
    double next_open_double();
    /// Uniform integer in [0, bound), unbiased.
    std::uint64_t next_below(std::uint64_t bound);
    /// Standard normal via Box-Muller (pairs cached).
    double next_gaussian();

private:
    std::uint64_t state_[4];
    double cached_gaussian_ = 0.0;
    bool has_cached_gaussian_ = false;
};

/// Derive a child seed from a root seed, a stage name and an index.
/// All randomness in the library flows from a root seed through this split.
std::uint64_t derive_seed(std::uint64_t root, std::string_view stage, std::uint64_t index = 0);

/// Run fn(i) for i in [begin, end) on up to `workers` threads (0 = hardware
/// concurrency). Results must be written to disjoint per-index slots so the
/// outcome is independent of the thread count.
void parallel_for(std::size_t begin, std::size_t end,
                  const std::function<void(std::size_t)>& fn, int workers = 0);

}  // namespace rmd
