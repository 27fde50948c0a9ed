#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace psd {

using token_id = std::int32_t;

struct context_overflow_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct trace_miss_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct remote_backend_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct undefined_rate_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// splitmix64 finalizer; the workhorse behind rng_stream and all config hashing
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (0x9e3779b97f4a7c15ull + (b << 6) + (b >> 2)) ^ mix64(b));
}

// Deterministic counter-free random stream. Substreams derived with derive()
// are independent of draws taken from the parent, so instrumenting one stage
// never perturbs another.
class rng_stream {
public:
    explicit rng_stream(std::uint64_t seed) : seed_(seed), state_(mix64(seed)) {}

    std::uint64_t next_u64() {
        state_ = mix64(state_);
        return state_;
    }

    // uniform in [0, 1), 53-bit resolution
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    rng_stream derive(std::uint64_t label) const {
        return rng_stream(mix64(seed_, label));
    }

private:
    std::uint64_t seed_;
    std::uint64_t state_;
};

// Simulated wall clock. Monotone; charged per model forward invocation.
struct sim_clock {
    double now = 0.0;

    void charge(double seconds) {
        if (seconds < 0.0) {
            throw std::invalid_argument("sim_clock: negative charge");
        }
        now += seconds;
    }
};

} // namespace psd
