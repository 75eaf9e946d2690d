#pragma once

#include <cmath>
#include <cstdint>

#include "duality/amplitude.hpp"

namespace duality {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Derive an independent sub-seed, e.g. one per sweep point.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return detail::splitmix64(seed ^ detail::splitmix64(index));
}

/// Counter-based random stream in the Philox2x64 style: the generator is a
/// pure function of (key, stream, counter), so any window of a run can be
/// simulated on any worker in any order and still produce the same draws.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(seed), stream_(stream) {}

    std::uint64_t next_u64() {
        if (avail_ == 0)
            refill();
        return buf_[--avail_];
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform_phase() { return uniform() * kTwoPi; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Exact Poisson sampling by summing exponential inter-arrival times;
    /// underflow-safe for any mean.
    std::uint64_t poisson(double mean) {
        if (mean <= 0.0)
            return 0;
        std::uint64_t n = 0;
        double acc = 0.0;
        for (;;) {
            double u = uniform();
            acc += -std::log1p(-u);
            if (acc >= mean)
                return n;
            ++n;
        }
    }

private:
    void refill() {
        // Philox2x64-10: two 64-bit lanes, ten S-box rounds with a Weyl key.
        constexpr std::uint64_t kMul = 0xd2b74407b1ce6e93ULL;
        constexpr std::uint64_t kWeyl = 0x9e3779b97f4a7c15ULL;
        std::uint64_t c0 = stream_;
        std::uint64_t c1 = ctr_++;
        std::uint64_t k = key_;
        for (int round = 0; round < 10; ++round) {
            const unsigned __int128 prod =
                static_cast<unsigned __int128>(kMul) * c0;
            const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
            const std::uint64_t lo = static_cast<std::uint64_t>(prod);
            c0 = hi ^ k ^ c1;
            c1 = lo;
            k += kWeyl;
        }
        buf_[0] = c0;
        buf_[1] = c1;
        avail_ = 2;
    }

    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t ctr_ = 0;
    std::uint64_t buf_[2] = {0, 0};
    int avail_ = 0;
};

} // namespace duality
