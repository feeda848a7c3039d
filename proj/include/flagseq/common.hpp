// Shared basics: complex alias, error types, hashing, parallel loops.

#pragma once

#include <atomic>
#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace flagseq {

using cplx = std::complex<double>;

constexpr double kPi = 3.14159265358979323846;

// Bad argument / infeasible parameter combination. CLI maps this to exit 2.
class param_error : public std::invalid_argument {
public:
    explicit param_error(const std::string& what) : std::invalid_argument(what) {}
};

// A numeric-domain violation at runtime (zero energy, singular matrix, ...).
class domain_error : public std::domain_error {
public:
    explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

// FNV-1a 64-bit content hash, used by run manifests.
inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 1469598103934665603ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

// SplitMix64 step; used to derive independent per-shard RNG seeds from a
// master seed so that sharded Monte Carlo runs are reproducible.
inline std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Runs fn(i) for i in [0, n). With threads <= 1 the loop is sequential.
// Work is split into contiguous chunks; fn must not touch shared mutable
// state outside its own index range.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (threads <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace flagseq
