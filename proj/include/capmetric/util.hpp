#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace capmetric {

/// Deterministic 64-bit generator (splitmix64). Used everywhere a seed is
/// required so that reports are byte-identical across runs and platforms.
struct SplitMix64 {
    uint64_t state;

    explicit SplitMix64(uint64_t seed) : state(seed) {}

    uint64_t next() {
        state += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0,1).
    double uniform() { return double(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }
};

inline uint64_t fnv1a64(const std::string& data) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Round-trip-safe decimal rendering (17 significant digits).
/// Infinities and NaN render as "inf"/"-inf"/"nan"; JSON emission quotes them.
inline std::string fmt17(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Worker count: CAPMETRIC_THREADS caps it, 0 or unset means auto.
inline int worker_count() {
    const char* env = std::getenv("CAPMETRIC_THREADS");
    long cap = 0;
    if (env && *env) cap = std::strtol(env, nullptr, 10);
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    if (cap <= 0) return int(hw);
    return int(std::min<long>(cap, long(hw) * 4));
}

/// Chunked parallel loop. `f(i)` must write only to slot i of preallocated
/// storage; merges are then deterministic regardless of thread count.
template <class F>
void parallel_for(size_t n, F f) {
    int workers = worker_count();
    if (workers <= 1 || n < 64) {
        for (size_t i = 0; i < n; ++i) f(i);
        return;
    }
    size_t nthreads = std::min<size_t>(size_t(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    size_t chunk = (n + nthreads - 1) / nthreads;
    for (size_t t = 0; t < nthreads; ++t) {
        size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &f] {
            for (size_t i = lo; i < hi; ++i) f(i);
        });
    }
    for (auto& th : pool) th.join();
}

/// Sorted-unique vertex set helpers.
inline std::vector<int> sorted_unique(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline bool is_subset(const std::vector<int>& a, const std::vector<int>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

inline std::vector<int> set_difference(const std::vector<int>& a, const std::vector<int>& b) {
    std::vector<int> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline bool set_contains(const std::vector<int>& s, int x) {
    return std::binary_search(s.begin(), s.end(), x);
}

}  // namespace capmetric
