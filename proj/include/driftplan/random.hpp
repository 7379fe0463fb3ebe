#pragma once

// Deterministic random-number helpers. std::mt19937_64 is bit-exact across
// platforms, but the standard distributions are not, so every draw used for
// reproducible output goes through the hand-rolled distributions below.

#include <cstdint>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace driftplan {

// SplitMix64 step, used to derive decorrelated stream seeds from a base seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t s = base ^ (0x9e3779b97f4a7c15ULL + salt * 0xd1b54a32d192ed03ULL);
    splitmix64(s);
    return splitmix64(s);
}

inline std::mt19937_64 make_engine(std::uint64_t base, std::uint64_t salt = 0) {
    return std::mt19937_64(derive_seed(base, salt));
}

// Uniform double in [0, 1), 53-bit resolution.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), unbiased via rejection.
inline std::uint64_t uniform_index(std::mt19937_64& eng, std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = eng();
    } while (x >= limit);
    return x % n;
}

// Standard normal via Box-Muller; one value per call.
inline double standard_normal(std::mt19937_64& eng) {
    const double u1 = (static_cast<double>(eng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform01(eng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

template <typename T>
void shuffle_inplace(std::vector<T>& v, std::mt19937_64& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(uniform_index(eng, i));
        std::swap(v[i - 1], v[j]);
    }
}

// First k entries of a seeded partial Fisher-Yates over [0, n).
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                           std::mt19937_64& eng) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(uniform_index(eng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

// Index draw proportional to the given nonnegative mass vector.
inline std::size_t discrete_draw(const std::vector<double>& cumulative, std::mt19937_64& eng) {
    const double total = cumulative.back();
    const double x = uniform01(eng) * total;
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (cumulative[mid] <= x)
            lo = mid + 1;
        else
            hi = mid;
    }
    return lo;
}

}  // namespace driftplan
