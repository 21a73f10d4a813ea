#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace dynaprune {

// Seed derivation: every consumer of randomness (learner init, batch
// shuffling, policy draws, ...) gets its own stream derived from one root
// seed, so whole experiments replay bit-identically.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t root, std::string_view stream,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 1469598103934665603ull;  // FNV-1a over the stream name
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    std::uint64_t s = root ^ h;
    splitmix64(s);
    s ^= index;
    splitmix64(s);
    return splitmix64(s);
}

// mt19937_64 with self-contained distributions. The standard pins the
// engine's output but not the library distributions, so uniform/normal are
// implemented here to keep results identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from [0, n), sorted ascending.
    std::vector<std::int64_t> sample_without_replacement(std::int64_t n, std::int64_t k) {
        if (k < 0 || k > n) {
            throw std::invalid_argument("sample_without_replacement: k out of range");
        }
        std::vector<std::int64_t> pool(static_cast<std::size_t>(n));
        for (std::int64_t i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (std::int64_t i = 0; i < k; ++i) {
            std::int64_t j = i + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(n - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(k));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dynaprune
