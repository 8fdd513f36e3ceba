#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <string>
#include <vector>

namespace also {

// SplitMix64 finalizer. Used both for deriving independent seed streams
// and for stateless per-token sign sequences in the hashing featurizer.
inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent stream seed from (master seed, stream tag).
inline uint64_t derive_seed(uint64_t master, uint64_t tag) {
    return mix64(master ^ mix64(tag ^ 0xa0761d6478bd642fULL));
}

// FNV-1a 64-bit over bytes. Stable across platforms, unlike std::hash.
inline uint64_t fnv1a(const void* data, size_t len, uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(s.data(), s.size(), h);
}

inline uint64_t fnv1a(const char* s, uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(s, std::strlen(s), h);
}

// mt19937_64 wrapper with portable draw helpers. std::*_distribution is
// implementation-defined, so uniform/gaussian/shuffle are spelled out here
// to keep traces byte-identical for a given seed.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : gen_(seed) {}

    uint64_t next() { return gen_(); }

    // Uniform in [0,1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

    // Uniform integer in [0, n). Lemire multiply-shift; bias is O(n/2^64).
    uint64_t uniform_int(uint64_t n) {
        return static_cast<uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // Box-Muller, two uniforms per draw, no cached spare.
    double gaussian(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform01();
        double u2 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) *
                   std::cos(2.0 * 3.14159265358979323846 * u2);
        return mean + z * stddev;
    }

    // Fisher-Yates permutation of [0, n).
    std::vector<size_t> permutation(size_t n) {
        std::vector<size_t> idx(n);
        for (size_t i = 0; i < n; ++i) idx[i] = i;
        for (size_t i = n; i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(idx[i - 1], idx[j]);
        }
        return idx;
    }

private:
    std::mt19937_64 gen_;
};

} // namespace also
