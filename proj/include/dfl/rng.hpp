#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace dfl {

// Deterministic random streams. Every stream is derived from the experiment
// master seed plus an explicit path (node id, round, purpose tag), so results
// never depend on scheduling or call order.
//
// All sampling is implemented on top of the raw mt19937_64 output. The
// standard <random> distributions are implementation-defined and would break
// golden-value tests across toolchains, so we do not use them.

// SplitMix64 step, used for seed derivation and stream splitting.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Hash the master seed together with a path of identifiers into a stream seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64(s);
    for (std::uint64_t p : path) {
        s = h ^ (p + 0x9E3779B97F4A7C15ULL);
        h = splitmix64(s);
    }
    return h;
}

// Stream purpose tags (part of the seed path, keeps streams independent).
namespace stream {
constexpr std::uint64_t kData = 1;      // synthetic dataset generation
constexpr std::uint64_t kInit = 2;      // model parameter initialization
constexpr std::uint64_t kTrain = 3;     // mini-batch shuffling
constexpr std::uint64_t kAttack = 4;    // attack noise
constexpr std::uint64_t kVerify = 5;    // property fuzzing
}  // namespace stream

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    Rng(std::uint64_t master, std::initializer_list<std::uint64_t> path)
        : gen_(derive_seed(master, path)) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n), Lemire multiply-shift (no modulo bias).
    std::uint64_t bounded(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(gen_()) * n) >> 64);
    }

    // Standard normal via the Marsaglia polar method. The algorithm is fixed
    // so seeded outputs are reproducible across platforms and releases.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        has_spare_ = true;
        return u * m;
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

    // Fisher-Yates shuffle driven by this stream.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(bounded(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dfl
