#pragma once
// Self-contained deterministic RNG. std::normal_distribution and friends are
// implementation-defined, so every draw here is produced by our own code to
// keep outputs bit-identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace fairaudit {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    // splitmix64
    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // standard normal via Box-Muller; consumes exactly two draws per call
    double normal() {
        const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    // index in [0, n); modulo bias is irrelevant at desk scale
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(next_u64() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    // Derive an independent named stream; all per-module randomness hangs off
    // one root seed through these.
    Rng split(std::string_view name) const {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (char c : name) {
            h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
            h *= 0x100000001b3ULL;
        }
        Rng child(state_ ^ h);
        child.next_u64();
        return child;
    }

private:
    std::uint64_t state_;
};

}  // namespace fairaudit
