#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace nnevclus {

// Deterministic random source. std::mt19937_64 has a bit-exact output stream
// across platforms, but the standard <random> distributions do not, so all
// value mappings are pinned here.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t nextU64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), unbiased via rejection.
    std::uint64_t uniformInt(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    int uniformIndex(int n) { return static_cast<int>(uniformInt(static_cast<std::uint64_t>(n))); }

    // Standard normal via Box-Muller; one cached value per pair.
    double normal() {
        if (hasCached_) {
            hasCached_ = false;
            return cached_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        cached_ = r * std::sin(theta);
        hasCached_ = true;
        return r * std::cos(theta);
    }

    // Student-t with integer degrees of freedom (chi-square built from
    // squared normals).
    double studentT(int dof) {
        double chi2 = 0.0;
        for (int k = 0; k < dof; ++k) {
            const double z = normal();
            chi2 += z * z;
        }
        return normal() / std::sqrt(chi2 / static_cast<double>(dof));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = uniformInt(i);
            std::swap(v[i - 1], v[j]);
        }
    }

    // Derive an independent child stream, e.g. one per restart.
    static std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool hasCached_ = false;
};

}  // namespace nnevclus
