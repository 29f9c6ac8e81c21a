#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "nml/error.hpp"

namespace nml {

// Counter-based splittable generator. The stream is a pure function of
// (key, counter), so a given seed replays the exact draw sequence on every
// platform, and children derived by label own independent streams that the
// parent's later draws cannot disturb.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    // [0, 1), 53 random bits
    double next_double();
    double uniform(double lo, double hi);
    // Standard normal via Box-Muller; two uniform draws per call.
    double normal();
    // [0, n), unbiased by rejection; n must be >= 1
    std::uint64_t below(std::uint64_t n);

    Rng child(std::uint64_t label) const;
    Rng child(std::string_view label) const;

    std::uint64_t seed() const { return seed_; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices drawn from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    Rng(std::uint64_t key, std::uint64_t seed);

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::uint64_t seed_; // original user seed, for logging
};

} // namespace nml
