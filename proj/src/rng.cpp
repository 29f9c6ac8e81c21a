#include "nml/rng.hpp"

#include <cmath>
#include <numbers>

namespace nml {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

} // namespace

Rng::Rng(std::uint64_t seed) : key_(mix64(seed + kGamma)), seed_(seed) {}

Rng::Rng(std::uint64_t key, std::uint64_t seed) : key_(key), seed_(seed) {}

std::uint64_t Rng::next_u64() {
    return mix64(key_ + ++counter_ * kGamma);
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
}

double Rng::normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
    NML_REQUIRE(n >= 1, "Rng::below: n must be >= 1");
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        const std::uint64_t x = next_u64();
        if (x >= threshold) return x % n;
    }
}

Rng Rng::child(std::uint64_t label) const {
    return Rng(mix64(key_ ^ mix64(label + kGamma)), seed_);
}

Rng Rng::child(std::string_view label) const {
    return child(fnv1a(label));
}

std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    NML_REQUIRE(k <= n, "sample_without_replacement: k=", k, " exceeds n=", n);
    // Partial Fisher-Yates over an index table.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(below(n - i));
        std::swap(idx[i], idx[j]);
        out.push_back(idx[i]);
    }
    return out;
}

} // namespace nml
