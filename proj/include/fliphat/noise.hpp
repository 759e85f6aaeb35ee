#pragma once

// Seeded, reproducible random streams. A SeedPath names a stream by a root
// seed plus a sequence of (label, index) hops; hashing the path yields the
// state of a splitmix64 generator, so every (repetition, episode, iteration)
// owns an independent substream with no shared mutable state.

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fliphat/budget.hpp"

namespace fliphat {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a, used to fold path labels into the stream key.
inline std::uint64_t hash_bytes(std::uint64_t h, std::string_view bytes) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t hash_u64(std::uint64_t h, std::uint64_t x) {
    for (int i = 0; i < 8; ++i) {
        h ^= (x >> (8 * i)) & 0xffULL;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Hierarchical stream identifier: a root seed plus (label, index) hops.
class SeedPath {
  public:
    explicit SeedPath(std::uint64_t root_seed) : root_(root_seed), key_(root_seed) {
        // One mixing round so that nearby roots give unrelated keys.
        std::uint64_t s = key_;
        key_ = detail::splitmix64(s);
    }

    /// Derived stream one hop below this one.
    SeedPath child(std::string_view label, std::uint64_t index = 0) const {
        SeedPath out = *this;
        out.key_ = detail::hash_bytes(out.key_ ^ 0xcbf29ce484222325ULL, label);
        out.key_ = detail::hash_u64(out.key_, index);
        std::uint64_t s = out.key_;
        out.key_ = detail::splitmix64(s);
        out.path_.emplace_back(std::string(label), index);
        return out;
    }

    std::uint64_t root_seed() const { return root_; }
    std::uint64_t key() const { return key_; }

    /// Canonical printable form, e.g. "root:7/d:200/rep:3".
    std::string to_string() const {
        std::string s = "root:" + std::to_string(root_);
        for (const auto& [label, index] : path_) {
            s += "/" + label + ":" + std::to_string(index);
        }
        return s;
    }

  private:
    std::uint64_t root_;
    std::uint64_t key_;
    std::vector<std::pair<std::string, std::uint64_t>> path_;
};

/// Deterministic generator bound to one SeedPath.
class RandomStream {
  public:
    explicit RandomStream(const SeedPath& path) : state_(path.key()) {}

    std::uint64_t next_u64() { return detail::splitmix64(state_); }

    /// Uniform on the open interval (0, 1).
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; pairs are cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double angle = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(angle);
        has_spare_ = true;
        return r * std::cos(angle);
    }

    /// Laplace(scale) by inverse CDF on u in (-1/2, 1/2):
    /// x = -scale * sign(u) * ln(1 - 2|u|).
    double laplace(double scale) {
        double u = uniform01() - 0.5;
        return -scale * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
    }

  private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Laplace scale parameter; 0 denotes the point mass at 0 (non-private mode).
struct LaplaceScale {
    double xi = 0.0;
};

/// Per-round Laplace scale of the peeling mechanism:
/// xi = lambda * 2 * sqrt(3 s ln(1/delta)) / epsilon.
inline LaplaceScale peeling_noise_scale(double lambda, std::size_t s, const PrivacyBudget& budget) {
    if (lambda < 0.0) throw std::invalid_argument("peeling_noise_scale: lambda must be >= 0");
    if (s < 1) throw std::invalid_argument("peeling_noise_scale: s must be >= 1");
    if (lambda == 0.0) return LaplaceScale{0.0};
    if (budget.delta <= 0.0) {
        throw unsupported_budget("peeling_noise_scale: delta must be > 0 when lambda > 0");
    }
    double xi = lambda * 2.0 *
                std::sqrt(3.0 * static_cast<double>(s) * std::log(1.0 / budget.delta)) /
                budget.epsilon;
    return LaplaceScale{xi};
}

/// count iid Laplace(scale.xi) draws; all zeros when xi = 0.
inline std::vector<double> sample_laplace(const LaplaceScale& scale, const SeedPath& stream,
                                          std::size_t count) {
    std::vector<double> out(count, 0.0);
    if (scale.xi == 0.0) return out;
    RandomStream rng(stream);
    for (double& x : out) x = rng.laplace(scale.xi);
    return out;
}

/// count iid N(mean, stddev^2) draws; the constant mean when stddev = 0.
inline std::vector<double> sample_gaussian(double mean, double stddev, const SeedPath& stream,
                                           std::size_t count) {
    if (stddev < 0.0) throw std::invalid_argument("sample_gaussian: stddev must be >= 0");
    std::vector<double> out(count, mean);
    if (stddev == 0.0) return out;
    RandomStream rng(stream);
    for (double& x : out) x = mean + stddev * rng.gaussian();
    return out;
}

}  // namespace fliphat
