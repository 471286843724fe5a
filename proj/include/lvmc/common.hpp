#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lvmc {

// Half-hourly resolution throughout.
inline constexpr int kStepsPerDay = 48;
inline constexpr double kStepHours = 0.5;
inline constexpr int kDaysPerYear = 365;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

/// Base class for all toolkit errors. CLI maps subclasses to exit codes:
/// validation-type errors exit 1, numerical failures exit 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Caller passed data violating a documented precondition.
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// Input is technically valid but has no usable information content
/// (e.g. constant net load when binning requires a nonzero range).
class DegenerateInputError : public InvalidInputError {
public:
    using InvalidInputError::InvalidInputError;
};

/// A schedule or action violates a battery operating constraint.
class ConstraintViolationError : public Error {
public:
    using Error::Error;
};

/// File or schema parse failure; message carries the offending location.
class ParseError : public InvalidInputError {
public:
    using InvalidInputError::InvalidInputError;
};

/// Iterative numerical procedure failed (non-convergence, diverged loss).
class NumericalError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Seeding and portable sampling
// ---------------------------------------------------------------------------

/// splitmix64 finalizer; used both as a bit mixer and for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive a child seed from a master seed and an arbitrary key path.
/// Every random decision in the toolkit flows from the experiment master
/// seed through this function, so sub-computations can run in any order
/// (or in parallel) without changing results.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix64(master);
    for (std::uint64_t p : path) s = mix64(s ^ mix64(p));
    return s;
}

/// Seeded RNG with hand-rolled distributions. The standard library leaves
/// distribution algorithms implementation-defined; these are pinned so that
/// identical seeds give bit-identical streams on any conforming compiler.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Integer in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    /// Standard normal via polar Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
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
        have_spare_ = true;
        return u * m;
    }

    /// Gamma(shape, 1) via Marsaglia-Tsang; shape < 1 handled by boosting.
    double gamma(double shape) {
        if (shape < 1.0) {
            const double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    /// Dirichlet(alpha) via normalized gamma draws.
    std::vector<double> dirichlet(std::span<const double> alpha) {
        std::vector<double> p(alpha.size());
        double total = 0.0;
        for (std::size_t i = 0; i < alpha.size(); ++i) {
            p[i] = gamma(alpha[i]);
            total += p[i];
        }
        for (double& v : p) v /= total;
        return p;
    }

    /// One draw from a categorical distribution given unnormalized weights.
    std::size_t categorical(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        double r = uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
            r -= weights[i];
            if (r < 0.0) return i;
        }
        return weights.empty() ? 0 : weights.size() - 1;
    }

    /// Fisher-Yates partial shuffle: first k entries become a uniform
    /// without-replacement sample of the input indices.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
            const std::size_t j = i + uniform_index(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(std::min(k, n));
        return idx;
    }

private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Small numeric helpers
// ---------------------------------------------------------------------------

/// Order statistic with linear interpolation between closest ranks.
/// q in [0,1]; input need not be sorted.
inline double percentile(std::vector<double> samples, double q) {
    if (samples.empty()) throw InvalidInputError("percentile: empty sample set");
    std::sort(samples.begin(), samples.end());
    if (samples.size() == 1) return samples[0];
    const double pos = q * static_cast<double>(samples.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, samples.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return samples[lo] * (1.0 - frac) + samples[hi] * frac;
}

inline bool nearly_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

}  // namespace lvmc
