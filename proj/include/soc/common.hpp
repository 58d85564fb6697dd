#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace soc {

// Error taxonomy. The CLI maps input/format/io errors to exit code 1 and
// everything else to exit code 2.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Unreadable or unwritable files.
class io_error : public error {
public:
    explicit io_error(const std::string& msg) : error(msg) {}
};

// Malformed persisted data (checkpoints, embeddings, datasets beyond the
// per-row skip tolerance).
class format_error : public error {
public:
    explicit format_error(const std::string& msg) : error(msg) {}
};

// Inconsistent shapes or invalid model/train configuration.
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

// Invalid caller-supplied values (out-of-range scores, bad windows, ...).
class input_error : public error {
public:
    explicit input_error(const std::string& msg) : error(msg) {}
};

// NaN/Inf encountered where finite values are required.
class numeric_error : public error {
public:
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

// Deterministic RNG. mt19937_64 output is pinned by the standard, and the
// value mappings below avoid std::uniform_*_distribution, whose results
// differ between standard library implementations. Same seed, same stream,
// on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    // Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw input_error("Rng::below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = gen_();
        while (v >= limit) v = gen_();
        return v % n;
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

// FNV-1a, used to fingerprint vocabulary files referenced by checkpoints.
inline std::uint64_t fnv1a(const void* data, std::size_t len,
                           std::uint64_t seed = 14695981039346656037ull) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= bytes[i];
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace soc
