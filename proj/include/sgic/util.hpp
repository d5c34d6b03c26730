#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace sgic {

// FNV-1a, 64 bit. Used for request keys and content hashes of fixtures.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hex64(std::uint64_t v);

// Round-half-up for non-negative reals; scores are displayed as integers.
inline int round_half_up(double x) {
    return static_cast<int>(std::floor(x + 0.5));
}

// Deterministic RNG wrapper. std::shuffle and the distribution classes are
// implementation-defined, so draws are derived from raw engine output to keep
// fixtures byte-stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
        return lo + u * (hi - lo);
    }

    // Uniform index in [0, n). n must be > 0.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[index(i)]);
        }
    }

    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

std::string read_text_file(const std::filesystem::path& path);

// Write via temp file + rename so readers never observe a torn file.
void write_text_file_atomic(const std::filesystem::path& path, std::string_view content);

std::vector<std::string> split_whitespace(std::string_view text);

std::string replace_all(std::string text, std::string_view from, std::string_view to);

std::string iso8601_now();

}  // namespace sgic
