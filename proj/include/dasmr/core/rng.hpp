#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dasmr::core {

// All randomness in a run flows from one seed through named substreams
// ("env", "agent", "replay", ...). Sampling helpers are hand-rolled so the
// draw sequence is pinned across compilers and serializes exactly.
class RngStream {
public:
    RngStream() : RngStream(0) {}
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    static std::uint64_t substream_seed(std::uint64_t run_seed, std::string_view name) {
        std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
        for (unsigned char c : name) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        return splitmix(run_seed ^ (h * 0x9E3779B97F4A7C15ULL));
    }

    static RngStream substream(std::uint64_t run_seed, std::string_view name) {
        return RngStream(substream_seed(run_seed, name));
    }

    std::uint64_t raw() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

    // Uniform integer in [0, n). Rejection sampling, no modulo bias.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Standard normal via Box-Muller; stateless (the sine partner is dropped)
    // so the stream state is exactly the engine state.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::string serialize() const {
        std::ostringstream os;
        os.imbue(std::locale::classic());
        os << engine_;
        return os.str();
    }

    void deserialize(const std::string& text) {
        std::istringstream is(text);
        is.imbue(std::locale::classic());
        is >> engine_;
        if (is.fail()) throw std::runtime_error("RngStream: bad serialized state");
    }

    bool operator==(const RngStream& other) const { return engine_ == other.engine_; }

private:
    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::mt19937_64 engine_;
};

inline std::uint64_t substream_seed(std::uint64_t run_seed, std::string_view name) {
    return RngStream::substream_seed(run_seed, name);
}

}  // namespace dasmr::core
