#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace afd {

inline uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// mt19937_64 engine with explicit, implementation-independent distributions.
// The std:: distribution objects are avoided because their draw sequences are
// unspecified and carry hidden state, which breaks bit-exact checkpoint/resume.
class Rng {
public:
    Rng() : engine_(0) {}
    explicit Rng(uint64_t seed) : engine_(seed), base_(seed) {}

    uint64_t u64() { return engine_(); }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller; stateless (no cached spare)
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // uniform integer in [0, n)
    int uniform_int(int n) { return static_cast<int>(engine_() % static_cast<uint64_t>(n)); }

    // independent child stream keyed by (tag, index); derivation does not
    // disturb this stream's state
    Rng stream(uint64_t tag, uint64_t index = 0) const {
        uint64_t s = mix64(base_ ^ mix64(tag) ^ mix64(mix64(index) + 0x9e3779b97f4a7c15ull));
        return Rng(s);
    }

    std::string serialize() const {
        std::ostringstream os;
        os << base_ << ' ' << engine_;
        return os.str();
    }

    static Rng deserialize(const std::string& text) {
        Rng r;
        std::istringstream is(text);
        is >> r.base_ >> r.engine_;
        return r;
    }

    static Rng seeded(uint64_t seed) { return Rng(mix64(seed)); }

private:
    std::mt19937_64 engine_;
    uint64_t base_ = 0;
};

}  // namespace afd
