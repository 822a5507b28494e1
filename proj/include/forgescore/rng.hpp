#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace forgescore {

// Derives an independent seed for a named component ("synth", "split", "init", ...) from the run seed.
std::uint64_t substream_seed(std::uint64_t seed, std::string_view name);

// mt19937_64 with distribution transforms written out explicitly, so draws are identical across standard
// library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::string_view stream) : engine_(substream_seed(seed, stream)) {}

    std::uint64_t next() { return engine_(); }
    double uniform();                      // [0, 1), 53-bit
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // standard normal, Box-Muller
    std::size_t below(std::size_t n);      // [0, n), rejection sampled

    template <class T>
    void shuffle(std::vector<T>& v)
    {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace forgescore
