#pragma once

#include <cstdint>
#include <random>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace sclock {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Per-path stream keyed by (seed, path index); independent of scheduling.
class PathRng {
public:
    PathRng(std::uint64_t seed, std::uint64_t path, bool antithetic = false)
        : engine_(splitmix64(seed ^ splitmix64(path + 0x632be59bd9b4e019ULL))), sign_(antithetic ? -1.0 : 1.0),
          flip_(antithetic) {}

    double normal() { return sign_ * normal_(engine_); }
    double uniform() {
        const double u = uniform_(engine_);
        return flip_ ? 1.0 - u : u;
    }

private:
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
    boost::random::uniform_01<double> uniform_;
    double sign_;
    bool flip_;
};

}  // namespace sclock
