#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace said {

// Thin wrapper over std::mt19937_64. One Rng per chain; child streams for
// independent tasks are derived with split() so chains never share draws.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed), seed_(seed) {}

    // U(0,1)
    double uniform();
    double uniform(double lo, double hi);
    // N(0,1)
    double normal();
    Eigen::VectorXd normal_vec(Eigen::Index n);
    // Gamma(shape, rate): mean shape/rate
    double gamma(double shape, double rate);
    // Inverse-gamma(shape, scale): X = scale / Gamma(shape, 1)
    double inv_gamma(double shape, double scale);

    // Deterministically derive a child seed for stream `index`.
    std::uint64_t split(std::uint64_t index) const;

    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
    std::uint64_t seed_ = 0;
};

// splitmix64 step, used for seed derivation.
std::uint64_t mix64(std::uint64_t x);

} // namespace said
