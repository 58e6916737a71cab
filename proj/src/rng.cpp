#include "said/rng.hpp"

namespace said {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double Rng::uniform() {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    return d(gen_);
}

double Rng::uniform(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(gen_);
}

double Rng::normal() {
    std::normal_distribution<double> d(0.0, 1.0);
    return d(gen_);
}

Eigen::VectorXd Rng::normal_vec(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
}

double Rng::gamma(double shape, double rate) {
    std::gamma_distribution<double> d(shape, 1.0 / rate);
    return d(gen_);
}

double Rng::inv_gamma(double shape, double scale) {
    std::gamma_distribution<double> d(shape, 1.0);
    return scale / d(gen_);
}

std::uint64_t Rng::split(std::uint64_t index) const {
    return mix64(seed_ + 0x632be59bd9b4e019ULL * (index + 1));
}

} // namespace said
