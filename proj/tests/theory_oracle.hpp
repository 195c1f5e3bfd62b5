#pragma once
// Stand-alone evaluator of the planner formulas, written without the library's helpers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace oracle {

struct In {
    double n, sigma, c2, alpha, nu;
    int d, k;
    double delta, rho, p, c1, gamma, c0, c_prime;
    bool remark = false;
};

struct Out {
    double f, q, u, m_x, m_phi, m, cp, n_thr, n_res, sig_eff, a1, b1, disc, lo, hi, cap, eps, n1;
};

inline Out evaluate(const In& in) {
    Out o{};
    const double k = in.k, d = in.d;
    const double r2 = std::sqrt(2.0);
    o.f = std::pow(std::log(in.n) / in.n, (in.remark ? 0.5 : 1.0) / (k + 2.0)) / std::sqrt(k);
    o.q = in.delta * in.delta / 144.0 - in.delta * in.delta * in.delta / 1296.0;
    o.u = std::log(36.0 * r2 / in.delta);
    o.m_x = std::max(1.0, std::ceil(2.0 * k * in.c2 * in.c2 * std::log(k / in.p) / (in.alpha * in.rho * in.rho)));
    o.m_phi = std::ceil(4.0 * k * (d + o.m_x + 1.0) * o.u * in.c1 / o.q);
    o.m = std::max(d, o.m_x);
    const double floor_c =
        32.0 * in.gamma * in.c0 * (1.0 + in.delta) * in.c2 * (1.0 + r2) * (1.0 + r2) / (1.0 - in.rho);
    o.cp = in.c_prime * floor_c * floor_c;
    o.n_thr = o.cp * std::pow(k, 6.0) * d * d * in.sigma * in.sigma * o.m_x * o.m /
              (std::pow(o.f, 4.0) * in.alpha * in.alpha);
    o.n_res = std::floor(o.n_thr) + 1.0;
    o.sig_eff = in.sigma / std::sqrt(o.n_res);
    o.a1 = in.c2 * d * k * k;
    o.b1 = std::sqrt((1.0 - in.rho) * in.alpha) / (std::sqrt(in.c0) * std::sqrt(1.0 + in.delta) * (std::sqrt(k) + r2));
    o.disc = o.f * o.f * o.b1 * o.b1 - 32.0 * in.gamma * o.sig_eff * o.a1 * std::sqrt(o.m_x * o.m);
    const double den = 2.0 * o.a1 * std::sqrt(o.m_x / o.m_phi);
    if (o.disc > 0.0) {
        o.lo = (o.f * o.b1 - std::sqrt(o.disc)) / den;
        o.hi = (o.f * o.b1 + std::sqrt(o.disc)) / den;
    }
    o.cap = in.nu * std::sqrt(o.m_phi / d);
    o.eps = (o.disc > 0.0 && o.cap > o.lo) ? std::min(0.5 * (o.lo + o.hi), o.cap) : 0.0;
    o.n1 = o.n_res * o.m_x * (o.m_phi + 1.0);
    return o;
}

inline In random_input(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    In in{};
    in.n = std::pow(10.0, 3.0 + 9.0 * u(rng));
    in.d = 2 + static_cast<int>(198 * u(rng));
    in.k = 1 + static_cast<int>(std::min(in.d, 6) * u(rng));
    in.k = std::min(in.k, in.d);
    in.sigma = 0.5 * u(rng);
    in.c2 = 0.5 + 3.5 * u(rng);
    in.alpha = 0.05 + 0.95 * u(rng);
    in.nu = 0.05 + 0.95 * u(rng);
    in.delta = 0.01 + 0.39 * u(rng);
    in.rho = 0.05 + 0.9 * u(rng);
    in.p = 0.01 + 0.5 * u(rng);
    in.c1 = 1.01 + 2.0 * u(rng);
    in.gamma = 2.0 * std::sqrt(std::log(12.0)) + 0.01 + u(rng);
    in.c0 = 0.5 + 8.0 * u(rng);
    in.c_prime = 1.0 + 4.0 * u(rng);
    return in;
}

inline bool close(double a, double b, double rel) {
    if (a == b) return true;
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

} // namespace oracle
