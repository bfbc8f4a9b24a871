#pragma once

// Deterministic random fixtures shared across test suites.

#include <cmath>
#include <cstdint>
#include <vector>

#include "effrank/linalg.hpp"
#include "effrank/rng.hpp"

namespace fixtures {

inline effrank::SymMatrix random_symmetric(std::size_t d, std::uint64_t seed) {
    effrank::Rng rng(seed, 0);
    effrank::SymMatrix m(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) m.set(i, j, rng.gaussian());
    return m;
}

// A^T A form: PSD by construction.
inline effrank::SymMatrix random_psd(std::size_t d, std::uint64_t seed) {
    effrank::Rng rng(seed, 1);
    std::vector<double> a(d * d);
    for (auto& v : a) v = rng.gaussian();
    effrank::SymMatrix m(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += a[k * d + i] * a[k * d + j];
            m.set(i, j, s);
        }
    return m;
}

// Gram-Schmidt orthonormalization of a random gaussian matrix; rows of the
// result are the orthonormal vectors q_0..q_{d-1}.
inline std::vector<std::vector<double>> random_orthogonal(std::size_t d, std::uint64_t seed) {
    effrank::Rng rng(seed, 2);
    std::vector<std::vector<double>> q(d, std::vector<double>(d));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t k = 0; k < d; ++k) q[i][k] = rng.gaussian();
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t j = 0; j < i; ++j) {
                const double c = effrank::dot(q[i], q[j]);
                for (std::size_t k = 0; k < d; ++k) q[i][k] -= c * q[j][k];
            }
        const double nv = effrank::norm2(q[i]);
        for (std::size_t k = 0; k < d; ++k) q[i][k] /= nv;
    }
    return q;
}

inline effrank::SymMatrix conjugate(const effrank::SymMatrix& A,
                                    const std::vector<std::vector<double>>& q) {
    const std::size_t d = A.dim();
    // B = Q^T A Q with Q columns q[j]; B_ij = q_i^T A q_j
    effrank::SymMatrix b(d);
    for (std::size_t i = 0; i < d; ++i) {
        const std::vector<double> aqi = A.mul(q[i]);
        for (std::size_t j = i; j < d; ++j) b.set(i, j, effrank::dot(q[j], aqi));
    }
    return b;
}

} // namespace fixtures
