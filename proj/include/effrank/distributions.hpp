#pragma once

// Seeded samplers for the distribution classes exercised by the bounds:
// gaussian, Rademacher mixture, Laplace product, uniform on a centered ball
// (both log-concave), and a Student-t product core as the heavy-tailed
// family.  Every sample is X = Sigma^{1/2} Z with a zero-mean, identity-
// covariance core Z, so each family's moment-equivalence constants are the
// constants of its one-dimensional core marginal.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "effrank/errors.hpp"
#include "effrank/linalg.hpp"
#include "effrank/quadrature.hpp"
#include "effrank/rng.hpp"

namespace effrank {

// ---------------------------------------------------------------------------
// Covariance specifications

enum class CovKind { identity, poly_decay, exp_decay, spiked, explicit_matrix };

struct CovarianceSpec {
    CovKind kind = CovKind::identity;
    std::size_t d = 1;
    double alpha = 1.0;            // poly_decay: entries j^(-alpha), j = 1..d
    double gamma = 1.0;            // exp_decay: entries exp(-gamma*(j-1))
    std::size_t spike_count = 1;   // spiked: first k entries = strength, rest 1
    double spike_strength = 10.0;
    SymMatrix matrix;              // explicit_matrix

    static CovarianceSpec identity_d(std::size_t d) { return {CovKind::identity, d, 1, 1, 1, 10, {}}; }
    static CovarianceSpec poly(std::size_t d, double alpha) {
        CovarianceSpec c;
        c.kind = CovKind::poly_decay;
        c.d = d;
        c.alpha = alpha;
        return c;
    }
    static CovarianceSpec expdecay(std::size_t d, double gamma) {
        CovarianceSpec c;
        c.kind = CovKind::exp_decay;
        c.d = d;
        c.gamma = gamma;
        return c;
    }
    static CovarianceSpec spiked(std::size_t d, std::size_t k, double strength) {
        CovarianceSpec c;
        c.kind = CovKind::spiked;
        c.d = d;
        c.spike_count = k;
        c.spike_strength = strength;
        return c;
    }
    static CovarianceSpec diag(const std::vector<double>& entries) {
        return explicit_m(SymMatrix::diagonal(entries));
    }
    static CovarianceSpec explicit_m(SymMatrix m) {
        CovarianceSpec c;
        c.kind = CovKind::explicit_matrix;
        c.d = m.dim();
        c.matrix = std::move(m);
        return c;
    }
};

inline SymMatrix materialize_sigma(const CovarianceSpec& spec) {
    if (spec.d < 1) throw ConfigError("covariance spec: dimension must be >= 1");
    switch (spec.kind) {
        case CovKind::identity:
            return SymMatrix::identity(spec.d);
        case CovKind::poly_decay: {
            if (!std::isfinite(spec.alpha)) throw ConfigError("covariance spec: bad alpha");
            std::vector<double> diag(spec.d);
            for (std::size_t j = 0; j < spec.d; ++j)
                diag[j] = std::pow(static_cast<double>(j + 1), -spec.alpha);
            return SymMatrix::diagonal(diag);
        }
        case CovKind::exp_decay: {
            if (!std::isfinite(spec.gamma) || spec.gamma < 0)
                throw ConfigError("covariance spec: bad gamma");
            std::vector<double> diag(spec.d);
            for (std::size_t j = 0; j < spec.d; ++j)
                diag[j] = std::exp(-spec.gamma * static_cast<double>(j));
            return SymMatrix::diagonal(diag);
        }
        case CovKind::spiked: {
            if (spec.spike_count < 1 || spec.spike_count > spec.d)
                throw ConfigError("covariance spec: spike count out of range");
            if (!(spec.spike_strength > 0))
                throw ConfigError("covariance spec: spike strength must be positive");
            std::vector<double> diag(spec.d, 1.0);
            for (std::size_t j = 0; j < spec.spike_count; ++j) diag[j] = spec.spike_strength;
            return SymMatrix::diagonal(diag);
        }
        case CovKind::explicit_matrix: {
            if (spec.matrix.dim() != spec.d)
                throw ConfigError("covariance spec: explicit matrix dimension mismatch");
            const EigenDecomposition e = sym_eigen(spec.matrix);
            double nrm = 0.0;
            for (double l : e.eigenvalues) nrm = std::max(nrm, std::fabs(l));
            if (nrm == 0.0) throw DegenerateMatrix("covariance spec: zero matrix");
            if (e.eigenvalues.back() < -1e-10 * nrm)
                throw NotPSD("covariance spec: explicit matrix is not PSD");
            return spec.matrix;
        }
    }
    throw ConfigError("covariance spec: unknown kind");
}

// ---------------------------------------------------------------------------
// Distribution families

enum class FamilyKind { gaussian, rademacher_mix, laplace_product, uniform_ball, student_t };

inline std::string family_name(FamilyKind k) {
    switch (k) {
        case FamilyKind::gaussian: return "gaussian";
        case FamilyKind::rademacher_mix: return "rademacher-mix";
        case FamilyKind::laplace_product: return "laplace-product";
        case FamilyKind::uniform_ball: return "uniform-ball";
        case FamilyKind::student_t: return "student-t";
    }
    return "?";
}

struct DistributionFamily {
    FamilyKind kind = FamilyKind::gaussian;
    CovarianceSpec sigma;
    int nu = 5; // student-t degrees of freedom
};

namespace detail {

constexpr double laplace_scale = 0.70710678118654752440; // 1/sqrt(2), unit variance
constexpr double pi = 3.14159265358979323846;
constexpr double half_pi = 1.57079632679489661923;
constexpr double inv_sqrt_2pi = 0.39894228040143267794;

inline double double_factorial_odd(int s) { // (2s-1)!! as a double
    double p = 1.0;
    for (int k = 1; k <= 2 * s - 1; k += 2) p *= static_cast<double>(k);
    return p;
}

// Uniform-on-ball 1-d marginal (ball radius R = sqrt(d+2), unit variance).
// E g(W) = C * ∫ g(R sin θ) cos^d θ dθ over [-π/2, π/2],
// C = Γ(d/2+1) / (√π Γ((d+1)/2)).
inline double ball_marginal_expect(std::size_t d, const std::function<double(double)>& g) {
    const double dd = static_cast<double>(d);
    const double logc = std::lgamma(0.5 * dd + 1.0) - 0.5 * std::log(pi) -
                        std::lgamma(0.5 * (dd + 1.0));
    const double c = std::exp(logc);
    const double r = std::sqrt(dd + 2.0);
    return c * quad::integrate(
                   [&](double th) { return g(r * std::sin(th)) * std::pow(std::cos(th), dd); },
                   -half_pi, half_pi);
}

// E W^{2s} of the ball marginal in closed form:
// C * R^{2s} * B(s + 1/2, (d+1)/2).
inline double ball_marginal_moment(std::size_t d, int s2 /* = 2s, even */) {
    const double dd = static_cast<double>(d);
    const double s = 0.5 * static_cast<double>(s2);
    const double logv = std::lgamma(0.5 * dd + 1.0) - 0.5 * std::log(pi) -
                        std::lgamma(0.5 * (dd + 1.0)) + s * std::log(dd + 2.0) +
                        std::lgamma(s + 0.5) + std::lgamma(0.5 * (dd + 1.0)) -
                        std::lgamma(s + 1.0 + 0.5 * dd);
    return std::exp(logv);
}

// Unit-variance Student-t(nu) density.
inline double student_t_density(int nu, double z) {
    const double n = static_cast<double>(nu);
    const double sigma = std::sqrt(n / (n - 2.0)); // Z = T / sigma
    const double t = sigma * z;
    const double logc = std::lgamma(0.5 * (n + 1.0)) - 0.5 * std::log(n * pi) -
                        std::lgamma(0.5 * n);
    return sigma * std::exp(logc - 0.5 * (n + 1.0) * std::log1p(t * t / n));
}

// Root-find c in E exp(|W|^alpha / c^alpha) = 2; `expectation` maps c to the
// left-hand side (each caller keeps its integrand in a single exponent so
// no inf*0 forms can arise).
inline double psi_constant(const std::function<double(double)>& expectation) {
    auto value = [&](double c) { return expectation(c) - 2.0; };
    // Grow hi from a moderate scale until E < 2, then walk lo gently down
    // from hi; starting tiny would overflow the exponential immediately.
    double hi = 1.0;
    while (value(hi) > 0.0 && hi < 1e3) hi *= 2.0;
    if (hi >= 1e3) throw NumericError("psi_constant: no finite bracket");
    double lo = 0.5 * hi;
    while (value(lo) < 0.0 && lo > 1e-6) lo *= 0.5;
    if (value(lo) < 0.0) throw NumericError("psi_constant: no lower bracket");
    return quad::bisect(value, lo, hi);
}

} // namespace detail

inline bool has_psi2(FamilyKind k) {
    return k == FamilyKind::gaussian || k == FamilyKind::rademacher_mix ||
           k == FamilyKind::uniform_ball;
}

inline bool has_psi1(FamilyKind k) { return k != FamilyKind::student_t; }

inline bool is_log_concave(FamilyKind k) {
    return k == FamilyKind::gaussian || k == FamilyKind::laplace_product ||
           k == FamilyKind::uniform_ball;
}

// Tightest psi_2 constant of the 1-d coordinate core.
inline double kappa_psi2(const DistributionFamily& fam) {
    switch (fam.kind) {
        case FamilyKind::gaussian:
            return std::sqrt(8.0 / 3.0); // solve 1/sqrt(1 - 2/c^2) = 2
        case FamilyKind::rademacher_mix:
            return 1.0 / std::sqrt(std::log(2.0)); // exp(1/c^2) = 2
        case FamilyKind::uniform_ball: {
            const std::size_t d = fam.sigma.d;
            return detail::psi_constant([d](double c) {
                return detail::ball_marginal_expect(
                    d, [&](double w) { return std::exp(w * w / (c * c)); });
            });
        }
        case FamilyKind::laplace_product:
        case FamilyKind::student_t:
            throw NotSubGaussian("kappa_psi2: family " + family_name(fam.kind) +
                                 " is not sub-gaussian");
    }
    throw ConfigError("kappa_psi2: unknown family");
}

// Tightest psi_1 constant of the 1-d coordinate core.
inline double kappa_psi1(const DistributionFamily& fam) {
    switch (fam.kind) {
        case FamilyKind::laplace_product:
            return std::sqrt(2.0); // E exp(|X|/c) = 1/(1 - b/c) = 2, b = 1/sqrt(2)
        case FamilyKind::rademacher_mix:
            return 1.0 / std::log(2.0); // exp(1/c) = 2
        case FamilyKind::gaussian:
            return detail::psi_constant([](double c) {
                // E exp(|Z|/c) with the gaussian weight folded into one
                // exponent, so the tails underflow to 0 instead of inf*0
                return quad::integrate_line([c](double z) {
                    return detail::inv_sqrt_2pi * std::exp(std::fabs(z) / c - 0.5 * z * z);
                });
            });
        case FamilyKind::uniform_ball: {
            const std::size_t d = fam.sigma.d;
            return detail::psi_constant([d](double c) {
                return detail::ball_marginal_expect(
                    d, [&](double w) { return std::exp(std::fabs(w) / c); });
            });
        }
        case FamilyKind::student_t:
            throw NotSubExponential("kappa_psi1: student-t has polynomial tails");
    }
    throw ConfigError("kappa_psi1: unknown family");
}

// Raw moment E W^k of the 1-d core marginal (0 for odd k: all cores are
// symmetric).  Heavy-tail existence is checked against nu.
inline double core_moment(const DistributionFamily& fam, int k) {
    if (k < 0) throw DomainError("core_moment: negative order");
    if (k == 0) return 1.0;
    if (fam.kind == FamilyKind::student_t && k >= fam.nu)
        throw MomentDoesNotExist("core_moment: E|Z|^" + std::to_string(k) +
                                 " diverges for student-t(" + std::to_string(fam.nu) + ")");
    if (k % 2 == 1) return 0.0;
    const int s = k / 2;
    switch (fam.kind) {
        case FamilyKind::gaussian:
            return detail::double_factorial_odd(s); // (2s-1)!!
        case FamilyKind::rademacher_mix:
            return 1.0;
        case FamilyKind::laplace_product: {
            double f = 1.0; // (2s)! * b^{2s} with b^2 = 1/2
            for (int i = 2; i <= k; ++i) f *= static_cast<double>(i);
            return f / std::pow(2.0, s);
        }
        case FamilyKind::uniform_ball:
            return detail::ball_marginal_moment(fam.sigma.d, k);
        case FamilyKind::student_t:
            // numeric integration over the unit-variance t density
            return quad::integrate_line([&](double z) {
                return std::pow(std::fabs(z), k) * detail::student_t_density(fam.nu, z);
            });
    }
    throw ConfigError("core_moment: unknown family");
}

// L_{2s}-L_2 equivalence constant of the coordinate core:
// eta(s) = (E W^{2s})^{1/(2s)} for the unit-variance marginal.
inline double eta(const DistributionFamily& fam, int s) {
    if (s < 1) throw DomainError("eta: order s must be >= 1");
    if (fam.kind == FamilyKind::student_t && 2 * s >= fam.nu)
        throw MomentDoesNotExist("eta: 2s >= nu for student-t");
    return std::pow(core_moment(fam, 2 * s), 1.0 / (2.0 * s));
}

// ---------------------------------------------------------------------------
// Sampler

class Sampler {
  public:
    explicit Sampler(DistributionFamily fam)
        : fam_(std::move(fam)), sigma_(materialize_sigma(fam_.sigma)), d_(sigma_.dim()) {
        if (fam_.kind == FamilyKind::student_t && fam_.nu < 3)
            throw ConfigError("student-t family needs nu >= 3 for a finite variance");
        if (sigma_.is_diagonal()) {
            diag_root_.resize(d_);
            for (std::size_t j = 0; j < d_; ++j) {
                const double v = sigma_(j, j);
                if (v < 0) throw NotPSD("covariance: negative diagonal entry");
                diag_root_[j] = std::sqrt(v);
            }
        } else {
            root_ = psd_sqrt(sigma_);
        }
    }

    const DistributionFamily& family() const { return fam_; }
    const SymMatrix& sigma() const { return sigma_; }
    std::size_t dim() const { return d_; }

    SymMatrix root_matrix() const {
        if (diag_root_.empty()) return root_;
        return SymMatrix::diagonal(diag_root_);
    }

    // One core draw Z (zero mean, identity covariance).
    void core_draw(Rng& rng, double* z) const {
        switch (fam_.kind) {
            case FamilyKind::gaussian:
                for (std::size_t j = 0; j < d_; ++j) z[j] = rng.gaussian();
                return;
            case FamilyKind::rademacher_mix:
                for (std::size_t j = 0; j < d_; ++j) z[j] = rng.rademacher();
                return;
            case FamilyKind::laplace_product:
                for (std::size_t j = 0; j < d_; ++j) z[j] = rng.laplace(detail::laplace_scale);
                return;
            case FamilyKind::uniform_ball: {
                double norm_sq = 0.0;
                for (std::size_t j = 0; j < d_; ++j) {
                    z[j] = rng.gaussian();
                    norm_sq += z[j] * z[j];
                }
                const double nrm = std::sqrt(norm_sq);
                const double dd = static_cast<double>(d_);
                const double radius =
                    std::sqrt(dd + 2.0) * std::pow(rng.uniform(), 1.0 / dd);
                const double f = nrm > 0.0 ? radius / nrm : 0.0;
                for (std::size_t j = 0; j < d_; ++j) z[j] *= f;
                return;
            }
            case FamilyKind::student_t: {
                const double nm2 = static_cast<double>(fam_.nu - 2);
                for (std::size_t j = 0; j < d_; ++j) {
                    const double g0 = rng.gaussian();
                    double v = 0.0;
                    for (int i = 0; i < fam_.nu; ++i) {
                        const double g = rng.gaussian();
                        v += g * g;
                    }
                    z[j] = g0 * std::sqrt(nm2 / v);
                }
                return;
            }
        }
        throw ConfigError("sample: unknown family");
    }

    // One mixed draw X = Sigma^{1/2} Z.
    void draw(Rng& rng, double* x, double* z_scratch) const {
        core_draw(rng, z_scratch);
        if (!diag_root_.empty()) {
            for (std::size_t j = 0; j < d_; ++j) x[j] = diag_root_[j] * z_scratch[j];
        } else {
            for (std::size_t i = 0; i < d_; ++i) {
                double s = 0.0;
                for (std::size_t j = 0; j < d_; ++j) s += root_(i, j) * z_scratch[j];
                x[i] = s;
            }
        }
    }

    // n independent rows, row-major n x d; deterministic given seed.
    std::vector<double> sample(std::size_t n, SeedSpec seed) const {
        if (n < 1) throw DomainError("sample: n must be >= 1");
        Rng rng(seed);
        std::vector<double> rows(n * d_);
        std::vector<double> z(d_);
        for (std::size_t i = 0; i < n; ++i) draw(rng, rows.data() + i * d_, z.data());
        return rows;
    }

  private:
    DistributionFamily fam_;
    SymMatrix sigma_;
    std::size_t d_;
    std::vector<double> diag_root_; // set when sigma is diagonal
    SymMatrix root_;                // dense psd_sqrt otherwise
};

} // namespace effrank
