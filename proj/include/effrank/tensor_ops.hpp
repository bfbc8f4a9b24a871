#pragma once
// Symmetric s-linear deviation forms: evaluation in O(nd) without ever
// materializing the d^s tensor, plus operator-norm maximization over the
// unit sphere via a shifted symmetric power method.  A brute-force grid
// supremum is provided at d <= 3 as the reference oracle.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <effrank/distributions.hpp>
#include <effrank/errors.hpp>
#include <effrank/estimators.hpp>
#include <effrank/linalg.hpp>
#include <effrank/rng.hpp>

namespace effrank {

// ---------------------------------------------------------------------------
// Centering providers: v -> E<X,v>^s with gradient and a curvature bound so
// the maximizer can fold the centering into its spectral shift.

struct Centering {
    std::string name = "zero";
    // E<X,v>^s as a function of the direction.
    std::function<double(const std::vector<double>&)> value;
    // Accumulates the gradient of value() into out (same length as v).
    std::function<void(const std::vector<double>&, std::vector<double>&)> add_gradient;
    // Upper bound for the Hessian operator norm of value() on the unit ball.
    double curvature = 0.0;
};

inline Centering centering_zero() {
    Centering c;
    c.name = "zero";
    c.value = [](const std::vector<double>&) { return 0.0; };
    c.add_gradient = [](const std::vector<double>&, std::vector<double>&) {};
    c.curvature = 0.0;
    return c;
}

inline Centering centering_constant(double value) {
    Centering c;
    c.name = "constant";
    c.value = [value](const std::vector<double>&) { return value; };
    c.add_gradient = [](const std::vector<double>&, std::vector<double>&) {};
    c.curvature = 0.0;
    return c;
}

// s = 2 centering by an explicit matrix: v -> v^T C v.
inline Centering centering_quadratic(SymMatrix m) {
    Centering c;
    c.name = "quadratic";
    const double curv = 2.0 * m.frobenius();
    auto mat = std::make_shared<SymMatrix>(std::move(m));
    c.value = [mat](const std::vector<double>& v) {
        double q = 0.0;
        const std::size_t d = mat->dim();
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) q += v[a] * (*mat)(a, b) * v[b];
        return q;
    };
    c.add_gradient = [mat](const std::vector<double>& v, std::vector<double>& out) {
        const std::size_t d = mat->dim();
        for (std::size_t a = 0; a < d; ++a) {
            double s = 0.0;
            for (std::size_t b = 0; b < d; ++b) s += (*mat)(a, b) * v[b];
            out[a] += 2.0 * s;
        }
    };
    c.curvature = curv;
    return c;
}

// Even-order centering for rotationally symmetric cores:
// v -> m_s * (v^T Sigma v)^(s/2).
inline Centering centering_sigma_power(double marginal_moment, SymMatrix sigma, int s) {
    if (s < 2 || s % 2 != 0)
        throw ConfigError("centering_sigma_power: order must be even and >= 2");
    Centering c;
    c.name = "sigma-power";
    const int p = s / 2;
    const double nf = sigma.frobenius();
    c.curvature = std::fabs(marginal_moment) *
                  (2.0 * p + 4.0 * p * std::max(p - 1, 0)) * std::pow(nf, p);
    auto mat = std::make_shared<SymMatrix>(std::move(sigma));
    const double m = marginal_moment;
    c.value = [mat, m, p](const std::vector<double>& v) {
        const std::size_t d = mat->dim();
        double q = 0.0;
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b) q += v[a] * (*mat)(a, b) * v[b];
        return m * detail::int_pow(q, p);
    };
    c.add_gradient = [mat, m, p](const std::vector<double>& v, std::vector<double>& out) {
        const std::size_t d = mat->dim();
        std::vector<double> sv(d, 0.0);
        double q = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            double s_ = 0.0;
            for (std::size_t b = 0; b < d; ++b) s_ += (*mat)(a, b) * v[b];
            sv[a] = s_;
            q += v[a] * s_;
        }
        const double coef = m * p * detail::int_pow(q, p - 1) * 2.0;
        for (std::size_t a = 0; a < d; ++a) out[a] += coef * sv[a];
    };
    return c;
}

// Quartic centering for iid unit-variance coordinates mixed by Sigma^(1/2):
// with u = Sigma^(1/2) v,  E<X,v>^4 = 3 ||u||^4 + (m4 - 3) * sum_j u_j^4.
inline Centering centering_quartic_iid(double m4, const SymMatrix& sigma) {
    Centering c;
    c.name = "quartic-iid";
    const double nf = sigma.frobenius();
    c.curvature = (36.0 + 12.0 * std::fabs(m4 - 3.0)) * nf * nf;
    auto root = std::make_shared<SymMatrix>(psd_sqrt(sigma));
    c.value = [root, m4](const std::vector<double>& v) {
        const std::size_t d = root->dim();
        double usq = 0.0, quart = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            double u = 0.0;
            for (std::size_t b = 0; b < d; ++b) u += (*root)(a, b) * v[b];
            usq += u * u;
            quart += u * u * u * u;
        }
        return 3.0 * usq * usq + (m4 - 3.0) * quart;
    };
    c.add_gradient = [root, m4](const std::vector<double>& v, std::vector<double>& out) {
        const std::size_t d = root->dim();
        std::vector<double> u(d, 0.0);
        double usq = 0.0;
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) u[a] += (*root)(a, b) * v[b];
            usq += u[a] * u[a];
        }
        std::vector<double> gu(d);
        for (std::size_t a = 0; a < d; ++a)
            gu[a] = 12.0 * usq * u[a] + 4.0 * (m4 - 3.0) * u[a] * u[a] * u[a];
        for (std::size_t a = 0; a < d; ++a) {
            double s_ = 0.0;
            for (std::size_t b = 0; b < d; ++b) s_ += (*root)(a, b) * gu[b];
            out[a] += s_;
        }
    };
    return c;
}

// Exact centering for a sample family at the given order.  Odd orders vanish
// by symmetry; even orders use the closed forms above.  Unsupported
// combinations are rejected rather than approximated.
inline Centering centering_for_family(const DistributionFamily& fam, int s) {
    if (s < 2) throw ConfigError("centering: order must be >= 2");
    if (fam.kind == FamilyKind::student_t && s >= fam.nu)
        throw MomentDoesNotExist("centering: E<X,v>^" + std::to_string(s) +
                                 " is infinite for student-t with nu = " +
                                 std::to_string(fam.nu));
    if (s % 2 == 1) return centering_zero();
    const SymMatrix sigma = materialize_sigma(fam.sigma);
    switch (fam.kind) {
        case FamilyKind::gaussian:
            return centering_sigma_power(detail::double_factorial_odd(s / 2), sigma, s);
        case FamilyKind::uniform_ball:
            return centering_sigma_power(core_moment(fam, s), sigma, s);
        case FamilyKind::rademacher_mix:
        case FamilyKind::laplace_product:
        case FamilyKind::student_t:
            if (s == 2) return centering_quadratic(sigma);
            if (s == 4) return centering_quartic_iid(core_moment(fam, 4), sigma);
            throw ConfigError("centering: no closed form for " +
                              family_name(fam.kind) + " at order " +
                              std::to_string(s));
    }
    throw ConfigError("centering: unknown family");
}

// ---------------------------------------------------------------------------
// The empirical deviation form (1/n) sum <X_i,v>^s - E<X,v>^s.

class EmpiricalTensorForm {
  public:
    EmpiricalTensorForm(SampleSet samples, int s, Centering centering)
        : samples_(std::move(samples)), s_(s), centering_(std::move(centering)) {
        if (s_ < 2) throw ConfigError("tensor form: order must be >= 2");
        if (!centering_.value || !centering_.add_gradient)
            throw ConfigError("tensor form: centering must provide value and gradient");
        norm_pow_sum_ = 0.0;
        for (std::size_t i = 0; i < samples_.n(); ++i) {
            const double* x = samples_.row(i);
            double nsq = 0.0;
            for (std::size_t j = 0; j < samples_.d(); ++j) nsq += x[j] * x[j];
            norm_pow_sum_ += std::pow(nsq, 0.5 * s_);
        }
    }

    std::size_t n() const { return samples_.n(); }
    std::size_t d() const { return samples_.d(); }
    int order() const { return s_; }
    const SampleSet& samples() const { return samples_; }
    const Centering& centering() const { return centering_; }

    // (1/n) sum <X_i,v>^s - centering(v); v must be unit to 1e-10.
    double value(const std::vector<double>& v) const {
        require_unit(v);
        return raw_value(v) - centering_.value(v);
    }

    // Spectral shift guaranteeing monotone ascent of the power iteration: an
    // upper bound for the Hessian norm of the form on the unit ball.
    double curvature_bound() const {
        const double empirical = static_cast<double>(s_) * (s_ - 1) * norm_pow_sum_ /
                                 static_cast<double>(samples_.n());
        return empirical + centering_.curvature;
    }

    // Internals shared with the maximizer (no unit check).
    double raw_value(const std::vector<double>& v) const {
        const std::size_t n = samples_.n(), d = samples_.d();
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = samples_.row(i);
            double ip = 0.0;
            for (std::size_t j = 0; j < d; ++j) ip += x[j] * v[j];
            acc += detail::int_pow(ip, s_);
        }
        return acc / static_cast<double>(n);
    }

    // Gradient of value() at v (no unit check).
    std::vector<double> gradient(const std::vector<double>& v) const {
        const std::size_t n = samples_.n(), d = samples_.d();
        std::vector<double> g(d, 0.0);
        const double coef = static_cast<double>(s_) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double* x = samples_.row(i);
            double ip = 0.0;
            for (std::size_t j = 0; j < d; ++j) ip += x[j] * v[j];
            const double w = coef * detail::int_pow(ip, s_ - 1);
            for (std::size_t j = 0; j < d; ++j) g[j] += w * x[j];
        }
        std::vector<double> cg(d, 0.0);
        centering_.add_gradient(v, cg);
        for (std::size_t j = 0; j < d; ++j) g[j] -= cg[j];
        return g;
    }

  private:
    static void require_unit(const std::vector<double>& v) {
        if (std::fabs(norm2(v) - 1.0) > 1e-10)
            throw DomainError("tensor form: direction must be a unit vector");
    }

    SampleSet samples_;
    int s_;
    Centering centering_;
    double norm_pow_sum_ = 0.0; // sum of ||X_i||^s
};

inline double form_value(const EmpiricalTensorForm& f, const std::vector<double>& v) {
    return f.value(v);
}

// ---------------------------------------------------------------------------
// Supremum of |form| over the unit sphere.

struct SupResult {
    double value = 0.0;          // best |form_value| found
    std::vector<double> argmax;  // unit vector attaining it
    bool converged = true;       // movement tolerance met for the winner
};

struct PowerOptions {
    std::size_t restarts = 64;   // random starts; antipodes fill odd/even slots
    double tol = 1e-10;          // stop when the iterate moves less than this
    std::size_t max_iters = 10000;
    bool antipodes = true;       // pair each random start with its negation
    std::uint64_t seed = 0x7e4504a5eedULL;
};

namespace detail {

// Monotone ascent on sign * form over the sphere from the given start.
// Returns the signed form value at the final iterate.
inline double power_ascend(const EmpiricalTensorForm& f, double sign, double shift,
                           std::vector<double> v, const PowerOptions& opt,
                           std::vector<double>* out_v, bool* out_converged) {
    const std::size_t d = f.d();
    bool converged = false;
    for (std::size_t it = 0; it < opt.max_iters; ++it) {
        std::vector<double> g = f.gradient(v);
        for (std::size_t j = 0; j < d; ++j) g[j] = sign * g[j] + shift * v[j];
        const double nrm = norm2(g);
        if (nrm == 0.0) { // flat point: nothing to ascend
            converged = true;
            break;
        }
        double move_sq = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double next = g[j] / nrm;
            const double delta = next - v[j];
            move_sq += delta * delta;
            v[j] = next;
        }
        if (std::sqrt(move_sq) <= opt.tol) {
            converged = true;
            break;
        }
    }
    *out_v = v;
    *out_converged = converged;
    return f.raw_value(v) - f.centering().value(v);
}

} // namespace detail

inline SupResult operator_norm_sup(const EmpiricalTensorForm& f,
                                   const PowerOptions& opt) {
    if (opt.restarts < 1) throw ConfigError("operator_norm_sup: restarts must be >= 1");
    const std::size_t d = f.d();
    // Strictly positive shift keeps the update well defined even for flat
    // forms; the curvature bound makes every iteration monotone.
    const double shift = f.curvature_bound() + 1e-12;

    SupResult best;
    best.argmax.assign(d, 0.0);
    best.argmax[0] = 1.0;
    best.value = std::fabs(f.value(best.argmax));

    std::vector<double> start(d);
    for (std::size_t r = 0; r < opt.restarts; ++r) {
        if (opt.antipodes && r % 2 == 1) {
            for (double& c : start) c = -c; // antipode of the previous start
        } else {
            Rng rng(SeedSpec{opt.seed, r});
            double nrm_sq = 0.0;
            do {
                nrm_sq = 0.0;
                for (double& c : start) {
                    c = rng.gaussian();
                    nrm_sq += c * c;
                }
            } while (nrm_sq == 0.0);
            const double inv = 1.0 / std::sqrt(nrm_sq);
            for (double& c : start) c *= inv;
        }
        for (double sign : {1.0, -1.0}) {
            std::vector<double> v;
            bool conv = false;
            const double val =
                detail::power_ascend(f, sign, shift, start, opt, &v, &conv);
            if (std::fabs(val) > best.value) {
                best.value = std::fabs(val);
                best.argmax = v;
                best.converged = conv;
            }
        }
    }
    return best;
}

inline SupResult operator_norm_sup(const EmpiricalTensorForm& f,
                                   std::size_t restarts = 64, double tol = 1e-10) {
    PowerOptions opt;
    opt.restarts = restarts;
    opt.tol = tol;
    return operator_norm_sup(f, opt);
}

// ---------------------------------------------------------------------------
// Grid oracle at tiny dimension: sign enumeration (d=1), uniform angles
// (d=2), Fibonacci sphere (d=3).

inline SupResult grid_supremum(const EmpiricalTensorForm& f, std::size_t points) {
    if (points < 1) throw ConfigError("grid_supremum: need at least one point");
    const std::size_t d = f.d();
    SupResult best;
    const auto consider = [&](const std::vector<double>& v) {
        const double val = std::fabs(f.value(v));
        if (val > best.value || best.argmax.empty()) {
            best.value = val;
            best.argmax = v;
        }
    };
    if (d == 1) {
        consider({1.0});
        consider({-1.0});
        return best;
    }
    if (d == 2) {
        const double two_pi = 6.28318530717958647692;
        for (std::size_t k = 0; k < points; ++k) {
            const double theta = two_pi * static_cast<double>(k) /
                                 static_cast<double>(points);
            consider({std::cos(theta), std::sin(theta)});
        }
        return best;
    }
    if (d == 3) {
        const double golden_angle = 2.39996322972865332223; // pi (3 - sqrt(5))
        std::vector<double> v(3);
        for (std::size_t k = 0; k < points; ++k) {
            const double z = 1.0 - (2.0 * static_cast<double>(k) + 1.0) /
                                       static_cast<double>(points);
            const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double phi = golden_angle * static_cast<double>(k);
            v[0] = rho * std::cos(phi);
            v[1] = rho * std::sin(phi);
            v[2] = z;
            // Renormalize to keep the strict unit-vector contract.
            const double inv = 1.0 / norm2(v);
            for (double& c : v) c *= inv;
            consider(v);
        }
        return best;
    }
    throw ConfigError("grid_supremum: only d <= 3 is supported");
}

} // namespace effrank
