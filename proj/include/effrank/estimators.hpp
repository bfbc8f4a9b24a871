#pragma once
// Moment statistics and robust estimation: the bounded truncation function
// psi, sample covariance and its deviation from a reference matrix, the
// truncated s-th moment estimator at its prescribed truncation level, and
// ground-truth directional moments for the supported sample families.

#include <cmath>
#include <cstddef>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <effrank/distributions.hpp>
#include <effrank/errors.hpp>
#include <effrank/linalg.hpp>
#include <effrank/rng.hpp>

namespace effrank {

// ---------------------------------------------------------------------------
// Sample container: row-major n x d matrix of observations.

class SampleSet {
  public:
    SampleSet(std::vector<double> flat, std::size_t n, std::size_t d)
        : data_(std::move(flat)), n_(n), d_(d) {
        if (n_ < 1 || d_ < 1) throw ShapeError("samples: need n >= 1 and d >= 1");
        if (data_.size() != n_ * d_)
            throw ShapeError("samples: buffer size does not match n x d");
    }

    static SampleSet from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw ShapeError("samples: need at least one row");
        const std::size_t d = rows.front().size();
        std::vector<double> flat;
        flat.reserve(rows.size() * d);
        for (const auto& r : rows) {
            if (r.size() != d) throw ShapeError("samples: ragged rows");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return SampleSet(std::move(flat), rows.size(), d);
    }

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }
    const double* row(std::size_t i) const { return data_.data() + i * d_; }

  private:
    std::vector<double> data_;
    std::size_t n_;
    std::size_t d_;
};

// ---------------------------------------------------------------------------
// Truncation function

// Odd clamp to [-1, 1]; satisfies psi(x) <= log(1 + x + x^2) everywhere.
inline double psi(double x) {
    if (x > 1.0) return 1.0;
    if (x < -1.0) return -1.0;
    return x;
}

// Negative branch used by lower-tail estimates: for x <= 0 it satisfies
// x <= psi_lower(x) <= log(1 + x + x^2/2).
inline double psi_lower(double x) {
    if (x > 0.0) throw DomainError("psi_lower: argument must be <= 0");
    return x < -1.0 ? -1.0 : x;
}

// ---------------------------------------------------------------------------
// Sample covariance and deviation statistics

// (1/n) * sum of X_i X_i^T over the rows; PSD by construction.
inline SymMatrix sample_covariance(const SampleSet& samples) {
    const std::size_t n = samples.n();
    const std::size_t d = samples.d();
    std::vector<double> flat(d * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = samples.row(i);
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) flat[a * d + b] += x[a] * x[b];
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t a = 0; a < d; ++a)
        for (std::size_t b = a; b < d; ++b) {
            flat[a * d + b] *= inv;
            flat[b * d + a] = flat[a * d + b];
        }
    return SymMatrix::from_flat(d, flat);
}

// Operator-norm distance between the sample covariance and a reference.
inline double covariance_deviation(const SampleSet& samples, const SymMatrix& sigma) {
    if (samples.d() != sigma.dim())
        throw ShapeError("covariance_deviation: sample dimension does not match Sigma");
    return operator_norm(sample_covariance(samples) - sigma);
}

// ---------------------------------------------------------------------------
// Truncated moment estimation

struct TruncationConfig {
    double lambda = 1.0; // truncation level, > 0
    int s = 1;           // moment order, >= 1
    double t = 1.0;      // confidence parameter, > 0

    void validate() const {
        if (!(lambda > 0.0)) throw ConfigError("truncation: lambda must be > 0");
        if (s < 1) throw ConfigError("truncation: s must be >= 1");
        if (!(t > 0.0)) throw ConfigError("truncation: t must be > 0");
    }
};

// lambda = sqrt((r(Sigma) + t) / (n * eta^(2s) * ||Sigma||^s)).
inline double truncation_level(double eta, int s, const SymMatrix& sigma,
                               std::size_t n, double t) {
    if (!(eta > 0.0) || s < 1 || n < 1 || !(t > 0.0))
        throw ConfigError("truncation_level: need eta > 0, s >= 1, n >= 1, t > 0");
    const double r = effective_rank(sigma);
    const double nrm = operator_norm(sigma);
    const double denom = static_cast<double>(n) *
                         std::pow(eta, 2.0 * static_cast<double>(s)) *
                         std::pow(nrm, static_cast<double>(s));
    return std::sqrt((r + t) / denom);
}

namespace detail {

inline double int_pow(double x, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

} // namespace detail

// Direction vectors are accepted as-is when the norm is within 1e-10 of 1,
// re-normalized with a warning when within 1e-6, and rejected otherwise.
inline std::vector<double> ingest_unit_vector(std::vector<double> v) {
    const double nrm = norm2(v);
    const double err = std::fabs(nrm - 1.0);
    if (err <= 1e-10) return v;
    if (err <= 1e-6) {
        std::cerr << "warning: direction vector norm " << format_double(nrm)
                  << " re-normalized to 1\n";
        for (double& c : v) c /= nrm;
        return v;
    }
    throw DomainError("direction vector must be unit length (norm = " +
                      format_double(nrm) + ")");
}

struct TruncatedMomentResult {
    double estimate = 0.0;
    double clipped_fraction = 0.0; // share of samples hitting the +-1 clamp
};

// (1/(n*lambda)) * sum psi(lambda * <v, X_i>^s); always bounded by 1/lambda.
inline TruncatedMomentResult truncated_moment_estimate(const SampleSet& samples,
                                                       const std::vector<double>& v,
                                                       const TruncationConfig& cfg) {
    cfg.validate();
    if (v.size() != samples.d())
        throw ShapeError("truncated moment: direction dimension mismatch");
    const std::vector<double> u = ingest_unit_vector(v);
    const std::size_t n = samples.n();
    const std::size_t d = samples.d();
    double acc = 0.0;
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* x = samples.row(i);
        double ip = 0.0;
        for (std::size_t j = 0; j < d; ++j) ip += u[j] * x[j];
        const double arg = cfg.lambda * detail::int_pow(ip, cfg.s);
        if (std::fabs(arg) > 1.0) ++clipped;
        acc += psi(arg);
    }
    TruncatedMomentResult out;
    out.estimate = acc / (static_cast<double>(n) * cfg.lambda);
    out.clipped_fraction = static_cast<double>(clipped) / static_cast<double>(n);
    return out;
}

// ---------------------------------------------------------------------------
// eta: an upper bound for (E <v,X>^(2s))^(1/(2s)) used to set the truncation
// level.  Two named constructors so reports can state which bound was used.

// Sub-Gaussian moment growth: (E|W|^q)^(1/q) <= 3 sqrt(q) ||W||_psi2 at q = 2s.
inline double eta_subgaussian(double kappa, int s) {
    if (!(kappa > 0.0) || s < 1)
        throw ConfigError("eta_subgaussian: need kappa > 0, s >= 1");
    return 3.0 * kappa * std::sqrt(2.0 * static_cast<double>(s));
}

// Log-concave moment growth: (E|W|^q)^(1/q) <= 2 q ||W||_psi1 at q = 2s.
inline double eta_logconcave(double kappa, int s) {
    if (!(kappa > 0.0) || s < 1)
        throw ConfigError("eta_logconcave: need kappa > 0, s >= 1");
    return 4.0 * kappa * static_cast<double>(s);
}

// ---------------------------------------------------------------------------
// Ground-truth directional moments E <X, v>^s

struct MomentValue {
    double value = 0.0;
    double std_error = 0.0; // nonzero only on the Monte Carlo path
    std::string method;     // which evaluation route produced the value
};

namespace detail {

// Law of <X, v> restated on the core: <X, v> = <Z, u> with u = Sigma^(1/2) v.
inline std::vector<double> mixed_direction(const SymMatrix& sigma,
                                           const std::vector<double>& v) {
    const std::size_t d = sigma.dim();
    std::vector<double> u(d, 0.0);
    if (sigma.is_diagonal()) {
        for (std::size_t j = 0; j < d; ++j) {
            const double e = sigma(j, j);
            if (e < 0) throw NotPSD("covariance: negative diagonal entry");
            u[j] = std::sqrt(e) * v[j];
        }
        return u;
    }
    const SymMatrix root = psd_sqrt(sigma);
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += root(i, j) * v[j];
        u[i] = s;
    }
    return u;
}

} // namespace detail

inline MomentValue true_moment(const DistributionFamily& fam,
                               const std::vector<double>& v, int s) {
    if (s < 1) throw DomainError("true_moment: s must be >= 1");
    if (fam.kind == FamilyKind::student_t && s >= fam.nu)
        throw MomentDoesNotExist("true_moment: E<X,v>^" + std::to_string(s) +
                                 " is infinite for student-t with nu = " +
                                 std::to_string(fam.nu));
    const SymMatrix sigma = materialize_sigma(fam.sigma);
    if (v.size() != sigma.dim())
        throw ShapeError("true_moment: direction dimension mismatch");

    // Every core is symmetric about zero, so odd moments vanish exactly.
    if (s % 2 == 1) return {0.0, 0.0, "closed-form"};

    const std::vector<double> u = detail::mixed_direction(sigma, v);
    const double usq = dot(u, u); // = v^T Sigma v
    const int m = s / 2;

    if (fam.kind == FamilyKind::gaussian) {
        // (s-1)!! * (v^T Sigma v)^(s/2)
        return {detail::double_factorial_odd(m) * detail::int_pow(usq, m), 0.0,
                "closed-form"};
    }
    if (fam.kind == FamilyKind::uniform_ball) {
        // Spherically symmetric core: <Z, u> has the law of ||u|| times the
        // one-dimensional marginal.
        return {core_moment(fam, s) * detail::int_pow(usq, m), 0.0,
                "spherical-marginal"};
    }

    // Remaining cores have iid coordinates.  When u lies on a coordinate
    // axis the projection is a single scaled coordinate.
    std::size_t nonzero = 0;
    double axis = 0.0;
    for (double c : u)
        if (c != 0.0) {
            ++nonzero;
            axis = c;
        }
    if (nonzero <= 1) {
        const double val = nonzero == 0
                               ? 0.0
                               : detail::int_pow(axis, s) * core_moment(fam, s);
        return {val, 0.0, "coordinate-reduction"};
    }
    if (s == 2) return {usq, 0.0, "closed-form"}; // unit-variance coordinates
    if (s == 4) {
        // E (sum u_j Z_j)^4 = 3 ||u||^4 + (m4 - 3) * sum u_j^4 for iid
        // zero-mean unit-variance coordinates.
        const double m4 = core_moment(fam, 4);
        double quart = 0.0;
        for (double c : u) quart += detail::int_pow(c, 4);
        return {3.0 * usq * usq + (m4 - 3.0) * quart, 0.0, "closed-form"};
    }

    // General high-order case: Monte Carlo over the projected law.
    constexpr std::size_t kDraws = 10'000'000;
    Sampler sampler(fam);
    Rng rng(SeedSpec{0x5eedfeed00c0ffeeULL, 0});
    std::vector<double> x(sigma.dim()), z(sigma.dim());
    double acc = 0.0;
    double acc_sq = 0.0;
    for (std::size_t i = 0; i < kDraws; ++i) {
        sampler.draw(rng, x.data(), z.data());
        double ip = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) ip += x[j] * v[j];
        const double p = detail::int_pow(ip, s);
        acc += p;
        acc_sq += p * p;
    }
    const double mean = acc / static_cast<double>(kDraws);
    const double var = acc_sq / static_cast<double>(kDraws) - mean * mean;
    const double se = std::sqrt(std::max(var, 0.0) / static_cast<double>(kDraws));
    return {mean, se, "monte-carlo"};
}

} // namespace effrank
