#pragma once
// Closed-form tail and deviation bounds, each returning the numeric value
// together with a validity flag for its sample-size / parameter conditions
// and the map of constants that went into it.  Unspecified theory constants
// are always caller-supplied (default 1) and recorded, never invented.

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <effrank/errors.hpp>
#include <effrank/linalg.hpp>

namespace effrank {

struct BoundResult {
    double value = 0.0;
    bool valid = true;
    std::string condition_text;                  // violated condition, if any
    std::map<std::string, double> constants_used;
};

namespace detail {

inline void require_positive_t(double t, const char* who) {
    if (!(t >= 0.0) || !std::isfinite(t))
        throw ConfigError(std::string(who) + ": t must be a finite nonnegative real");
}

inline void require_positive(double x, const char* who, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x))
        throw ConfigError(std::string(who) + ": " + name + " must be positive");
}

inline std::string cond_text(const std::string& requirement, double lhs, double rhs) {
    return requirement + " fails: " + format_double(lhs) + " < " + format_double(rhs);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Covariance deviation bounds

// 20 kappa^2 ||Sigma|| sqrt((4 r(Sigma) + t)/n), valid for n >= 4 r(Sigma) + t.
inline BoundResult thm1_bound(double kappa, const SymMatrix& sigma, std::size_t n,
                              double t) {
    detail::require_positive(kappa, "thm1_bound", "kappa");
    detail::require_positive_t(t, "thm1_bound");
    const double r = effective_rank(sigma);
    const double nrm = operator_norm(sigma);
    BoundResult out;
    out.value = 20.0 * kappa * kappa * nrm *
                std::sqrt((4.0 * r + t) / static_cast<double>(n));
    out.valid = static_cast<double>(n) >= 4.0 * r + t;
    if (!out.valid)
        out.condition_text =
            detail::cond_text("n >= 4 r(Sigma) + t", static_cast<double>(n), 4.0 * r + t);
    out.constants_used = {{"prefactor", 20.0}, {"kappa", kappa}, {"r", r}, {"opnorm", nrm}};
    return out;
}

// Ambient-dimension comparison bound: 52 kappa^2 sqrt((d + t)/n) for an
// isotropic scale; valid for n >= d + t.
inline BoundResult prop1_bound(double kappa, std::size_t d, std::size_t n, double t) {
    detail::require_positive(kappa, "prop1_bound", "kappa");
    detail::require_positive_t(t, "prop1_bound");
    const double dd = static_cast<double>(d);
    BoundResult out;
    out.value = 52.0 * kappa * kappa * std::sqrt((dd + t) / static_cast<double>(n));
    out.valid = static_cast<double>(n) >= dd + t;
    if (!out.valid)
        out.condition_text = detail::cond_text("n >= d + t", static_cast<double>(n), dd + t);
    out.constants_used = {{"prefactor", 52.0}, {"kappa", kappa}, {"d", dd}};
    return out;
}

// ---------------------------------------------------------------------------
// Norm concentration bounds (for ||X||^2 of a single draw)

struct NormBoundPair {
    double exact = 0.0;   // 36 k^2 (tr/2 + sqrt(2 t tr ||Sigma||) + t ||Sigma||)
    double relaxed = 0.0; // 36 k^2 (tr + 2 t ||Sigma||)
};

inline NormBoundPair norm_bound_subgaussian(double kappa, const SymMatrix& sigma,
                                            double t) {
    detail::require_positive(kappa, "norm_bound_subgaussian", "kappa");
    detail::require_positive_t(t, "norm_bound_subgaussian");
    const double tr = sigma.trace();
    const double nrm = operator_norm(sigma);
    const double k2 = 36.0 * kappa * kappa;
    NormBoundPair out;
    out.exact = k2 * (0.5 * tr + std::sqrt(2.0 * t * tr * nrm) + t * nrm);
    out.relaxed = k2 * (tr + 2.0 * t * nrm);
    return out;
}

// Sharp gaussian version: tr + 2 sqrt(2 t tr ||Sigma||) + 2 t ||Sigma||.
inline double norm_bound_gaussian_exact(const SymMatrix& sigma, double t) {
    detail::require_positive_t(t, "norm_bound_gaussian_exact");
    const double tr = sigma.trace();
    const double nrm = operator_norm(sigma);
    return tr + 2.0 * std::sqrt(2.0 * t * tr * nrm) + 2.0 * t * nrm;
}

// Sub-exponential norm bound (not squared): 8 kappa (sqrt(t tr) + t sqrt(||Sigma||)),
// stated for t >= 1.
inline BoundResult subexp_norm_bound(double kappa, const SymMatrix& sigma, double t) {
    detail::require_positive(kappa, "subexp_norm_bound", "kappa");
    detail::require_positive_t(t, "subexp_norm_bound");
    const double tr = sigma.trace();
    const double nrm = operator_norm(sigma);
    BoundResult out;
    out.value = 8.0 * kappa * (std::sqrt(t * tr) + t * std::sqrt(nrm));
    out.valid = t >= 1.0;
    if (!out.valid) out.condition_text = detail::cond_text("t >= 1", t, 1.0);
    out.constants_used = {{"prefactor", 8.0}, {"kappa", kappa}, {"trace", tr},
                          {"opnorm", nrm}};
    return out;
}

// ---------------------------------------------------------------------------
// One-sided and higher-order deviation bounds

// Lower-tail bound 7 kappa^2 ||Sigma|| sqrt((r + t)/n), stated for t > log 2.
inline BoundResult lowertail_bound(double kappa, const SymMatrix& sigma,
                                   std::size_t n, double t) {
    detail::require_positive(kappa, "lowertail_bound", "kappa");
    detail::require_positive_t(t, "lowertail_bound");
    const double r = effective_rank(sigma);
    const double nrm = operator_norm(sigma);
    const double log2 = 0.69314718055994530942;
    BoundResult out;
    out.value = 7.0 * kappa * kappa * nrm * std::sqrt((r + t) / static_cast<double>(n));
    out.valid = t > log2;
    if (!out.valid) out.condition_text = detail::cond_text("t > log 2", t, log2);
    out.constants_used = {{"prefactor", 7.0}, {"kappa", kappa}, {"r", r},
                          {"opnorm", nrm}};
    return out;
}

enum class Thm2Regime { standard, sharp };

// Sample-size condition n >= c_s * r^(s-1) (standard) or n >= c_s * r^(s+1)
// (the sharper sub-Gaussian tail regime).
inline bool thm2_sample_condition(double c_s, int s, const SymMatrix& sigma,
                                  std::size_t n, Thm2Regime regime) {
    detail::require_positive(c_s, "thm2_sample_condition", "c_s");
    if (s < 2) throw ConfigError("thm2_sample_condition: s must be >= 2");
    const double r = effective_rank(sigma);
    const int expo = regime == Thm2Regime::standard ? s - 1 : s + 1;
    return static_cast<double>(n) >= c_s * std::pow(r, expo);
}

// Tensor deviation bound C ||Sigma||^(s/2) sqrt(r/n); the constant C has no
// closed form and must be supplied by the caller.
inline BoundResult thm2_bound(double C, int s, const SymMatrix& sigma, std::size_t n,
                              double c_s = 1.0, Thm2Regime regime = Thm2Regime::standard) {
    detail::require_positive(C, "thm2_bound", "C");
    if (s < 2) throw ConfigError("thm2_bound: s must be >= 2");
    const double r = effective_rank(sigma);
    const double nrm = operator_norm(sigma);
    BoundResult out;
    out.value = C * std::pow(nrm, 0.5 * s) * std::sqrt(r / static_cast<double>(n));
    out.valid = thm2_sample_condition(c_s, s, sigma, n, regime);
    const int expo = regime == Thm2Regime::standard ? s - 1 : s + 1;
    if (!out.valid)
        out.condition_text = detail::cond_text(
            "n >= c_s r^" + std::to_string(expo), static_cast<double>(n),
            c_s * std::pow(r, expo));
    out.constants_used = {{"C", C},
                          {"c_s", c_s},
                          {"s", static_cast<double>(s)},
                          {"regime_exponent", static_cast<double>(expo)},
                          {"r", r},
                          {"opnorm", nrm}};
    return out;
}

// Log-concave covariance bound c2 ||Sigma|| sqrt(r/n), valid for n >= c3 r.
inline BoundResult thm3_bound(double c2, const SymMatrix& sigma, std::size_t n,
                              double c3 = 1.0) {
    detail::require_positive(c2, "thm3_bound", "c2");
    detail::require_positive(c3, "thm3_bound", "c3");
    const double r = effective_rank(sigma);
    const double nrm = operator_norm(sigma);
    BoundResult out;
    out.value = c2 * nrm * std::sqrt(r / static_cast<double>(n));
    out.valid = static_cast<double>(n) >= c3 * r;
    if (!out.valid)
        out.condition_text = detail::cond_text("n >= c3 r", static_cast<double>(n), c3 * r);
    out.constants_used = {{"c2", c2}, {"c3", c3}, {"r", r}, {"opnorm", nrm}};
    return out;
}

// Log-concave tail version: c2 kappa^2 ||Sigma|| (sqrt((r + t)/n) + t^2/n).
inline BoundResult logconcave_tail_bound(double c2, double kappa, const SymMatrix& sigma,
                                         std::size_t n, double t) {
    detail::require_positive(c2, "logconcave_tail_bound", "c2");
    detail::require_positive(kappa, "logconcave_tail_bound", "kappa");
    detail::require_positive_t(t, "logconcave_tail_bound");
    const double r = effective_rank(sigma);
    const double nrm = operator_norm(sigma);
    BoundResult out;
    out.value = c2 * kappa * kappa * nrm *
                (std::sqrt((r + t) / static_cast<double>(n)) +
                 t * t / static_cast<double>(n));
    out.valid = true;
    out.constants_used = {{"c2", c2}, {"kappa", kappa}, {"r", r}, {"opnorm", nrm}};
    return out;
}

// Truncated moment estimation error: C_s eta^s ||Sigma||^(s/2) sqrt((r + t)/n).
inline BoundResult trunc_lemma_bound(double C_s, double eta, int s,
                                     const SymMatrix& sigma, std::size_t n, double t) {
    detail::require_positive(C_s, "trunc_lemma_bound", "C_s");
    detail::require_positive(eta, "trunc_lemma_bound", "eta");
    if (s < 1) throw ConfigError("trunc_lemma_bound: s must be >= 1");
    detail::require_positive_t(t, "trunc_lemma_bound");
    const double r = effective_rank(sigma);
    const double nrm = operator_norm(sigma);
    BoundResult out;
    out.value = C_s * std::pow(eta, s) * std::pow(nrm, 0.5 * s) *
                std::sqrt((r + t) / static_cast<double>(n));
    out.valid = t > 0.0;
    if (!out.valid) out.condition_text = detail::cond_text("t > 0", t, 0.0);
    out.constants_used = {{"C_s", C_s}, {"eta", eta}, {"s", static_cast<double>(s)},
                          {"r", r}, {"opnorm", nrm}};
    return out;
}

// Gaussian width of the ellipsoid Sigma^(1/2) S^(d-1): at most sqrt(tr Sigma).
inline double ellipsoid_gaussian_complexity(const SymMatrix& sigma) {
    const double tr = sigma.trace();
    if (tr < 0) throw NotPSD("ellipsoid_gaussian_complexity: negative trace");
    return std::sqrt(tr);
}

// ---------------------------------------------------------------------------
// String-key dispatch used by experiment configs.

struct BoundInputs {
    SymMatrix sigma = SymMatrix::identity(1);
    std::size_t n = 1;
    double t = 1.0;
    double kappa = 1.0;
    double eta = 1.0;       // trunc-lemma only
    int s = 2;              // thm2 / trunc-lemma order
    double constant = 1.0;  // the paper's unspecified constant (C, c2, C_s)
    double c_sample = 1.0;  // sample-size condition constant (c_s, c3)
    Thm2Regime regime = Thm2Regime::standard;
};

inline std::vector<std::string> bound_keys() {
    return {"thm1",        "prop1",         "lemma-norm-subg",
            "lemma-norm-gauss-exact",       "prop-subexp-norm",
            "prop-lowertail", "thm2",       "thm3",
            "cor-logconcave", "ellipsoid",  "trunc-lemma"};
}

inline BoundResult bound_by_key(const std::string& key, const BoundInputs& in) {
    if (key == "thm1") return thm1_bound(in.kappa, in.sigma, in.n, in.t);
    if (key == "prop1") return prop1_bound(in.kappa, in.sigma.dim(), in.n, in.t);
    if (key == "lemma-norm-subg") {
        const NormBoundPair pair = norm_bound_subgaussian(in.kappa, in.sigma, in.t);
        BoundResult out;
        out.value = pair.exact;
        out.valid = true;
        out.constants_used = {{"prefactor", 36.0}, {"kappa", in.kappa},
                              {"relaxed", pair.relaxed}};
        return out;
    }
    if (key == "lemma-norm-gauss-exact") {
        BoundResult out;
        out.value = norm_bound_gaussian_exact(in.sigma, in.t);
        out.valid = true;
        out.constants_used = {{"trace", in.sigma.trace()}};
        return out;
    }
    if (key == "prop-subexp-norm") return subexp_norm_bound(in.kappa, in.sigma, in.t);
    if (key == "prop-lowertail") return lowertail_bound(in.kappa, in.sigma, in.n, in.t);
    if (key == "thm2")
        return thm2_bound(in.constant, in.s, in.sigma, in.n, in.c_sample, in.regime);
    if (key == "thm3") return thm3_bound(in.constant, in.sigma, in.n, in.c_sample);
    if (key == "cor-logconcave")
        return logconcave_tail_bound(in.constant, in.kappa, in.sigma, in.n, in.t);
    if (key == "ellipsoid") {
        BoundResult out;
        out.value = ellipsoid_gaussian_complexity(in.sigma);
        out.valid = true;
        out.constants_used = {{"trace", in.sigma.trace()}};
        return out;
    }
    if (key == "trunc-lemma")
        return trunc_lemma_bound(in.constant, in.eta, in.s, in.sigma, in.n, in.t);
    std::string keys;
    for (const auto& k : bound_keys()) {
        if (!keys.empty()) keys += ", ";
        keys += k;
    }
    throw ConfigError("unknown bound key \"" + key + "\"; known keys: " + keys);
}

} // namespace effrank
