#pragma once
// Exact finite-space form of the entropy / log-moment-generating-function
// duality and the deviation certificate built on it.  Everything here is a
// finite sum, so the variational identities can be checked to numerical
// precision rather than statistically.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <effrank/errors.hpp>

namespace effrank {

namespace detail {

inline void validate_weights(const std::vector<double>& w, const char* who) {
    if (w.empty()) throw ConfigError(std::string(who) + ": empty weight vector");
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0) || !std::isfinite(x))
            throw ConfigError(std::string(who) + ": weights must be nonnegative");
        sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw ConfigError(std::string(who) + ": weights must sum to 1 (got " +
                          std::to_string(sum) + ")");
}

inline void validate_finite(const std::vector<double>& g, const char* who) {
    for (double x : g)
        if (!std::isfinite(x))
            throw ConfigError(std::string(who) + ": values must be finite");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Finite probability spaces

struct DiscreteSpace {
    std::vector<double> weights;
    std::vector<std::string> labels; // optional; sized like weights when present

    static DiscreteSpace uniform(std::size_t k) {
        if (k < 1) throw ConfigError("DiscreteSpace: need at least one point");
        DiscreteSpace s;
        s.weights.assign(k, 1.0 / static_cast<double>(k));
        return s;
    }

    std::size_t size() const { return weights.size(); }

    void validate() const {
        detail::validate_weights(weights, "DiscreteSpace");
        if (!labels.empty() && labels.size() != weights.size())
            throw ConfigError("DiscreteSpace: labels/weights size mismatch");
    }
};

struct DiscreteMeasurePair {
    DiscreteSpace mu;
    std::vector<double> rho; // candidate posterior on the same points

    void validate() const {
        mu.validate();
        detail::validate_weights(rho, "DiscreteMeasurePair.rho");
        if (rho.size() != mu.size())
            throw ConfigError("DiscreteMeasurePair: rho size does not match mu");
    }
};

// ---------------------------------------------------------------------------
// KL divergence, log-MGF, Gibbs posterior

// sum rho_i log(rho_i / mu_i), with 0 log 0 = 0; infinite mass mismatch is an
// error rather than +inf.
inline double kl_divergence(const DiscreteMeasurePair& pair) {
    pair.validate();
    double kl = 0.0;
    for (std::size_t i = 0; i < pair.mu.size(); ++i) {
        const double r = pair.rho[i];
        if (r <= 0.0) continue;
        const double m = pair.mu.weights[i];
        if (m <= 0.0)
            throw NotAbsolutelyContinuous(
                "kl_divergence: rho puts mass on a mu-null point");
        kl += r * std::log(r / m);
    }
    // Guard against rounding pushing the sum a hair below zero.
    if (kl < 0.0 && kl > -1e-12) kl = 0.0;
    return kl;
}

// log sum_i mu_i exp(g_i), max-shifted over the support so |g| up to ~700
// neither overflows nor loses the leading term.
inline double log_mgf(const DiscreteSpace& mu, const std::vector<double>& g) {
    mu.validate();
    if (g.size() != mu.size()) throw ConfigError("log_mgf: g size does not match mu");
    detail::validate_finite(g, "log_mgf");
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (mu.weights[i] > 0.0) shift = std::max(shift, g[i]);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (mu.weights[i] > 0.0) acc += mu.weights[i] * std::exp(g[i] - shift);
    return shift + std::log(acc);
}

// The maximizer of E_rho g - KL(rho, mu): rho_i proportional to mu_i exp(g_i).
inline std::vector<double> gibbs_posterior(const DiscreteSpace& mu,
                                           const std::vector<double>& g) {
    mu.validate();
    if (g.size() != mu.size())
        throw ConfigError("gibbs_posterior: g size does not match mu");
    detail::validate_finite(g, "gibbs_posterior");
    double shift = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (mu.weights[i] > 0.0) shift = std::max(shift, g[i]);
    std::vector<double> rho(g.size(), 0.0);
    double z = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (mu.weights[i] > 0.0) {
            rho[i] = mu.weights[i] * std::exp(g[i] - shift);
            z += rho[i];
        }
    }
    for (double& r : rho) r /= z;
    return rho;
}

// log E_mu e^g - (E_rho g - KL(rho, mu)): nonnegative, zero exactly at the
// Gibbs posterior.
inline double duality_gap(const DiscreteSpace& mu, const std::vector<double>& g,
                          const std::vector<double>& rho) {
    const double lhs = log_mgf(mu, g);
    const double kl = kl_divergence({mu, rho});
    double mean = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (rho[i] > 0.0) mean += rho[i] * g[i];
    return lhs - (mean - kl);
}

// ---------------------------------------------------------------------------
// Deviation certificate on finite alphabets

struct PacBayesInstance {
    DiscreteSpace theta_space;          // prior mu over the parameter points
    std::vector<double> x_weights;      // law of one observation X
    std::vector<std::vector<double>> f; // f[x][theta]

    void validate() const {
        theta_space.validate();
        detail::validate_weights(x_weights, "PacBayesInstance.x_weights");
        if (f.size() != x_weights.size())
            throw ConfigError("PacBayesInstance: f rows must match the X alphabet");
        for (const auto& row : f) {
            if (row.size() != theta_space.size())
                throw ConfigError("PacBayesInstance: f columns must match theta");
            detail::validate_finite(row, "PacBayesInstance.f");
        }
    }

    // log E_X exp f(X, theta) for one theta, exact on the finite alphabet.
    double log_mgf_x(std::size_t theta) const {
        DiscreteSpace xs;
        xs.weights = x_weights;
        std::vector<double> col(f.size());
        for (std::size_t x = 0; x < f.size(); ++x) col[x] = f[x][theta];
        return log_mgf(xs, col);
    }
};

struct PacBayesCertificate {
    bool holds = false;
    double slack = 0.0; // rhs - lhs
    double lhs = 0.0;   // (1/n) sum_i E_rho f(X_i, theta)
    double rhs = 0.0;   // E_rho log E_X e^f + (KL(rho, mu) + t)/n
};

// Evaluates both sides of the deviation inequality exactly for the observed
// draws (indices into the X alphabet) and a fixed posterior rho.
inline PacBayesCertificate pacbayes_certificate(const PacBayesInstance& inst,
                                                const std::vector<std::size_t>& draws,
                                                const std::vector<double>& rho,
                                                double t) {
    inst.validate();
    if (draws.empty()) throw ConfigError("pacbayes_certificate: need draws");
    if (!(t > 0.0)) throw ConfigError("pacbayes_certificate: t must be > 0");
    for (std::size_t ix : draws)
        if (ix >= inst.x_weights.size())
            throw ConfigError("pacbayes_certificate: draw index out of range");
    const double kl = kl_divergence({inst.theta_space, rho});
    const std::size_t n = draws.size();
    const std::size_t k = inst.theta_space.size();

    PacBayesCertificate out;
    for (std::size_t theta = 0; theta < k; ++theta) {
        if (rho[theta] <= 0.0) continue;
        double mean = 0.0;
        for (std::size_t ix : draws) mean += inst.f[ix][theta];
        mean /= static_cast<double>(n);
        out.lhs += rho[theta] * mean;
        out.rhs += rho[theta] * inst.log_mgf_x(theta);
    }
    out.rhs += (kl + t) / static_cast<double>(n);
    out.slack = out.rhs - out.lhs;
    out.holds = out.lhs <= out.rhs;
    return out;
}

} // namespace effrank
