#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <effrank/rng.hpp>
#include <effrank/variational.hpp>

using namespace effrank;

namespace {

DiscreteSpace space(std::vector<double> w) {
    DiscreteSpace s;
    s.weights = std::move(w);
    return s;
}

// Random measure with full support: weights proportional to u_i + floor.
std::vector<double> random_weights(Rng& rng, std::size_t k) {
    std::vector<double> w(k);
    double sum = 0.0;
    for (double& x : w) {
        x = rng.uniform_pos() + 1e-3;
        sum += x;
    }
    for (double& x : w) x /= sum;
    return w;
}

// Sample an index from a finite law by inverse CDF.
std::size_t sample_index(Rng& rng, const std::vector<double>& w) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
        acc += w[i];
        if (u < acc) return i;
    }
    return w.size() - 1;
}

} // namespace

TEST_SUITE("variational") {

TEST_CASE("discrete space and measure-pair validation") {
    const DiscreteSpace u4 = DiscreteSpace::uniform(4);
    CHECK_EQ(u4.size(), 4);
    CHECK_NOTHROW(u4.validate());
    CHECK_EQ(u4.weights[2], 0.25);

    CHECK_THROWS_AS(DiscreteSpace::uniform(0), ConfigError);
    CHECK_THROWS_AS(space({0.5, 0.6}).validate(), ConfigError);
    CHECK_THROWS_AS(space({1.5, -0.5}).validate(), ConfigError);
    CHECK_THROWS_AS(space({}).validate(), ConfigError);

    DiscreteSpace labeled = space({0.5, 0.5});
    labeled.labels = {"a"};
    CHECK_THROWS_AS(labeled.validate(), ConfigError);
    labeled.labels = {"a", "b"};
    CHECK_NOTHROW(labeled.validate());

    // Mismatched rho length and rho that is not a probability vector.
    CHECK_THROWS_AS((DiscreteMeasurePair{u4, {1.0}}.validate()), ConfigError);
    CHECK_THROWS_AS((DiscreteMeasurePair{u4, {0.3, 0.3, 0.3, 0.3}}.validate()),
                    ConfigError);
}

TEST_CASE("kl divergence: pinned values and absolute continuity") {
    // rho == mu gives exactly zero (every log term is log 1).
    const DiscreteSpace u2 = DiscreteSpace::uniform(2);
    CHECK_EQ(kl_divergence({u2, u2.weights}), 0.0);

    // Uniform prior on two points vs (1/3, 2/3).
    const double expected =
        (1.0 / 3.0) * std::log(2.0 / 3.0) + (2.0 / 3.0) * std::log(4.0 / 3.0);
    CHECK(kl_divergence({u2, {1.0 / 3.0, 2.0 / 3.0}}) ==
          doctest::Approx(expected).epsilon(1e-15));
    CHECK(kl_divergence({u2, {1.0 / 3.0, 2.0 / 3.0}}) ==
          doctest::Approx(0.056633).epsilon(1e-5));

    // Point mass on a point of mu-weight 1/k costs exactly log k.
    for (std::size_t k : {2, 5, 16}) {
        std::vector<double> point(k, 0.0);
        point[k / 2] = 1.0;
        const DiscreteSpace uk = DiscreteSpace::uniform(k);
        CHECK(kl_divergence({uk, point}) ==
              doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-15));
    }

    // 0 log 0 terms are dropped: rho may vanish where mu does not...
    const DiscreteSpace mu3 = space({0.5, 0.25, 0.25});
    CHECK(kl_divergence({mu3, {0.5, 0.5, 0.0}}) ==
          doctest::Approx(0.5 * std::log(2.0)).epsilon(1e-15));
    // ...and where both vanish the point simply does not contribute.
    CHECK_EQ(kl_divergence({space({0.5, 0.5, 0.0}), {0.5, 0.5, 0.0}}), 0.0);

    // Mass on a mu-null point is an error, not infinity.
    CHECK_THROWS_AS(kl_divergence({space({1.0, 0.0}), {0.5, 0.5}}),
                    NotAbsolutelyContinuous);
}

TEST_CASE("kl divergence: nonnegative, zero only at rho == mu") {
    Rng rng(0x41d1, 0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t k = 2 + static_cast<std::size_t>(rng.uniform() * 19.0);
        const DiscreteSpace mu = space(random_weights(rng, k));
        CHECK_EQ(kl_divergence({mu, mu.weights}), 0.0);

        // Push mass between two coordinates to force total variation >= delta;
        // the divergence must respond by strictly more than the tolerance.
        std::vector<double> rho = mu.weights;
        const double delta = std::min(0.01, rho[1]);
        rho[0] += delta;
        rho[1] -= delta;
        const double kl = kl_divergence({mu, rho});
        CHECK(kl >= 0.0);
        CHECK(kl > 2.0 * delta * delta - 1e-15); // Pinsker
    }
}

TEST_CASE("log-mgf: pinned values and overflow-safe shifting") {
    const DiscreteSpace u2 = DiscreteSpace::uniform(2);
    CHECK_EQ(log_mgf(u2, {0.0, 0.0}), 0.0);
    CHECK(log_mgf(u2, {0.0, std::log(2.0)}) ==
          doctest::Approx(std::log(1.5)).epsilon(1e-15));

    // Large arguments stay finite and accurate: compare against the shifted
    // small-argument evaluation.
    const double small = std::log(0.5 * (1.0 + std::exp(-1.0)));
    CHECK(log_mgf(u2, {700.0, 699.0}) ==
          doctest::Approx(small + 700.0).epsilon(1e-13));
    CHECK(log_mgf(u2, {-700.0, -701.0}) ==
          doctest::Approx(small - 700.0).epsilon(1e-13));
    CHECK(log_mgf(u2, {700.0, -700.0}) ==
          doctest::Approx(700.0 + std::log(0.5)).epsilon(1e-13));

    // Shifting g by a constant shifts the output by exactly that constant.
    Rng rng(0x106f, 0);
    const DiscreteSpace mu = space(random_weights(rng, 7));
    std::vector<double> g(7), gc(7);
    for (std::size_t i = 0; i < 7; ++i) {
        g[i] = 4.0 * rng.gaussian();
        gc[i] = g[i] + 123.25;
    }
    CHECK(log_mgf(mu, gc) ==
          doctest::Approx(log_mgf(mu, g) + 123.25).epsilon(1e-13));

    // Zero-weight points are ignored even when their g would overflow.
    CHECK_EQ(log_mgf(space({1.0, 0.0}), {0.0, 70000.0}), 0.0);

    CHECK_THROWS_AS(log_mgf(u2, {0.0}), ConfigError);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(log_mgf(u2, {0.0, inf}), ConfigError);
}

TEST_CASE("gibbs posterior: pinned values, shift invariance, support") {
    const DiscreteSpace u2 = DiscreteSpace::uniform(2);
    const std::vector<double> flat = gibbs_posterior(u2, {0.0, 0.0});
    CHECK_EQ(flat[0], 0.5);
    CHECK_EQ(flat[1], 0.5);

    const std::vector<double> tilted = gibbs_posterior(u2, {0.0, std::log(2.0)});
    CHECK(tilted[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(tilted[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));

    Rng rng(0x91bb5, 0);
    const DiscreteSpace mu = space(random_weights(rng, 9));
    std::vector<double> g(9), gc(9);
    for (std::size_t i = 0; i < 9; ++i) {
        g[i] = 3.0 * rng.gaussian();
        gc[i] = g[i] - 650.0;
    }
    const std::vector<double> a = gibbs_posterior(mu, g);
    const std::vector<double> b = gibbs_posterior(mu, gc);
    double sum = 0.0;
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
        sum += a[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));

    // mu-null points keep exactly zero posterior mass.
    const std::vector<double> z = gibbs_posterior(space({0.7, 0.0, 0.3}),
                                                  {0.0, 900.0 / 2.0, 1.0});
    CHECK_EQ(z[1], 0.0);
    CHECK(z[0] + z[2] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("duality gap: pinned value and optimality of the gibbs posterior") {
    const DiscreteSpace u2 = DiscreteSpace::uniform(2);
    const std::vector<double> g = {0.0, std::log(2.0)};

    // rho = mu leaves a strictly positive gap with a closed form.
    const double gap = duality_gap(u2, g, u2.weights);
    CHECK(gap == doctest::Approx(std::log(1.5) - 0.5 * std::log(2.0)).epsilon(1e-14));
    CHECK(gap == doctest::Approx(0.058891).epsilon(1e-5));

    // The Gibbs posterior closes the gap; any perturbation reopens it.
    const std::vector<double> star = gibbs_posterior(u2, g);
    const double gap_star = duality_gap(u2, g, star);
    CHECK(gap_star >= -1e-12);
    CHECK(gap_star <= 1e-10);

    for (double eps : {1e-3, 1e-2, 0.1}) {
        std::vector<double> rho = star;
        rho[0] += eps;
        rho[1] -= eps;
        CHECK(duality_gap(u2, g, rho) > gap_star + 1e-8);
    }
}

TEST_CASE("duality gap: nonnegative over random triples, tight only at gibbs") {
    Rng rng(0xd0a117, 0);
    int checked = 0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t k = 1 + static_cast<std::size_t>(rng.uniform() * 20.0);
        const DiscreteSpace mu = space(random_weights(rng, k));
        // Alternate moderate and extreme payoffs; extremes reach |g| ~ 700.
        const double scale = (rep % 2 == 0) ? 5.0 : 700.0;
        std::vector<double> g(k);
        for (double& x : g) x = scale * (2.0 * rng.uniform() - 1.0);

        // Random rho supported inside supp(mu).
        std::vector<double> rho(k);
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            rho[i] = mu.weights[i] * rng.uniform_pos();
            sum += rho[i];
        }
        for (double& x : rho) x /= sum;

        CHECK(duality_gap(mu, g, rho) >= -1e-12);
        CHECK(kl_divergence({mu, rho}) >= 0.0);

        const std::vector<double> star = gibbs_posterior(mu, g);
        const double gap_star = duality_gap(mu, g, star);
        CHECK(gap_star >= -1e-12);
        CHECK(gap_star <= 1e-10);
        ++checked;
    }
    CHECK_EQ(checked, 1000);

    // KL separates measures: a bounded-away-from-mu rho has KL well above 0.
    const DiscreteSpace u4 = DiscreteSpace::uniform(4);
    CHECK(kl_divergence({u4, {0.4, 0.2, 0.2, 0.2}}) > 1e-4);
}

TEST_CASE("deviation certificate: exact zero-payoff and single-point cases") {
    PacBayesInstance inst;
    inst.theta_space = DiscreteSpace::uniform(3);
    inst.x_weights = {0.5, 0.5};
    inst.f = {{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};

    // f == 0 with rho = mu: both sides are zero except the t/n budget.
    const std::vector<std::size_t> draws = {0, 1, 1, 0, 1, 0, 0, 1, 1, 0};
    const PacBayesCertificate c0 =
        pacbayes_certificate(inst, draws, inst.theta_space.weights, 2.0);
    CHECK(c0.holds);
    CHECK_EQ(c0.lhs, 0.0);
    CHECK_EQ(c0.slack, 0.2);

    // A single parameter point reduces to the scalar Chernoff check.
    PacBayesInstance single;
    single.theta_space = DiscreteSpace::uniform(1);
    single.x_weights = {0.5, 0.5};
    single.f = {{0.0}, {1.0}};
    const std::vector<std::size_t> obs = {1, 1, 0, 1};
    const PacBayesCertificate c1 = pacbayes_certificate(single, obs, {1.0}, 1.5);
    CHECK(c1.lhs == doctest::Approx(0.75).epsilon(1e-15));
    const double chernoff_rhs = std::log(0.5 * (1.0 + std::exp(1.0))) + 1.5 / 4.0;
    CHECK(c1.rhs == doctest::Approx(chernoff_rhs).epsilon(1e-14));
    CHECK(c1.slack == doctest::Approx(chernoff_rhs - 0.75).epsilon(1e-13));
    CHECK_EQ(c1.holds, c1.slack >= 0.0);

    CHECK_THROWS_AS(pacbayes_certificate(inst, {0, 2}, inst.theta_space.weights, 1.0),
                    ConfigError);
    CHECK_THROWS_AS(pacbayes_certificate(inst, draws, inst.theta_space.weights, 0.0),
                    ConfigError);
    CHECK_THROWS_AS(pacbayes_certificate(inst, {}, inst.theta_space.weights, 1.0),
                    ConfigError);
}

TEST_CASE("deviation certificate: worst-case rho matches the duality value") {
    // The most adversarial posterior is the Gibbs posterior of
    // h_theta = sum_i f(x_i, theta) - n log E_X e^{f(X, theta)}; its slack is
    // (t - log E_mu e^h)/n up to the duality gap.
    Rng rng(0xce57, 0);
    PacBayesInstance inst;
    inst.theta_space = space(random_weights(rng, 5));
    inst.x_weights = {0.4, 0.3, 0.2, 0.1};
    inst.f.assign(4, std::vector<double>(5));
    for (auto& row : inst.f)
        for (double& x : row) x = 2.0 * (2.0 * rng.uniform() - 1.0);

    const std::size_t n = 10;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<std::size_t> draws(n);
        for (auto& ix : draws) ix = sample_index(rng, inst.x_weights);

        std::vector<double> h(5, 0.0);
        for (std::size_t theta = 0; theta < 5; ++theta) {
            for (std::size_t ix : draws) h[theta] += inst.f[ix][theta];
            h[theta] -= static_cast<double>(n) * inst.log_mgf_x(theta);
        }
        const double lm = log_mgf(inst.theta_space, h);
        const std::vector<double> worst = gibbs_posterior(inst.theta_space, h);

        const double t = 2.0;
        const PacBayesCertificate cert = pacbayes_certificate(inst, draws, worst, t);
        CHECK(cert.slack * static_cast<double>(n) ==
              doctest::Approx(t - lm).epsilon(1e-9));
        CHECK_EQ(cert.holds, cert.slack >= 0.0);
    }
}

TEST_CASE("deviation certificate: failure frequency within the advertised tail") {
    // Resample the data many times; the simultaneous-over-rho failure event
    // {sup_rho violation} == {log E_mu e^h > t} is computed exactly, so the
    // empirical failure rate must sit below e^{-t} plus binomial noise.
    Rng setup(0xfa11, 0);
    PacBayesInstance inst;
    inst.theta_space = space(random_weights(setup, 5));
    inst.x_weights = {0.35, 0.3, 0.2, 0.15};
    inst.f.assign(4, std::vector<double>(5));
    for (auto& row : inst.f)
        for (double& x : row) x = 3.0 * (2.0 * setup.uniform() - 1.0);

    std::vector<double> log_mgf_x(5);
    for (std::size_t theta = 0; theta < 5; ++theta)
        log_mgf_x[theta] = inst.log_mgf_x(theta);

    const std::size_t n = 10;
    const int reps = 100000;
    for (double t : {1.0, 2.0, 3.0}) {
        Rng rng(0x7a11, static_cast<std::uint64_t>(t));
        int failures = 0;
        for (int rep = 0; rep < reps; ++rep) {
            std::vector<double> h(5, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t ix = sample_index(rng, inst.x_weights);
                for (std::size_t theta = 0; theta < 5; ++theta)
                    h[theta] += inst.f[ix][theta];
            }
            for (std::size_t theta = 0; theta < 5; ++theta)
                h[theta] -= static_cast<double>(n) * log_mgf_x[theta];
            if (log_mgf(inst.theta_space, h) > t) ++failures;
        }
        const double freq = static_cast<double>(failures) / reps;
        const double p = std::exp(-t);
        const double se = std::sqrt(p * (1.0 - p) / reps);
        INFO("t=" << t << " freq=" << freq << " bound=" << (p + 3.0 * se));
        CHECK(freq <= p + 3.0 * se);
    }
}

} // TEST_SUITE
