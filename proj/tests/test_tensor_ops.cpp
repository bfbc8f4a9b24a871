#include <doctest.h>

#include <cmath>
#include <vector>

#include <effrank/tensor_ops.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace effrank;

namespace {

std::vector<double> random_unit(Rng& rng, std::size_t d) {
    std::vector<double> v(d);
    double nrm_sq = 0.0;
    for (auto& c : v) {
        c = rng.gaussian();
        nrm_sq += c * c;
    }
    const double inv = 1.0 / std::sqrt(nrm_sq);
    for (auto& c : v) c *= inv;
    return v;
}

SampleSet gaussian_samples(const CovarianceSpec& spec, std::size_t n,
                           std::uint64_t seed) {
    Sampler sampler({FamilyKind::gaussian, spec});
    return SampleSet(sampler.sample(n, SeedSpec{seed, 0}), n, sampler.dim());
}

} // namespace

TEST_SUITE("tensor_ops") {

TEST_CASE("form value: exact covariance cancellation and a rank-one cube") {
    // Rows whose sample covariance is exactly diag(0.5, 0.5); with that
    // matrix as centering the s=2 form vanishes in every direction.
    SampleSet exact = SampleSet::from_rows(
        {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}});
    EmpiricalTensorForm f2(std::move(exact), 2,
                           centering_quadratic(SymMatrix::diagonal({0.5, 0.5})));
    Rng rng(SeedSpec{0x7e0, 0});
    for (int rep = 0; rep < 25; ++rep)
        CHECK(std::fabs(f2.value(random_unit(rng, 2))) <= 1e-14);

    // Single sample 2 e1 at s = 3 with zero centering: <X,e1>^3 = 8.
    EmpiricalTensorForm f3(SampleSet::from_rows({{2.0, 0.0}}), 3, centering_zero());
    CHECK_EQ(f3.value({1.0, 0.0}), 8.0);
    CHECK_EQ(f3.value({-1.0, 0.0}), -8.0);

    CHECK_THROWS_AS(f3.value({1.0 + 2e-10, 0.0}), DomainError);
    CHECK_THROWS_AS(f3.value({0.5, 0.5}), DomainError);
    CHECK_THROWS_AS(EmpiricalTensorForm(SampleSet::from_rows({{1.0}}), 1,
                                        centering_zero()),
                    ConfigError);
}

TEST_CASE("form value matches the dense tensor contraction oracle") {
    const std::size_t n = 5, d = 2;
    Sampler sampler({FamilyKind::gaussian, CovarianceSpec::poly(d, 0.7)});
    const std::vector<double> rows = sampler.sample(n, SeedSpec{3, 0});
    Rng rng(SeedSpec{3, 1});
    for (int s : {2, 3, 4}) {
        EmpiricalTensorForm f(SampleSet(rows, n, d), s, centering_zero());
        for (int rep = 0; rep < 20; ++rep) {
            const auto v = random_unit(rng, d);
            const double direct = oracle::dense_form_value(rows, n, d, s, v);
            CHECK(std::fabs(f.value(v) - direct) <= 1e-12);
        }
    }
}

TEST_CASE("centering providers match true moments and their gradients") {
    const std::vector<DistributionFamily> fams = {
        {FamilyKind::gaussian, CovarianceSpec::poly(3, 1.0)},
        {FamilyKind::uniform_ball, CovarianceSpec::identity_d(3)},
        {FamilyKind::rademacher_mix, CovarianceSpec::identity_d(3)},
        {FamilyKind::laplace_product, CovarianceSpec::diag({4.0, 1.0, 1.0})},
        {FamilyKind::student_t, CovarianceSpec::identity_d(3)},
    };
    Rng rng(SeedSpec{0x7e1, 0});
    for (const auto& fam : fams) {
        for (int s : {2, 3, 4}) {
            const Centering c = centering_for_family(fam, s);
            for (int rep = 0; rep < 5; ++rep) {
                const auto v = random_unit(rng, 3);
                const double truth = true_moment(fam, v, s).value;
                CHECK(c.value(v) == doctest::Approx(truth).epsilon(1e-9).scale(1.0));

                // Central finite differences against the analytic gradient.
                std::vector<double> grad(3, 0.0);
                c.add_gradient(v, grad);
                const double h = 1e-6;
                for (std::size_t j = 0; j < 3; ++j) {
                    auto vp = v, vm = v;
                    vp[j] += h;
                    vm[j] -= h;
                    const double fd = (c.value(vp) - c.value(vm)) / (2.0 * h);
                    CHECK(grad[j] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
                }
            }
        }
    }

    // Odd orders vanish by symmetry.
    CHECK_EQ(centering_for_family(fams[0], 3).name, "zero");
    // No closed form: product cores at order six; nonexistent moments.
    CHECK_THROWS_AS(centering_for_family(fams[3], 6), ConfigError);
    CHECK_THROWS_AS(centering_for_family(fams[4], 5), MomentDoesNotExist);
    CHECK_THROWS_AS(centering_for_family(fams[4], 6), MomentDoesNotExist);
    // Gaussian order six has a closed form.
    const Centering g6 = centering_for_family(fams[0], 6);
    const std::vector<double> e1 = {1.0, 0.0, 0.0};
    CHECK(g6.value(e1) == doctest::Approx(15.0).epsilon(1e-12)); // 5!! = 15
}

TEST_CASE("s=2 supremum equals the matrix operator norm") {
    SampleSet samples = gaussian_samples(CovarianceSpec::poly(4, 0.5), 10, 17);
    const SymMatrix sigma = materialize_sigma(CovarianceSpec::poly(4, 0.5));
    const SymMatrix gap = sample_covariance(samples) - sigma;
    EmpiricalTensorForm f(std::move(samples), 2, centering_quadratic(sigma));
    const SupResult sup = operator_norm_sup(f);
    CHECK(sup.converged);
    CHECK(sup.value == doctest::Approx(operator_norm(gap)).epsilon(1e-8));
    // The argmax re-evaluates to the reported value.
    CHECK(norm2(sup.argmax) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(f.value(sup.argmax)) == doctest::Approx(sup.value).epsilon(1e-12));
}

TEST_CASE("d=1 supremum is the larger endpoint value") {
    SampleSet samples = SampleSet::from_rows({{1.5}, {-0.3}, {2.0}});
    EmpiricalTensorForm f(std::move(samples), 3, centering_zero());
    const double at_one = std::fabs(f.value({1.0}));
    const double at_minus = std::fabs(f.value({-1.0}));
    const double expect = std::max(at_one, at_minus);
    CHECK(operator_norm_sup(f).value == doctest::Approx(expect).epsilon(1e-12));
    CHECK(grid_supremum(f, 10).value == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("d=3 cubic supremum matches a Fibonacci-sphere grid oracle") {
    SampleSet samples = gaussian_samples(CovarianceSpec::identity_d(3), 20, 7);
    EmpiricalTensorForm f(std::move(samples), 3, centering_zero());
    const SupResult grid = grid_supremum(f, 1000000);
    const SupResult power = operator_norm_sup(f);
    CHECK(power.converged);
    REQUIRE(grid.value > 0.0);
    CHECK(std::fabs(power.value - grid.value) / grid.value <= 1e-3);
    // The grid never beats a converged maximizer by more than its resolution.
    CHECK(power.value >= grid.value - 1e-9);
}

TEST_CASE("supremum dominates every probed direction") {
    SampleSet samples = gaussian_samples(CovarianceSpec::poly(4, 1.0), 15, 23);
    EmpiricalTensorForm f(std::move(samples), 3, centering_zero());
    const SupResult sup = operator_norm_sup(f);
    Rng rng(SeedSpec{0x7e2, 0});
    for (int rep = 0; rep < 200; ++rep)
        CHECK(sup.value >= std::fabs(f.value(random_unit(rng, 4))) - 1e-12);
}

TEST_CASE("antipodal restarts and restart count behave as documented") {
    SampleSet samples = gaussian_samples(CovarianceSpec::poly(4, 1.0), 12, 29);
    const std::vector<double> flat_copy = [&] {
        std::vector<double> out;
        for (std::size_t i = 0; i < samples.n(); ++i)
            out.insert(out.end(), samples.row(i), samples.row(i) + samples.d());
        return out;
    }();
    EmpiricalTensorForm f(std::move(samples), 3, centering_zero());

    PowerOptions with, without;
    with.restarts = without.restarts = 32;
    with.antipodes = true;
    without.antipodes = false;
    const double a = operator_norm_sup(f, with).value;
    const double b = operator_norm_sup(f, without).value;
    CHECK(std::fabs(a - b) <= 1e-9 * std::max(1.0, std::fabs(a)));

    // Nondecreasing in the number of restarts under the same seed prefix.
    double prev = 0.0;
    for (std::size_t r : {2u, 4u, 8u, 16u, 32u}) {
        PowerOptions opt;
        opt.restarts = r;
        const double val = operator_norm_sup(f, opt).value;
        CHECK(val >= prev - 1e-15);
        prev = val;
    }

    // Identical inputs give bit-identical results (pure deterministic path).
    EmpiricalTensorForm g(SampleSet(flat_copy, 12, 4), 3, centering_zero());
    CHECK_EQ(operator_norm_sup(f).value, operator_norm_sup(g).value);

    CHECK_THROWS_AS(operator_norm_sup(f, PowerOptions{0}), ConfigError);
    CHECK_THROWS_AS(grid_supremum(f, 100), ConfigError); // d = 4 unsupported
    CHECK_THROWS_AS(grid_supremum(f, 0), ConfigError);
}

} // TEST_SUITE
