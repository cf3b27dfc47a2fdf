#include "oracles.hpp"
#include "specshape/coeff.hpp"
#include "specshape/error.hpp"

#include <doctest.h>

#include <random>

using namespace specshape;

namespace {

double lh_oracle(const CoefficientTensor& t)
{
    return oracle::lh_constant_eigen_route([&](int i, int j, int a, int b) { return t(i, j, a, b); }, t.m(),
                                           20000);
}

}  // namespace

TEST_SUITE("coeff")
{
    TEST_CASE("presets")
    {
        const auto lap = make_laplacian(3);
        CHECK(lap.m() == 3);
        CHECK(lap.n() == 2);
        CHECK(lap(1, 1, 0, 0) == 1.0);
        CHECK(lap(1, 2, 0, 0) == 0.0);
        CHECK(lap(0, 0, 0, 1) == 0.0);

        const auto lame = make_lame(2.0);
        CHECK(lame(0, 0, 0, 0) == 3.0);
        CHECK(lame(0, 1, 0, 1) == 2.0);
        CHECK(lame(0, 1, 1, 0) == 0.0);
        CHECK(lame(1, 1, 0, 0) == 1.0);

        CHECK_THROWS_AS(make_laplacian(0), Error);
        CHECK_THROWS_AS(make_lame(-0.1), Error);
    }

    TEST_CASE("symmetry")
    {
        CHECK(check_symmetry(make_lame(0.7)));
        auto t = make_laplacian(2);
        t(0, 1, 0, 1) = 0.3;
        CHECK_FALSE(check_symmetry(t));
        t(1, 0, 1, 0) = 0.3;
        CHECK(check_symmetry(t));
    }

    TEST_CASE("Legendre-Hadamard constant against the eigenvalue route")
    {
        CHECK(legendre_hadamard_constant(make_laplacian(1)) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(legendre_hadamard_constant(make_laplacian(2)) == doctest::Approx(1.0).epsilon(1e-12));
        for (double k : {0.0, 0.5, 1.0, 4.0})
            CHECK(legendre_hadamard_constant(make_lame(k)) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(legendre_hadamard_constant(-make_lame(1.0)) == doctest::Approx(-(1.0 + 1.0)).epsilon(1e-10));

        // Random symmetric 2 x 2 systems.
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int trial = 0; trial < 20; ++trial) {
            CoefficientTensor t(2, 2);
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j)
                    for (int a = 0; a < 2; ++a)
                        for (int b = 0; b < 2; ++b)
                            if (std::make_pair(i, a) <= std::make_pair(j, b)) {
                                const double v = u(rng) + (i == j && a == b ? 2.0 : 0.0);
                                t(i, j, a, b) = v;
                                t(j, i, b, a) = v;
                            }
            CHECK(legendre_hadamard_constant(t) == doctest::Approx(lh_oracle(t)).epsilon(1e-7));
        }
    }

    TEST_CASE("energy density of the Lame preset")
    {
        const double k = 1.7;
        Eigen::MatrixXd G(2, 2);
        G << 0.3, -1.2, 0.8, 2.1;
        const double expected = G.squaredNorm() + k * G.trace() * G.trace();
        CHECK(energy_density(make_lame(k), G) == doctest::Approx(expected).epsilon(1e-14));
        CHECK_THROWS_AS(energy_density(make_lame(k), Eigen::MatrixXd::Zero(1, 2)), Error);
    }

    TEST_CASE("operator on quadratics")
    {
        Eigen::MatrixXd H(2, 2);
        H << 2.0, 0.5, 0.5, -1.0;
        const auto lap = apply_operator_quadratic(make_laplacian(1), {H});
        CHECK(lap(0) == doctest::Approx(-1.0));

        // Lame: -(Laplace u + k grad div u).
        Eigen::MatrixXd H0(2, 2), H1(2, 2);
        H0 << 1.0, 2.0, 2.0, 3.0;
        H1 << -1.0, 0.5, 0.5, 4.0;
        const double k = 0.5;
        const auto v = apply_operator_quadratic(make_lame(k), {H0, H1});
        CHECK(v(0) == doctest::Approx(-(H0.trace() + k * (H0(0, 0) + H1(0, 1)))));
        CHECK(v(1) == doctest::Approx(-(H1.trace() + k * (H0(1, 0) + H1(1, 1)))));

        Eigen::MatrixXd bad(2, 2);
        bad << 0.0, 1.0, 0.0, 0.0;
        CHECK_THROWS_AS(apply_operator_quadratic(make_laplacian(1), {bad}), Error);
    }

    TEST_CASE("tensor literals")
    {
        CHECK(parse_tensor_literal("laplacian:2").m() == 2);
        CHECK(parse_tensor_literal("lame:0.5")(0, 1, 0, 1) == 0.5);
        const auto t = parse_tensor_literal(
            R"([{"i":1,"j":1,"alpha":1,"beta":1,"value":2.0},{"i":1,"j":1,"alpha":2,"beta":2,"value":3.0}])");
        CHECK(t.m() == 1);
        CHECK(t(0, 0, 0, 0) == 2.0);
        CHECK(t(0, 0, 1, 1) == 3.0);
        CHECK_THROWS_AS(parse_tensor_literal("lame:abc"), ConfigError);
        CHECK_THROWS_AS(parse_tensor_literal("[{\"i\":0}]"), ConfigError);
        CHECK_THROWS_AS(parse_tensor_literal("nonsense"), ConfigError);
    }
}
