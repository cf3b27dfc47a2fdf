#include "helpers.hpp"
#include "specshape/error.hpp"
#include "specshape/shapederiv.hpp"

#include <doctest.h>

#include <cmath>

using namespace specshape;

namespace {

struct Fixture
{
    Mesh mesh;
    SystemMatrices S;
    Spectrum spectrum;
};

Fixture solve(const Mesh& mesh, const CoefficientTensor& t, BoundaryCondition bc, int k)
{
    Fixture f{mesh, assemble(mesh, t, bc, 2), {}};
    f.spectrum = solve_eigs(f.S, k);
    return f;
}

Cluster form_cluster(const Fixture& f, int index)
{
    return form_orthonormalize(f.S, detect_cluster(f.spectrum, index, kTightClusterTol));
}

PerturbationField nodal(const Mesh& m, const PerturbationField& psi, double scale = 1.0)
{
    NodalField n;
    for (int i = 0; i < static_cast<int>(m.nodes.size()); ++i)
        n.displacement.push_back(scale * field_at_node(psi, m, i));
    return PerturbationField{n};
}

}  // namespace

TEST_SUITE("shapederiv")
{
    TEST_CASE("Dirichlet: zero field, dilation, translation")
    {
        const auto f = solve(testing::disk(12), make_laplacian(1), BoundaryCondition::Dirichlet, 4);
        const auto c = form_cluster(f, 1);
        const auto zero = hadamard_dirichlet(f.mesh, f.S, make_laplacian(1), c, PerturbationField{Translation{}});
        CHECK(zero.derivatives == std::vector<double>{0.0});

        const auto dil = hadamard_dirichlet(f.mesh, f.S, make_laplacian(1), c, PerturbationField{Dilation{}});
        CHECK(dil.derivatives[0] == doctest::Approx(-2.0 * c.lambda).epsilon(2e-2));  // coarse mesh

        const auto tr =
            hadamard_dirichlet(f.mesh, f.S, make_laplacian(1), c, PerturbationField{Translation{1.0, 0.5}});
        CHECK(std::abs(tr.derivatives[0]) < 1e-3 * c.lambda);

        // Stored-field identity and the binomial structure of a double cluster.
        const auto pair = form_cluster(f, 2);
        REQUIRE(pair.size() == 2);
        const auto r = hadamard_dirichlet(f.mesh, f.S, make_laplacian(1), pair, PerturbationField{RadialBump{1, 0.7}});
        const double sum = r.per_l_integrals[0] + r.per_l_integrals[1];
        CHECK(r.derivatives[0] == -pair.lambda * binomial(1, 0) * sum);
        CHECK(r.derivatives[1] == -std::pow(pair.lambda, 2) * binomial(1, 1) * sum);
        const auto d = hadamard_dirichlet(f.mesh, f.S, make_laplacian(1), pair, PerturbationField{Dilation{}});
        CHECK(d.derivatives[1] / d.derivatives[0] == doctest::Approx(pair.lambda).epsilon(1e-14));
    }

    TEST_CASE("Dirichlet sign and energy density positivity")
    {
        const auto f = solve(testing::ellipse(1.2, 0.8, 10), make_lame(1.0), BoundaryCondition::Dirichlet, 4);
        const auto c = form_cluster(f, 1);
        const auto density = cluster_boundary_density(f.mesh, f.S, make_lame(1.0), c);
        for (double g : density.total)
            CHECK(g >= -1e-10);
        const auto r = hadamard_dirichlet(f.mesh, f.S, make_lame(1.0), c, PerturbationField{Dilation{}});
        CHECK(r.derivatives[0] <= 0.0);
    }

    TEST_CASE("linearity and tangential invariance")
    {
        const auto f = solve(testing::ellipse(1.1, 0.9, 10), make_laplacian(1), BoundaryCondition::Dirichlet, 3);
        const auto c = form_cluster(f, 1);
        const auto t = make_laplacian(1);
        const auto p1 = nodal(f.mesh, PerturbationField{Dilation{}});
        const auto p2 = nodal(f.mesh, PerturbationField{RadialBump{3, 1.0}});
        NodalField comb;
        const double alpha = 0.7, beta = -1.9;
        for (std::size_t i = 0; i < f.mesh.nodes.size(); ++i)
            comb.displacement.push_back(alpha * std::get<NodalField>(p1.field).displacement[i] +
                                        beta * std::get<NodalField>(p2.field).displacement[i]);
        const double h1 = hadamard(f.mesh, f.S, t, c, p1).derivatives[0];
        const double h2 = hadamard(f.mesh, f.S, t, c, p2).derivatives[0];
        const double h12 = hadamard(f.mesh, f.S, t, c, PerturbationField{comb}).derivatives[0];
        CHECK(std::abs(h12 - (alpha * h1 + beta * h2)) <= 1e-10 * (std::abs(h1) + std::abs(h2)));

        // Moving only interior nodes gives zeta . nu = 0 on the boundary.
        NodalField inner;
        inner.displacement.assign(f.mesh.nodes.size(), Point(0.3, -0.2));
        for (const auto& e : f.mesh.boundary_edges)
            inner.displacement[e.a] = Point::Zero();
        CHECK(hadamard(f.mesh, f.S, t, c, PerturbationField{inner}).derivatives[0] == 0.0);
    }

    TEST_CASE("Neumann: zero mode and dilation")
    {
        const auto f = solve(testing::disk(12), make_laplacian(1), BoundaryCondition::Neumann, 7);
        const auto zero = detect_cluster(f.spectrum, 1, kTightClusterTol);
        for (const PerturbationField& psi :
             {PerturbationField{Dilation{}}, PerturbationField{RadialBump{2, 1.0}}, PerturbationField{Translation{1, 1}}}) {
            const auto r = hadamard_neumann(f.mesh, f.S, make_laplacian(1), zero, psi);
            CHECK(r.derivatives == std::vector<double>{0.0});
        }
        const auto c = form_cluster(f, 6);
        REQUIRE(c.size() == 1);
        const auto r = hadamard_neumann(f.mesh, f.S, make_laplacian(1), c, PerturbationField{Dilation{}});
        CHECK(r.derivatives[0] == doctest::Approx(-2.0 * c.lambda).epsilon(1e-2));
        CHECK_THROWS_AS(hadamard_dirichlet(f.mesh, f.S, make_laplacian(1), c, PerturbationField{Dilation{}}), Error);
    }

    TEST_CASE("preconditions")
    {
        const auto f = solve(testing::disk(8), make_laplacian(1), BoundaryCondition::Dirichlet, 3);
        const auto raw = detect_cluster(f.spectrum, 1, kTightClusterTol);
        CHECK_THROWS_AS(hadamard_dirichlet(f.mesh, f.S, make_laplacian(1), raw, PerturbationField{Dilation{}}), Error);
        CHECK_THROWS_AS(hadamard_neumann(f.mesh, f.S, make_laplacian(1), raw, PerturbationField{Dilation{}}), Error);
        CHECK_THROWS_AS(criticality_residual(f.mesh, f.S, make_laplacian(1), Cluster{}), Error);
    }

    TEST_CASE("finite-difference oracle")
    {
        const auto t = make_laplacian(1);
        const auto f = solve(testing::disk(10), t, BoundaryCondition::Dirichlet, 3);
        const std::vector<int> F{1};
        const auto zero = fd_reference(f.mesh, t, BoundaryCondition::Dirichlet, 2, f.S, f.spectrum, F,
                                       PerturbationField{Translation{}}, 1e-3);
        CHECK(zero.derivatives == std::vector<double>{0.0});
        const auto dil = fd_reference(f.mesh, t, BoundaryCondition::Dirichlet, 2, f.S, f.spectrum, F,
                                      PerturbationField{Dilation{}}, 1e-3);
        CHECK(dil.derivatives[0] == doctest::Approx(-2.0 * f.spectrum.eigenvalues[0]).epsilon(1e-6));
        CHECK_THROWS_AS(fd_reference(f.mesh, t, BoundaryCondition::Dirichlet, 2, f.S, f.spectrum, {3},
                                     PerturbationField{Dilation{}}, 1e-3),
                        Error);

        // Nearly circular ellipse: the x- and y-modes swap order when the
        // mode-2 bump reverses the elongation, so index 2 changes identity.
        const auto e = solve(testing::ellipse(1.001, 1.0 / 1.001, 10), t, BoundaryCondition::Dirichlet, 4);
        CHECK_THROWS_AS(fd_reference(e.mesh, t, BoundaryCondition::Dirichlet, 2, e.S, e.spectrum, {2},
                                     PerturbationField{RadialBump{2, 1.0}}, 1e-2),
                        Error);
    }

    TEST_CASE("criticality residual")
    {
        const auto t = make_laplacian(1);
        const auto f = solve(testing::disk(16), t, BoundaryCondition::Dirichlet, 4);
        const auto full = form_cluster(f, 2);
        const auto crit = criticality_residual(f.mesh, f.S, t, full);
        CHECK(crit.residual < 0.05);
        CHECK(crit.c_star > 0.0);

        Cluster half = full;
        half.indices = {2};
        half.basis = full.basis.leftCols(1);
        CHECK(criticality_residual(f.mesh, f.S, t, half).residual > 0.3);

        const auto e = solve(testing::ellipse(1.3, 1.0 / 1.3, 16), t, BoundaryCondition::Dirichlet, 3);
        CHECK(criticality_residual(e.mesh, e.S, t, form_cluster(e, 1)).residual > 0.05);

        const auto n = solve(testing::disk(8), t, BoundaryCondition::Neumann, 3);
        const auto z = criticality_residual(n.mesh, n.S, t, detect_cluster(n.spectrum, 1, kTightClusterTol));
        CHECK(z.residual == 0.0);
        CHECK(z.c_star == 0.0);
    }

    TEST_CASE("rotation invariance")
    {
        CHECK(rotation_invariance_check(make_laplacian(2), Homomorphism::IdentityBlock, 50, 1) <= 1e-12);
        CHECK(rotation_invariance_check(make_laplacian(1), Homomorphism::IdentityBlock, 50, 1) <= 1e-12);
        for (double k : {0.0, 0.5, 2.0})
            CHECK(rotation_invariance_check(make_lame(k), Homomorphism::Vector, 50, 3) <= 1e-12);
        CHECK(rotation_invariance_check(make_lame(1.0), Homomorphism::IdentityBlock, 50, 3) > 0.1);
        CHECK(rotation_invariance_check(make_lame(1.0), Homomorphism::Vector, 10, 5) ==
              rotation_invariance_check(make_lame(1.0), Homomorphism::Vector, 10, 5));
        CHECK_THROWS_AS(rotation_invariance_check(make_laplacian(1), Homomorphism::Vector, 5, 0), Error);
        CHECK_THROWS_AS(rotation_invariance_check(make_lame(1.0), Homomorphism::Vector, 0, 0), Error);
    }

    TEST_CASE("discrepancy helpers")
    {
        CHECK(relative_discrepancy(1.0, 2.0, 0.5) == 0.5);
        CHECK(relative_discrepancy(1.0, 0.0, 4.0) == 0.25);
        CHECK(relative_discrepancy(0.0, 0.0, 0.0) == 0.0);
        const Mesh m = testing::disk(4);
        CHECK(derivative_scale(m, 2.0, 2, PerturbationField{Translation{3.0, 4.0}}) ==
              doctest::Approx(4.0 * perimeter(m) * 5.0));
    }
}
