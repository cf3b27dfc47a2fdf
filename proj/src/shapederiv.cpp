#include "specshape/shapederiv.hpp"

#include "specshape/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace specshape {

namespace {

bool is_zero_mode(const Cluster& c)
{
    return std::abs(c.lambda) <= kZeroEigenvalue;
}

void require_form_basis(const Cluster& c)
{
    if (c.size() == 0)
        throw Error("empty cluster");
    if (c.normalization != Normalization::Form)
        throw Error("cluster basis must be orthonormal in the energy form");
    if (!(c.lambda > kZeroEigenvalue))
        throw Error("Hadamard formula needs a positive cluster eigenvalue");
}

HadamardReport integrate(const Mesh& mesh, const BoundaryDensity& density, const Cluster& cluster,
                         const PerturbationField& psi, BoundaryCondition bc)
{
    HadamardReport report;
    report.bc = bc;
    report.lambda = cluster.lambda;
    report.indices = cluster.indices;

    std::vector<double> normal_speed(density.points.size());
    for (std::size_t q = 0; q < density.points.size(); ++q) {
        const auto& pt = density.points[q];
        const BoundaryEdge& e = mesh.boundary_edges[pt.edge];
        normal_speed[q] = field_on_edge(psi, mesh, e, pt.s).dot(e.normal);
    }

    double sum = 0.0;
    for (const auto& member : density.per_member) {
        double integral = 0.0;
        for (std::size_t q = 0; q < member.size(); ++q)
            integral += density.points[q].weight * member[q] * normal_speed[q];
        report.per_l_integrals.push_back(integral);
        sum += integral;
    }
    const int size = cluster.size();
    for (int s = 1; s <= size; ++s)
        // 0 - x rather than -x keeps a vanishing derivative from printing as -0.
        report.derivatives.push_back(0.0 - std::pow(cluster.lambda, s) * binomial(size - 1, s - 1) * sum);
    return report;
}

HadamardReport zero_report(const Cluster& cluster)
{
    HadamardReport report;
    report.bc = BoundaryCondition::Neumann;
    report.lambda = cluster.lambda;
    report.indices = cluster.indices;
    report.per_l_integrals.assign(cluster.size(), 0.0);
    report.derivatives.assign(cluster.size(), 0.0);
    return report;
}

}  // namespace

BoundaryDensity cluster_boundary_density(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                                         const Cluster& cluster)
{
    if (cluster.size() == 0)
        throw Error("empty cluster");
    const bool neumann = S.dofmap.bc == BoundaryCondition::Neumann;
    BoundaryDensity out;
    for (int l = 0; l < cluster.size(); ++l) {
        auto data = boundary_quadrature_data(mesh, S, t, cluster.basis.col(l));
        std::vector<double> member(data.size());
        for (std::size_t q = 0; q < data.size(); ++q)
            member[q] = neumann ? cluster.lambda * data[q].mass_density - data[q].energy_density
                                : data[q].energy_density;
        if (l == 0) {
            out.points = std::move(data);
            out.total.assign(member.size(), 0.0);
        }
        for (std::size_t q = 0; q < member.size(); ++q)
            out.total[q] += member[q];
        out.per_member.push_back(std::move(member));
    }
    return out;
}

HadamardReport hadamard_dirichlet(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                                  const Cluster& cluster, const PerturbationField& psi)
{
    if (S.dofmap.bc != BoundaryCondition::Dirichlet)
        throw Error("hadamard_dirichlet needs a Dirichlet system");
    require_form_basis(cluster);
    return integrate(mesh, cluster_boundary_density(mesh, S, t, cluster), cluster, psi,
                     BoundaryCondition::Dirichlet);
}

HadamardReport hadamard_neumann(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                                const Cluster& cluster, const PerturbationField& psi)
{
    if (S.dofmap.bc != BoundaryCondition::Neumann)
        throw Error("hadamard_neumann needs a Neumann system");
    if (cluster.size() == 0)
        throw Error("empty cluster");
    if (cluster.gap < 10.0 * cluster.spread)
        throw Error("cluster gap is not certified");
    if (is_zero_mode(cluster))
        return zero_report(cluster);
    require_form_basis(cluster);
    return integrate(mesh, cluster_boundary_density(mesh, S, t, cluster), cluster, psi,
                     BoundaryCondition::Neumann);
}

HadamardReport hadamard(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                        const Cluster& cluster, const PerturbationField& psi)
{
    return S.dofmap.bc == BoundaryCondition::Dirichlet ? hadamard_dirichlet(mesh, S, t, cluster, psi)
                                                        : hadamard_neumann(mesh, S, t, cluster, psi);
}

double cluster_sym_function(const Spectrum& spectrum, const std::vector<int>& indices, int s)
{
    std::vector<double> values;
    for (int k : indices) {
        if (k < 1 || k > spectrum.size())
            throw Error("cluster index outside the solved spectrum");
        values.push_back(spectrum.eigenvalues[k - 1]);
    }
    return sym_function(values, s);
}

FdResult fd_reference(const Mesh& mesh, const CoefficientTensor& t, BoundaryCondition bc, int order,
                      const SystemMatrices& base_system, const Spectrum& base, const std::vector<int>& indices,
                      const PerturbationField& psi, double h)
{
    if (indices.empty())
        throw Error("empty cluster");
    if (!(h > 0.0))
        throw Error("finite-difference step must be positive");
    const int last = *std::max_element(indices.begin(), indices.end());
    const int first = *std::min_element(indices.begin(), indices.end());
    if (last >= base.size())
        throw Error("base spectrum must extend past the cluster to certify its gap");

    Eigen::MatrixXd base_basis(base.eigenvectors.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t l = 0; l < indices.size(); ++l)
        base_basis.col(static_cast<Eigen::Index>(l)) = base.eigenvectors.col(indices[l] - 1);
    const Eigen::MatrixXd m_basis = base_system.M * base_basis;
    const int size = static_cast<int>(indices.size());

    auto values_at = [&](double step) {
        const Mesh moved = apply_transform(mesh, psi, step);
        const SystemMatrices S = assemble(moved, t, bc, order);
        const Spectrum spec = solve_eigs(S, base.size());
        const double lo = spec.eigenvalues[first - 1];
        const double hi = spec.eigenvalues[last - 1];
        const double spread = hi - lo;
        double gap = spec.eigenvalues[last] - hi;
        if (first > 1)
            gap = std::min(gap, lo - spec.eigenvalues[first - 2]);
        if (gap < 5.0 * spread)
            throw Error("cluster identity lost under perturbation: gap below five times the spread");
        for (int k : indices) {
            const Eigen::VectorXd v = spec.eigenvectors.col(k - 1);
            const double overlap = (m_basis.transpose() * v).norm();
            if (overlap < 0.9)
                throw Error("cluster identity lost under perturbation: eigenvector left the cluster span");
        }
        std::vector<double> lambda_s;
        for (int s = 1; s <= size; ++s)
            lambda_s.push_back(cluster_sym_function(spec, indices, s));
        return lambda_s;
    };

    const auto plus_h = values_at(h);
    const auto minus_h = values_at(-h);
    const auto plus_half = values_at(0.5 * h);
    const auto minus_half = values_at(-0.5 * h);

    FdResult out;
    for (int s = 0; s < size; ++s) {
        const double d_h = (plus_h[s] - minus_h[s]) / (2.0 * h);
        const double d_half = (plus_half[s] - minus_half[s]) / h;
        out.central_h.push_back(d_h);
        out.central_half_h.push_back(d_half);
        out.derivatives.push_back((4.0 * d_half - d_h) / 3.0);
    }
    return out;
}

double derivative_scale(const Mesh& mesh, double lambda, int s, const PerturbationField& psi)
{
    double sup = 0.0;
    for (const auto& e : mesh.boundary_edges)
        sup = std::max(sup, field_at_node(psi, mesh, e.a).norm());
    return std::pow(std::abs(lambda), s) * perimeter(mesh) * sup;
}

double relative_discrepancy(double value, double reference, double scale)
{
    const double denom = std::max(std::abs(reference), scale);
    if (denom == 0.0)
        return value == reference ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(value - reference) / denom;
}

CriticalityReport criticality_residual(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                                       const Cluster& cluster)
{
    if (cluster.size() == 0)
        throw Error("empty cluster");
    CriticalityReport report;
    if (S.dofmap.bc == BoundaryCondition::Neumann && is_zero_mode(cluster)) {
        // Constant eigenfunctions: both density terms vanish identically.
        report.density = cluster_boundary_density(mesh, S, t, cluster);
        for (auto& member : report.density.per_member)
            std::fill(member.begin(), member.end(), 0.0);
        std::fill(report.density.total.begin(), report.density.total.end(), 0.0);
        return report;
    }
    require_form_basis(cluster);
    report.density = cluster_boundary_density(mesh, S, t, cluster);
    const auto& pts = report.density.points;
    const auto& g = report.density.total;
    double weight = 0.0;
    double mean = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q) {
        weight += pts[q].weight;
        mean += pts[q].weight * g[q];
    }
    mean /= weight;
    double var = 0.0;
    for (std::size_t q = 0; q < g.size(); ++q)
        var += pts[q].weight * (g[q] - mean) * (g[q] - mean);
    const double floor = 1e-12 * std::max(1.0, cluster.lambda) / perimeter(mesh);
    report.c_star = mean;
    report.residual = std::sqrt(var / weight) / std::max(std::abs(mean), floor);
    return report;
}

double rotation_invariance_check(const CoefficientTensor& t, Homomorphism hom, int n_samples, std::uint64_t seed)
{
    const int m = t.m();
    const int n = t.n();
    if (n != 2)
        throw Error("rotation check is implemented for two spatial dimensions");
    if (hom == Homomorphism::Vector && m != n)
        throw Error("the vector homomorphism S(R) = R needs m = n");
    if (n_samples < 1)
        throw Error("rotation check needs at least one sample");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    double worst = 0.0;
    for (int sample = 0; sample < n_samples; ++sample) {
        const double a = angle(rng);
        Eigen::Matrix2d R;
        R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
        if (uniform(rng) < 0.0)
            R.col(1) = -R.col(1);  // reflection
        const Eigen::MatrixXd Smat = hom == Homomorphism::Vector ? Eigen::MatrixXd(R) : Eigen::MatrixXd::Identity(m, m);

        std::vector<Eigen::MatrixXd> hessians(m);
        for (auto& H : hessians) {
            H.resize(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    H(i, j) = H(j, i) = uniform(rng);
        }
        // Hessian of (S^T u o R)_k is sum_i S_ik R^T H_i R.
        std::vector<Eigen::MatrixXd> rotated(m, Eigen::MatrixXd::Zero(n, n));
        for (int k = 0; k < m; ++k) {
            for (int i = 0; i < m; ++i)
                rotated[k] += Smat(i, k) * (R.transpose() * hessians[i] * R);
            rotated[k] = 0.5 * (rotated[k] + rotated[k].transpose());
        }
        const Eigen::VectorXd lhs = apply_operator_quadratic(t, rotated);
        const Eigen::VectorXd rhs = Smat.transpose() * apply_operator_quadratic(t, hessians);
        worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace specshape
