#include "specshape/optimize.hpp"

#include "specshape/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

namespace specshape {

namespace {

double polar_angle(const Point& v)
{
    return std::atan2(v.y(), v.x());
}

// Boundary loop seen from `center`, with unwrapped increasing polar angles.
struct StarBoundary
{
    Point center;
    std::vector<int> loop;
    std::vector<double> angle;  // angle[i] for loop[i], angle[0] <= ... < angle[0] + 2 pi

    StarBoundary(const Mesh& mesh, Point c) : center(std::move(c)), loop(boundary_loop(mesh))
    {
        const int n = static_cast<int>(loop.size());
        angle.resize(n);
        angle[0] = polar_angle(mesh.nodes[loop[0]] - center);
        for (int i = 1; i < n; ++i) {
            const Point a = mesh.nodes[loop[i - 1]] - center;
            const Point b = mesh.nodes[loop[i]] - center;
            const double cross = a.x() * b.y() - a.y() * b.x();
            if (!(cross > 0.0))
                throw Error("mesh is not star-shaped with respect to its centroid");
            angle[i] = angle[i - 1] + std::atan2(cross, a.dot(b));
        }
        const Point a = mesh.nodes[loop[n - 1]] - center;
        const Point b = mesh.nodes[loop[0]] - center;
        const double cross = a.x() * b.y() - a.y() * b.x();
        const double total = angle[n - 1] + std::atan2(cross, a.dot(b)) - angle[0];
        if (!(cross > 0.0) || std::abs(total - 2.0 * std::numbers::pi) > 1e-9)
            throw Error("mesh is not star-shaped with respect to its centroid");
    }

    // Loop position i and fraction tau of the edge loop[i] -> loop[i + 1]
    // hit by the ray from the center through x.
    std::pair<int, double> locate(const Mesh& mesh, const Point& x) const
    {
        const int n = static_cast<int>(loop.size());
        double theta = polar_angle(x - center);
        while (theta < angle[0])
            theta += 2.0 * std::numbers::pi;
        while (theta >= angle[0] + 2.0 * std::numbers::pi)
            theta -= 2.0 * std::numbers::pi;
        const int i = static_cast<int>(std::upper_bound(angle.begin(), angle.end(), theta) - angle.begin()) - 1;
        const Point a = mesh.nodes[loop[i]] - center;
        const Point b = mesh.nodes[loop[(i + 1) % n]] - center;
        const Point u(std::cos(theta), std::sin(theta));
        // a + tau (b - a) parallel to u.
        const Point d = b - a;
        const double denom = u.x() * d.y() - u.y() * d.x();
        const double tau = (a.y() * u.x() - a.x() * u.y()) / denom;
        return {i, std::clamp(tau, 0.0, 1.0)};
    }
};

}  // namespace

Evaluation evaluate(const Mesh& mesh, const OptTarget& target)
{
    const SystemMatrices S = assemble(mesh, target.tensor, target.bc, target.order);
    const int n_eigs = target.n_eigs > 0 ? target.n_eigs : target.index + 4;
    const Spectrum spectrum = solve_eigs(S, n_eigs);
    Cluster cluster = detect_cluster(spectrum, target.index, target.cluster_tol);
    if (target.s < 1 || target.s > cluster.size())
        throw Error("symmetric function order s must lie in 1..|F|");

    Evaluation e;
    e.indices = cluster.indices;
    e.lambda_F = cluster.lambda;
    e.Lambda_s = cluster_sym_function(spectrum, cluster.indices, target.s);
    if (target.bc == BoundaryCondition::Dirichlet || cluster.lambda > kZeroEigenvalue)
        cluster = form_orthonormalize(S, cluster);
    const CriticalityReport crit = criticality_residual(mesh, S, target.tensor, cluster);
    e.residual = crit.residual;
    e.density = crit.density;
    return e;
}

OptState make_state(Mesh mesh, const OptTarget& target)
{
    OptState state;
    state.target = target;
    state.volume0 = volume(mesh);
    state.current = evaluate(mesh, target);
    state.mesh = std::move(mesh);
    return state;
}

PerturbationField descent_field(const Mesh& mesh, const BoundaryDensity& density, bool maximize)
{
    const int n_nodes = static_cast<int>(mesh.nodes.size());
    const int n_edges = static_cast<int>(mesh.boundary_edges.size());

    // Quadrature-weighted average of the density on the edges around each
    // boundary node, and the averaged nodal normal.
    std::vector<double> g(n_nodes, 0.0);
    std::vector<double> w(n_nodes, 0.0);
    std::vector<Point> normal(n_nodes, Point::Zero());
    for (std::size_t q = 0; q < density.points.size(); ++q) {
        const auto& pt = density.points[q];
        const BoundaryEdge& e = mesh.boundary_edges[pt.edge];
        for (int node : {e.a, e.b}) {
            g[node] += pt.weight * density.total[q];
            w[node] += pt.weight;
        }
    }
    for (const auto& e : mesh.boundary_edges) {
        normal[e.a] += e.normal;
        normal[e.b] += e.normal;
    }

    // Flux of a nodal normal speed v under the midpoint rule is sum_i v_i c_i.
    std::vector<double> c(n_nodes, 0.0);
    double scale = 0.0;
    double weight = 0.0;
    for (int i = 0; i < n_nodes; ++i) {
        if (w[i] == 0.0)
            continue;
        g[i] /= w[i];
        normal[i].normalize();
        scale += w[i] * std::abs(g[i]);
        weight += w[i];
    }
    for (int k = 0; k < n_edges; ++k) {
        const BoundaryEdge& e = mesh.boundary_edges[k];
        c[e.a] += 0.5 * e.length * normal[e.a].dot(e.normal);
        c[e.b] += 0.5 * e.length * normal[e.b].dot(e.normal);
    }
    double gbar = 0.0;
    double csum = 0.0;
    for (int i = 0; i < n_nodes; ++i) {
        gbar += c[i] * g[i];
        csum += c[i];
    }
    gbar /= csum;
    scale /= weight;

    NodalField field;
    field.displacement.assign(n_nodes, Point::Zero());
    if (!(scale > 0.0))
        return PerturbationField{std::move(field)};
    const double sign = maximize ? -1.0 : 1.0;
    for (int i = 0; i < n_nodes; ++i)
        if (w[i] > 0.0)
            field.displacement[i] = sign * (g[i] - gbar) / scale * normal[i];

    const StarBoundary star(mesh, centroid(mesh));
    std::vector<char> on_boundary(n_nodes, 0);
    for (int node : star.loop)
        on_boundary[node] = 1;
    const int n_loop = static_cast<int>(star.loop.size());
    for (int i = 0; i < n_nodes; ++i) {
        if (on_boundary[i])
            continue;
        const Point& x = mesh.nodes[i];
        const auto [k, tau] = star.locate(mesh, x);
        const int a = star.loop[k];
        const int b = star.loop[(k + 1) % n_loop];
        const Point hit = (1.0 - tau) * mesh.nodes[a] + tau * mesh.nodes[b];
        const Point d = (1.0 - tau) * field.displacement[a] + tau * field.displacement[b];
        const double r = (x - star.center).norm() / (hit - star.center).norm();
        field.displacement[i] = r * d;
    }
    return PerturbationField{std::move(field)};
}

void step(OptState& state, double step0)
{
    HistoryRow row;
    row.step = static_cast<int>(state.history.size()) + 1;
    row.lambda_F = state.current.lambda_F;
    row.Lambda_s = state.current.Lambda_s;
    row.volume = volume(state.mesh);
    row.residual = state.current.residual;

    if (step0 > 0.0) {
        const PerturbationField psi = descent_field(state.mesh, state.current.density, state.target.maximize);
        double t = step0;
        for (int attempt = 0; attempt <= 12; ++attempt, t *= 0.5) {
            Mesh trial;
            try {
                trial = apply_transform(state.mesh, psi, t);
            } catch (const Error&) {
                continue;
            }
            if (!(validate_admissible(trial) > 0.0))
                continue;
            trial = scale_mesh(trial, std::sqrt(state.volume0 / volume(trial)), centroid(trial));
            const double v = volume(trial);
            if (std::abs(v - state.volume0) > 1e-3 * state.volume0)
                continue;
            Evaluation e;
            try {
                e = evaluate(trial, state.target);
            } catch (const Error&) {
                continue;
            }
            const bool better = state.target.maximize ? e.Lambda_s > state.current.Lambda_s
                                                      : e.Lambda_s < state.current.Lambda_s;
            if (!better)
                continue;
            state.mesh = std::move(trial);
            state.current = std::move(e);
            row.lambda_F = state.current.lambda_F;
            row.Lambda_s = state.current.Lambda_s;
            row.volume = v;
            row.residual = state.current.residual;
            row.step_size = t;
            break;
        }
    }
    state.history.push_back(row);
}

OptState run(const DomainSpec& spec, const OptTarget& target, int n_steps, double step0,
             const std::function<void(const OptState&)>& on_step)
{
    if (n_steps < 0)
        throw Error("number of steps must be nonnegative");
    if (step0 < 0.0)
        throw Error("initial step size must be nonnegative");
    OptState state = make_state(build_mesh(spec), target);
    for (int i = 0; i < n_steps; ++i) {
        step(state, step0);
        if (on_step)
            on_step(state);
    }
    return state;
}

void write_history_csv(const std::vector<HistoryRow>& history, std::ostream& out)
{
    out << "step,lambda_F,Lambda_s,volume,residual,step_size\n";
    char buf[256];
    for (const auto& r : history) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.step, r.lambda_F, r.Lambda_s,
                      r.volume, r.residual, r.step_size);
        out << buf;
    }
}

}  // namespace specshape
