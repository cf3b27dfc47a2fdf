#include "specshape/assembly.hpp"

#include "specshape/error.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

namespace specshape {

const char* to_string(BoundaryCondition bc)
{
    return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "neumann";
}

namespace {

struct QuadPoint
{
    double l0, l1, l2;  // barycentric coordinates
    double weight;      // fraction of the triangle area
};

// Centroid rule: exact for the constant P1 stiffness integrand.
const std::vector<QuadPoint>& rule_degree1()
{
    static const std::vector<QuadPoint> rule{{1.0 / 3, 1.0 / 3, 1.0 / 3, 1.0}};
    return rule;
}

// Edge-midpoint rule, exact to degree 2.
const std::vector<QuadPoint>& rule_degree2()
{
    static const std::vector<QuadPoint> rule{
        {0.5, 0.5, 0.0, 1.0 / 3}, {0.0, 0.5, 0.5, 1.0 / 3}, {0.5, 0.0, 0.5, 1.0 / 3}};
    return rule;
}

// Six-point Dunavant rule, exact to degree 4.
const std::vector<QuadPoint>& rule_degree4()
{
    static const std::vector<QuadPoint> rule = [] {
        const double a = 0.445948490915965;
        const double wa = 0.223381589678011;
        const double b = 0.091576213509771;
        const double wb = 0.109951743655322;
        return std::vector<QuadPoint>{
            {a, a, 1 - 2 * a, wa}, {a, 1 - 2 * a, a, wa}, {1 - 2 * a, a, a, wa},
            {b, b, 1 - 2 * b, wb}, {b, 1 - 2 * b, b, wb}, {1 - 2 * b, b, b, wb},
        };
    }();
    return rule;
}

struct ElementGeometry
{
    double area = 0.0;
    Eigen::Matrix<double, 3, 2> grad_l;  // rows: gradients of barycentric coordinates
};

ElementGeometry element_geometry(const Mesh& mesh, const std::array<int, 3>& tri)
{
    const Point& p0 = mesh.nodes[tri[0]];
    const Point& p1 = mesh.nodes[tri[1]];
    const Point& p2 = mesh.nodes[tri[2]];
    ElementGeometry g;
    const double twice = (p1.x() - p0.x()) * (p2.y() - p0.y()) - (p2.x() - p0.x()) * (p1.y() - p0.y());
    g.area = 0.5 * twice;
    g.grad_l << p1.y() - p2.y(), p2.x() - p1.x(),
                p2.y() - p0.y(), p0.x() - p2.x(),
                p0.y() - p1.y(), p1.x() - p0.x();
    g.grad_l /= twice;
    return g;
}

// Shape function values and gradients at barycentric point (l0, l1, l2).
// Order 2 local nodes: vertices 0..2, then edges (0,1), (1,2), (2,0).
void shape_functions(int order, const ElementGeometry& g, const std::array<double, 3>& l,
                     Eigen::VectorXd& values, Eigen::MatrixXd& grads)
{
    if (order == 1) {
        values.resize(3);
        grads.resize(3, 2);
        for (int i = 0; i < 3; ++i) {
            values(i) = l[i];
            grads.row(i) = g.grad_l.row(i);
        }
        return;
    }
    values.resize(6);
    grads.resize(6, 2);
    for (int i = 0; i < 3; ++i) {
        values(i) = l[i] * (2.0 * l[i] - 1.0);
        grads.row(i) = (4.0 * l[i] - 1.0) * g.grad_l.row(i);
    }
    for (int e = 0; e < 3; ++e) {
        const int i = e;
        const int j = (e + 1) % 3;
        values(3 + e) = 4.0 * l[i] * l[j];
        grads.row(3 + e) = 4.0 * (l[j] * g.grad_l.row(i) + l[i] * g.grad_l.row(j));
    }
}

// Barycentric coordinates of the point a + s (b - a) on edge (a, b) of the triangle.
std::array<double, 3> edge_barycentric(const std::array<int, 3>& tri, int a, int b, double s)
{
    std::array<double, 3> l{};
    for (int i = 0; i < 3; ++i) {
        if (tri[i] == a)
            l[i] = 1.0 - s;
        else if (tri[i] == b)
            l[i] = s;
    }
    return l;
}

}  // namespace

Eigen::VectorXd DofMap::expand(const Eigen::VectorXd& free) const
{
    if (free.size() != n_free)
        throw Error("DOF vector length does not match the free DOF count");
    Eigen::VectorXd full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_nodes) * m);
    for (std::size_t k = 0; k < dof.size(); ++k)
        if (dof[k] >= 0)
            full(static_cast<Eigen::Index>(k)) = free(dof[k]);
    return full;
}

DofMap make_dofmap(const Mesh& mesh, int m, BoundaryCondition bc, int order)
{
    if (order != 1 && order != 2)
        throw Error("element order must be 1 or 2");
    if (m < 1)
        throw Error("number of components must be positive");
    DofMap map;
    map.bc = bc;
    map.order = order;
    map.m = m;
    map.n_vertices = static_cast<int>(mesh.nodes.size());
    map.node_positions = mesh.nodes;
    const int per = map.nodes_per_element();
    map.element_nodes.reserve(mesh.triangles.size() * per);

    std::map<std::pair<int, int>, int> edge_node;
    for (const auto& tri : mesh.triangles) {
        for (int v : tri)
            map.element_nodes.push_back(v);
        if (order == 2) {
            for (int e = 0; e < 3; ++e) {
                const int a = tri[e];
                const int b = tri[(e + 1) % 3];
                const auto key = std::minmax(a, b);
                auto [it, inserted] =
                    edge_node.emplace(std::make_pair(key.first, key.second), static_cast<int>(map.node_positions.size()));
                if (inserted)
                    map.node_positions.push_back(0.5 * (mesh.nodes[a] + mesh.nodes[b]));
                map.element_nodes.push_back(it->second);
            }
        }
    }
    map.n_nodes = static_cast<int>(map.node_positions.size());

    map.on_boundary.assign(map.n_nodes, 0);
    for (const auto& e : mesh.boundary_edges) {
        map.on_boundary[e.a] = 1;
        map.on_boundary[e.b] = 1;
        if (order == 2) {
            const auto key = std::minmax(e.a, e.b);
            map.on_boundary[edge_node.at({key.first, key.second})] = 1;
        }
    }

    map.dof.assign(static_cast<std::size_t>(map.n_nodes) * m, -1);
    int next = 0;
    for (int p = 0; p < map.n_nodes; ++p) {
        if (bc == BoundaryCondition::Dirichlet && map.on_boundary[p])
            continue;
        for (int i = 0; i < m; ++i)
            map.dof[static_cast<std::size_t>(p) * m + i] = next++;
    }
    map.n_free = next;
    return map;
}

SystemMatrices assemble(const Mesh& mesh, const CoefficientTensor& t, BoundaryCondition bc, int order)
{
    if (t.n() != 2)
        throw Error("assembly supports two spatial dimensions only");
    if (!check_symmetry(t))
        throw Error("coefficient tensor is not symmetric");
    if (!(legendre_hadamard_constant(t) > kEllipticityFloor))
        throw Error("coefficient tensor fails the Legendre-Hadamard condition");
    if (!(validate_admissible(mesh) > 0.0))
        throw Error("mesh has degenerate or inverted triangles");

    SystemMatrices S;
    S.dofmap = make_dofmap(mesh, t.m(), bc, order);
    const DofMap& map = S.dofmap;
    const int m = t.m();
    const int per = map.nodes_per_element();
    const int local = per * m;
    const auto& stiff_rule = order == 1 ? rule_degree1() : rule_degree4();
    const auto& mass_rule = order == 1 ? rule_degree2() : rule_degree4();

    std::vector<Eigen::Triplet<double>> k_trip;
    std::vector<Eigen::Triplet<double>> m_trip;
    k_trip.reserve(mesh.triangles.size() * local * local);
    m_trip.reserve(mesh.triangles.size() * per * per * m);

    Eigen::MatrixXd ke(local, local);
    Eigen::MatrixXd me(local, local);
    Eigen::VectorXd values;
    Eigen::MatrixXd grads;
    for (std::size_t e = 0; e < mesh.triangles.size(); ++e) {
        const ElementGeometry g = element_geometry(mesh, mesh.triangles[e]);
        ke.setZero();
        me.setZero();
        for (const auto& q : stiff_rule) {
            shape_functions(order, g, {q.l0, q.l1, q.l2}, values, grads);
            const double w = q.weight * g.area;
            for (int p = 0; p < per; ++p)
                for (int i = 0; i < m; ++i)
                    for (int r = 0; r < per; ++r)
                        for (int j = 0; j < m; ++j) {
                            const int row = p * m + i;
                            const int col = r * m + j;
                            if (col < row)
                                continue;
                            double s = 0.0;
                            for (int a = 0; a < 2; ++a)
                                for (int b = 0; b < 2; ++b)
                                    s += t(i, j, a, b) * grads(p, a) * grads(r, b);
                            ke(row, col) += w * s;
                        }
        }
        for (const auto& q : mass_rule) {
            shape_functions(order, g, {q.l0, q.l1, q.l2}, values, grads);
            const double w = q.weight * g.area;
            for (int p = 0; p < per; ++p)
                for (int r = p; r < per; ++r)
                    for (int i = 0; i < m; ++i)
                        me(p * m + i, r * m + i) += w * values(p) * values(r);
        }
        const int* nodes = &map.element_nodes[e * per];
        for (int row = 0; row < local; ++row) {
            const int gr = map.dof[static_cast<std::size_t>(nodes[row / m]) * m + row % m];
            if (gr < 0)
                continue;
            for (int col = row; col < local; ++col) {
                const int gc = map.dof[static_cast<std::size_t>(nodes[col / m]) * m + col % m];
                if (gc < 0)
                    continue;
                k_trip.emplace_back(gr, gc, ke(row, col));
                if (gr != gc)
                    k_trip.emplace_back(gc, gr, ke(row, col));
                if (row % m == col % m) {
                    m_trip.emplace_back(gr, gc, me(row, col));
                    if (gr != gc)
                        m_trip.emplace_back(gc, gr, me(row, col));
                }
            }
        }
    }
    S.K.resize(map.n_free, map.n_free);
    S.M.resize(map.n_free, map.n_free);
    S.K.setFromTriplets(k_trip.begin(), k_trip.end());
    S.M.setFromTriplets(m_trip.begin(), m_trip.end());
    S.K.makeCompressed();
    S.M.makeCompressed();
    return S;
}

double energy_inner_product(const SystemMatrices& S, const Eigen::VectorXd& u, const Eigen::VectorXd& v)
{
    if (u.size() != S.dofmap.n_free || v.size() != S.dofmap.n_free)
        throw Error("energy_inner_product: vector length does not match the free DOF count");
    return u.dot(S.K * v);
}

Eigen::VectorXd interpolate(const SystemMatrices& S, const std::function<Eigen::VectorXd(const Point&)>& f)
{
    const DofMap& map = S.dofmap;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(map.n_free);
    for (int p = 0; p < map.n_nodes; ++p) {
        const Eigen::VectorXd value = f(map.node_positions[p]);
        for (int i = 0; i < map.m; ++i) {
            const int d = map.dof[static_cast<std::size_t>(p) * map.m + i];
            if (d >= 0)
                u(d) = value(i);
        }
    }
    return u;
}

std::vector<BoundaryQuadraturePoint> boundary_quadrature_data(const Mesh& mesh, const SystemMatrices& S,
                                                              const CoefficientTensor& t,
                                                              const Eigen::VectorXd& u)
{
    const DofMap& map = S.dofmap;
    const Eigen::VectorXd full = map.expand(u);
    const int m = map.m;
    const int per = map.nodes_per_element();
    const double offset = 0.5 / std::sqrt(3.0);

    std::vector<BoundaryQuadraturePoint> out;
    out.reserve(2 * mesh.boundary_edges.size());
    Eigen::VectorXd values;
    Eigen::MatrixXd grads;
    Eigen::MatrixXd grad_u(m, 2);
    for (std::size_t k = 0; k < mesh.boundary_edges.size(); ++k) {
        const BoundaryEdge& e = mesh.boundary_edges[k];
        const auto& tri = mesh.triangles[e.parent];
        const ElementGeometry g = element_geometry(mesh, tri);
        const int* nodes = &map.element_nodes[static_cast<std::size_t>(e.parent) * per];
        for (double s : {0.5 - offset, 0.5 + offset}) {
            BoundaryQuadraturePoint q;
            q.point = (1.0 - s) * mesh.nodes[e.a] + s * mesh.nodes[e.b];
            q.weight = 0.5 * e.length;
            q.edge = static_cast<int>(k);
            q.s = s;
            const auto l = edge_barycentric(tri, e.a, e.b, s);
            shape_functions(map.order, g, l, values, grads);
            grad_u.setZero();
            Eigen::VectorXd value = Eigen::VectorXd::Zero(m);
            for (int p = 0; p < per; ++p)
                for (int i = 0; i < m; ++i) {
                    const double c = full(static_cast<Eigen::Index>(nodes[p]) * m + i);
                    value(i) += c * values(p);
                    grad_u.row(i) += c * grads.row(p);
                }
            q.energy_density = energy_density(t, grad_u);
            q.mass_density = value.squaredNorm();
            out.push_back(q);
        }
    }
    return out;
}

void write_triplets(const Eigen::SparseMatrix<double>& A, std::ostream& out)
{
    char buf[64];
    for (int col = 0; col < A.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, col); it; ++it) {
            std::snprintf(buf, sizeof buf, "%.17g", it.value());
            out << it.row() << ' ' << it.col() << ' ' << buf << '\n';
        }
}

}  // namespace specshape
