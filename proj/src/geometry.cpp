#include "specshape/geometry.hpp"

#include "specshape/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace specshape {

namespace {

double signed_area(const Point& p, const Point& q, const Point& r)
{
    return 0.5 * ((q.x() - p.x()) * (r.y() - p.y()) - (r.x() - p.x()) * (q.y() - p.y()));
}

double triangle_area(const Mesh& mesh, const std::array<int, 3>& tri)
{
    return signed_area(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
}

BoundaryEdge oriented_edge(const std::vector<Point>& nodes, int a, int b, int parent)
{
    BoundaryEdge e;
    e.a = a;
    e.b = b;
    e.parent = parent;
    const Point d = nodes[b] - nodes[a];
    e.length = d.norm();
    e.normal = Point(d.y(), -d.x()) / e.length;
    return e;
}

void refresh_normals(Mesh& mesh)
{
    for (auto& e : mesh.boundary_edges)
        e = oriented_edge(mesh.nodes, e.a, e.b, e.parent);
}

}  // namespace

Mesh make_mesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> triangles)
{
    Mesh mesh;
    mesh.nodes = std::move(nodes);
    mesh.triangles = std::move(triangles);
    const int n_nodes = static_cast<int>(mesh.nodes.size());
    if (mesh.triangles.empty())
        throw Error("mesh has no triangles");

    // directed edge -> owning triangle; an edge is interior iff its reverse exists
    std::map<std::pair<int, int>, int> directed;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int v : tri)
            if (v < 0 || v >= n_nodes)
                throw Error("triangle references a missing node");
        if (!(triangle_area(mesh, tri) > 0.0))
            throw Error("triangle " + std::to_string(t) + " is not counterclockwise");
        for (int k = 0; k < 3; ++k) {
            const auto key = std::make_pair(tri[k], tri[(k + 1) % 3]);
            if (!directed.emplace(key, static_cast<int>(t)).second)
                throw Error("edge shared by two triangles with the same orientation");
        }
    }

    std::map<int, std::pair<int, int>> next;  // boundary node -> (successor, parent)
    for (const auto& [key, t] : directed) {
        if (directed.count({key.second, key.first}) == 0) {
            if (!next.emplace(key.first, std::make_pair(key.second, t)).second)
                throw Error("boundary is not a set of simple loops");
        }
    }
    std::map<int, bool> visited;
    for (const auto& [start, unused] : next) {
        if (visited[start])
            continue;
        int a = start;
        do {
            visited[a] = true;
            const auto it = next.find(a);
            if (it == next.end())
                throw Error("open boundary chain");
            const auto [b, parent] = it->second;
            mesh.boundary_edges.push_back(oriented_edge(mesh.nodes, a, b, parent));
            a = b;
        } while (a != start);
    }
    return mesh;
}

double RadialProfile::operator()(double theta) const
{
    double r = 1.0;
    for (std::size_t k = 0; k < fourier.size(); ++k) {
        const double kk = static_cast<double>(k + 1);
        r += fourier[k].first * std::cos(kk * theta) + fourier[k].second * std::sin(kk * theta);
    }
    return r;
}

Mesh build_mesh(const DomainSpec& spec)
{
    if (const auto* file = std::get_if<MeshFile>(&spec.shape))
        return read_mesh_json(file->path);
    if (spec.n_rings < 1)
        throw Error("n_rings must be positive");
    if (const auto* profile = std::get_if<RadialProfile>(&spec.shape)) {
        for (int q = 0; q < 4096; ++q) {
            const double theta = 2.0 * std::numbers::pi * q / 4096.0;
            if (!((*profile)(theta) > 0.0))
                throw Error("radial profile is not positive everywhere");
        }
    }
    if (const auto* ell = std::get_if<Ellipse>(&spec.shape)) {
        if (!(ell->a > 0.0) || !(ell->b > 0.0))
            throw Error("ellipse semi-axes must be positive");
    }

    auto place = [&](double r, double theta) -> Point {
        if (const auto* ell = std::get_if<Ellipse>(&spec.shape))
            return {ell->a * r * std::cos(theta), ell->b * r * std::sin(theta)};
        double rho = 1.0;
        if (const auto* profile = std::get_if<RadialProfile>(&spec.shape))
            rho = (*profile)(theta);
        return {r * rho * std::cos(theta), r * rho * std::sin(theta)};
    };

    const int n = spec.n_rings;
    std::vector<Point> nodes;
    std::vector<int> ring_start(n + 1, 0);
    nodes.push_back(place(0.0, 0.0));
    for (int j = 1; j <= n; ++j) {
        ring_start[j] = static_cast<int>(nodes.size());
        const double r = static_cast<double>(j) / n;
        for (int i = 0; i < 6 * j; ++i)
            nodes.push_back(place(r, 2.0 * std::numbers::pi * i / (6.0 * j)));
    }

    auto ring_node = [&](int j, int i) {
        if (j == 0)
            return 0;
        return ring_start[j] + i % (6 * j);
    };

    // Each sextant between rings j-1 and j holds 2j-1 triangles.
    std::vector<std::array<int, 3>> triangles;
    triangles.reserve(6 * static_cast<std::size_t>(n) * n);
    for (int j = 1; j <= n; ++j) {
        for (int s = 0; s < 6; ++s) {
            for (int t = 0; t < j; ++t) {
                const int in_t = ring_node(j - 1, s * (j - 1) + t);
                triangles.push_back({in_t, ring_node(j, s * j + t), ring_node(j, s * j + t + 1)});
                if (t + 1 < j)
                    triangles.push_back(
                        {in_t, ring_node(j, s * j + t + 1), ring_node(j - 1, s * (j - 1) + t + 1)});
            }
        }
    }
    return make_mesh(std::move(nodes), std::move(triangles));
}

Point PerturbationField::evaluate(const Point& x) const
{
    return std::visit(
        [&](const auto& f) -> Point {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Dilation>) {
                return x;
            } else if constexpr (std::is_same_v<T, Translation>) {
                return {f.dx, f.dy};
            } else if constexpr (std::is_same_v<T, RadialBump>) {
                if (x.squaredNorm() == 0.0)
                    return Point::Zero();
                const double theta = std::atan2(x.y(), x.x());
                return f.amplitude * std::cos(f.mode * theta) * x;
            } else {
                throw Error("nodal fields cannot be evaluated at arbitrary points");
            }
        },
        field);
}

Point field_at_node(const PerturbationField& psi, const Mesh& mesh, int node)
{
    if (const auto* nodal = std::get_if<NodalField>(&psi.field)) {
        if (nodal->displacement.size() != mesh.nodes.size())
            throw Error("nodal field length does not match the mesh");
        return nodal->displacement[node];
    }
    return psi.evaluate(mesh.nodes[node]);
}

Point field_on_edge(const PerturbationField& psi, const Mesh& mesh, const BoundaryEdge& e, double s)
{
    if (psi.is_nodal())
        return (1.0 - s) * field_at_node(psi, mesh, e.a) + s * field_at_node(psi, mesh, e.b);
    return psi.evaluate((1.0 - s) * mesh.nodes[e.a] + s * mesh.nodes[e.b]);
}

Mesh apply_transform(const Mesh& mesh, const PerturbationField& psi, double t)
{
    Mesh out = mesh;
    if (t == 0.0)
        return out;
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        out.nodes[i] = mesh.nodes[i] + t * field_at_node(psi, mesh, static_cast<int>(i));
    for (std::size_t k = 0; k < out.triangles.size(); ++k)
        if (!(triangle_area(out, out.triangles[k]) > 0.0))
            throw Error("transformed mesh is inadmissible: triangle " + std::to_string(k) +
                        " lost positive area");
    refresh_normals(out);
    return out;
}

double validate_admissible(const Mesh& mesh)
{
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& tri : mesh.triangles) {
        const Point& p = mesh.nodes[tri[0]];
        const Point& q = mesh.nodes[tri[1]];
        const Point& r = mesh.nodes[tri[2]];
        const double mean_sq = ((q - p).squaredNorm() + (r - q).squaredNorm() + (p - r).squaredNorm()) / 3.0;
        const double reference = std::sqrt(3.0) / 4.0 * mean_sq;
        const double area = signed_area(p, q, r);
        worst = std::min(worst, reference > 0.0 ? area / reference : 0.0);
    }
    return worst;
}

double volume(const Mesh& mesh)
{
    double v = 0.0;
    for (const auto& tri : mesh.triangles)
        v += triangle_area(mesh, tri);
    return v;
}

double perimeter(const Mesh& mesh)
{
    double p = 0.0;
    for (const auto& e : mesh.boundary_edges)
        p += e.length;
    return p;
}

Point centroid(const Mesh& mesh)
{
    Point c = Point::Zero();
    double total = 0.0;
    for (const auto& tri : mesh.triangles) {
        const double a = triangle_area(mesh, tri);
        c += a * (mesh.nodes[tri[0]] + mesh.nodes[tri[1]] + mesh.nodes[tri[2]]) / 3.0;
        total += a;
    }
    return c / total;
}

double boundary_flux(const Mesh& mesh, const PerturbationField& psi)
{
    double flux = 0.0;
    for (const auto& e : mesh.boundary_edges)
        flux += field_on_edge(psi, mesh, e, 0.5).dot(e.normal) * e.length;
    return flux;
}

Mesh scale_mesh(const Mesh& mesh, double factor, const Point& center)
{
    Mesh out = mesh;
    for (auto& x : out.nodes)
        x = center + factor * (x - center);
    refresh_normals(out);
    return out;
}

std::vector<int> boundary_loop(const Mesh& mesh)
{
    std::vector<int> loop;
    for (const auto& e : mesh.boundary_edges) {
        if (!loop.empty() && e.a != mesh.boundary_edges[loop.size() - 1].b)
            throw Error("mesh boundary has more than one loop");
        loop.push_back(e.a);
    }
    if (loop.empty() || mesh.boundary_edges.back().b != loop.front())
        throw Error("mesh boundary has more than one loop");
    return loop;
}

Mesh mesh_from_json(const std::string& text)
{
    try {
        const auto doc = nlohmann::json::parse(text);
        std::vector<Point> nodes;
        for (const auto& p : doc.at("nodes")) {
            if (p.size() != 2)
                throw ConfigError("mesh node must have two coordinates");
            nodes.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        }
        std::vector<std::array<int, 3>> triangles;
        for (const auto& t : doc.at("triangles")) {
            if (t.size() != 3)
                throw ConfigError("mesh triangle must have three indices");
            triangles.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<int>()});
        }
        return make_mesh(std::move(nodes), std::move(triangles));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("mesh JSON: ") + e.what());
    }
}

Mesh read_mesh_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read mesh file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return mesh_from_json(buffer.str());
}

std::string mesh_to_json(const Mesh& mesh)
{
    nlohmann::json doc;
    doc["nodes"] = nlohmann::json::array();
    for (const auto& p : mesh.nodes)
        doc["nodes"].push_back({p.x(), p.y()});
    doc["triangles"] = nlohmann::json::array();
    for (const auto& t : mesh.triangles)
        doc["triangles"].push_back({t[0], t[1], t[2]});
    return doc.dump();
}

void write_mesh_json(const Mesh& mesh, const std::string& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error("cannot write mesh file '" + path + "'");
    out << mesh_to_json(mesh) << '\n';
}

}  // namespace specshape
