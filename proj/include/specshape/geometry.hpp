#pragma once

#include <Eigen/Dense>

#include <array>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace specshape {

using Point = Eigen::Vector2d;

struct BoundaryEdge
{
    int a = 0;  // oriented so the domain lies to the left of a -> b
    int b = 0;
    Point normal = Point::Zero();  // outward unit normal
    double length = 0.0;
    int parent = 0;  // triangle owning the edge
};

/// Triangulated planar domain. Triangles are counterclockwise; boundary
/// edges are stored loop by loop in traversal order.
struct Mesh
{
    std::vector<Point> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;
};

/// Build a mesh from raw connectivity. Boundary edges are the edges owned by
/// exactly one triangle. Throws on nonpositive triangles or bad indices.
Mesh make_mesh(std::vector<Point> nodes, std::vector<std::array<int, 3>> triangles);

struct UnitDisk
{
};
struct Ellipse
{
    double a = 1.0;
    double b = 1.0;
};
/// r(theta) = 1 + sum_k (c_k cos k theta + s_k sin k theta), k = 1, 2, ...
struct RadialProfile
{
    std::vector<std::pair<double, double>> fourier;
    double operator()(double theta) const;
};
struct MeshFile
{
    std::string path;
};

struct DomainSpec
{
    std::variant<UnitDisk, Ellipse, RadialProfile, MeshFile> shape;
    int n_rings = 16;
};

/// Concentric-ring triangulation (ring j at radius j/n_rings carries 6j nodes)
/// mapped radially onto the requested domain, or a mesh read from file.
Mesh build_mesh(const DomainSpec& spec);

struct Dilation
{
};
struct Translation
{
    double dx = 0.0;
    double dy = 0.0;
};
/// psi(x) = amplitude * cos(mode * theta) * x, theta the polar angle of x.
struct RadialBump
{
    int mode = 0;
    double amplitude = 1.0;
};
struct NodalField
{
    std::vector<Point> displacement;
};

/// Vector field psi driving a domain perturbation. Fields are taken on the
/// current domain, so they double as the boundary trace zeta.
struct PerturbationField
{
    std::variant<Dilation, Translation, RadialBump, NodalField> field;

    bool is_nodal() const { return std::holds_alternative<NodalField>(field); }

    /// Analytic variants only.
    Point evaluate(const Point& x) const;
};

/// psi at a mesh node.
Point field_at_node(const PerturbationField& psi, const Mesh& mesh, int node);

/// psi at the point a + s (b - a) of a boundary edge: exact for analytic
/// fields, linear interpolation of the endpoint values for nodal ones.
Point field_on_edge(const PerturbationField& psi, const Mesh& mesh, const BoundaryEdge& e,
                    double s);

/// Nodes moved to x + t psi(x); throws Error if any triangle loses positive area.
Mesh apply_transform(const Mesh& mesh, const PerturbationField& psi, double t);

/// Minimum over triangles of signed area divided by the area of an equilateral
/// triangle with the same mean squared edge length. Positive iff all
/// triangles are properly oriented.
double validate_admissible(const Mesh& mesh);

double volume(const Mesh& mesh);

double perimeter(const Mesh& mesh);

/// Area centroid.
Point centroid(const Mesh& mesh);

/// Midpoint-rule value of the integral of psi . nu over the boundary.
double boundary_flux(const Mesh& mesh, const PerturbationField& psi);

/// Uniform scaling of all nodes about `center`.
Mesh scale_mesh(const Mesh& mesh, double factor, const Point& center);

/// Ordered boundary nodes of a mesh with a single boundary loop.
std::vector<int> boundary_loop(const Mesh& mesh);

/// JSON schema {"nodes": [[x, y], ...], "triangles": [[i, j, k], ...]}, 0-based.
Mesh read_mesh_json(const std::string& path);
void write_mesh_json(const Mesh& mesh, const std::string& path);
std::string mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const std::string& text);

}  // namespace specshape
