#pragma once

#include "specshape/coeff.hpp"
#include "specshape/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <vector>

namespace specshape {

enum class BoundaryCondition { Dirichlet, Neumann };

const char* to_string(BoundaryCondition bc);

/// Node and degree-of-freedom numbering for Lagrange elements of order 1 or 2.
/// Nodes are the mesh vertices followed, at order 2, by one node per edge.
struct DofMap
{
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    int order = 2;
    int m = 1;
    int n_vertices = 0;
    int n_nodes = 0;
    std::vector<int> element_nodes;  // nodes_per_element() entries per triangle
    std::vector<Point> node_positions;
    std::vector<char> on_boundary;
    std::vector<int> dof;  // n_nodes * m entries, -1 where constrained
    int n_free = 0;

    int nodes_per_element() const { return order == 1 ? 3 : 6; }

    /// Full nodal field (n_nodes * m, constrained entries zero) from free DOFs.
    Eigen::VectorXd expand(const Eigen::VectorXd& free) const;
};

DofMap make_dofmap(const Mesh& mesh, int m, BoundaryCondition bc, int order);

struct SystemMatrices
{
    Eigen::SparseMatrix<double> K;  // energy form restricted to free DOFs
    Eigen::SparseMatrix<double> M;  // L2 mass
    DofMap dofmap;
};

/// Stiffness and mass for the weak problem with Dirichlet rows/columns
/// eliminated. Throws if the tensor is not symmetric or fails the
/// Legendre-Hadamard check.
SystemMatrices assemble(const Mesh& mesh, const CoefficientTensor& t, BoundaryCondition bc,
                        int order = 2);

double energy_inner_product(const SystemMatrices& S, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& v);

/// Free-DOF interpolant of a vector field given at node positions.
Eigen::VectorXd interpolate(const SystemMatrices& S,
                            const std::function<Eigen::VectorXd(const Point&)>& f);

struct BoundaryQuadraturePoint
{
    Point point;
    double weight = 0.0;  // Gauss weight times edge length
    double energy_density = 0.0;  // a^{ij}_{ab} du_i/dx_a du_j/dx_b
    double mass_density = 0.0;    // |u|^2
    int edge = 0;                 // index into mesh.boundary_edges
    double s = 0.0;               // edge parameter in [0, 1]
};

/// Two-point Gauss data on every boundary edge, gradients taken from the
/// parent element. `u` is a free-DOF vector; constrained values count as 0.
std::vector<BoundaryQuadraturePoint> boundary_quadrature_data(const Mesh& mesh,
                                                              const SystemMatrices& S,
                                                              const CoefficientTensor& t,
                                                              const Eigen::VectorXd& u);

/// One "row col value" line per stored entry (0-based).
void write_triplets(const Eigen::SparseMatrix<double>& A, std::ostream& out);

}  // namespace specshape
