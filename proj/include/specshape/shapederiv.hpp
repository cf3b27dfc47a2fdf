#pragma once

#include "specshape/assembly.hpp"
#include "specshape/coeff.hpp"
#include "specshape/geometry.hpp"
#include "specshape/spectrum.hpp"

#include <cstdint>
#include <vector>

namespace specshape {

/// Summed boundary density of a cluster at the boundary Gauss points:
/// Dirichlet uses a^{ij}_{ab} dv_i/dy_a dv_j/dy_b, Neumann uses
/// lambda |v|^2 - a^{ij}_{ab} dv_i/dy_a dv_j/dy_b.
struct BoundaryDensity
{
    std::vector<BoundaryQuadraturePoint> points;
    std::vector<std::vector<double>> per_member;  // [l][q]
    std::vector<double> total;                    // [q], summed over l
};

BoundaryDensity cluster_boundary_density(const Mesh& mesh, const SystemMatrices& S,
                                         const CoefficientTensor& t, const Cluster& cluster);

/// First variation of the elementary symmetric functions of a cluster.
struct HadamardReport
{
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    double lambda = 0.0;
    std::vector<int> indices;             // 1-based
    std::vector<double> per_l_integrals;  // integral of density_l * zeta . nu
    std::vector<double> derivatives;      // [s - 1], s = 1..|F|
};

/// Dirichlet formula; requires a form-orthonormal cluster with lambda > 0.
HadamardReport hadamard_dirichlet(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                                  const Cluster& cluster, const PerturbationField& psi);

/// Neumann formula. A zero-eigenvalue cluster (constant eigenfunctions)
/// yields an all-zero report; otherwise the cluster must be form-orthonormal.
HadamardReport hadamard_neumann(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                                const Cluster& cluster, const PerturbationField& psi);

/// Dispatch on the boundary condition of `S`.
HadamardReport hadamard(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                        const Cluster& cluster, const PerturbationField& psi);

/// Central-difference derivative of the discrete Lambda_{F,s} under node
/// displacement, with one Richardson step between h and h/2.
struct FdResult
{
    std::vector<double> derivatives;  // Richardson-extrapolated, [s - 1]
    std::vector<double> central_h;
    std::vector<double> central_half_h;
};

/// `base` is the spectrum on `mesh`; its size sets how many eigenpairs are
/// solved on each perturbed mesh. Throws Error when a perturbed mesh is
/// inadmissible or the cluster F loses its identity (gap below five times
/// the spread, or the perturbed eigenvectors leave the base cluster span).
FdResult fd_reference(const Mesh& mesh, const CoefficientTensor& t, BoundaryCondition bc, int order,
                      const SystemMatrices& base_system, const Spectrum& base, const std::vector<int>& indices,
                      const PerturbationField& psi, double h);

/// Lambda_{F,s} of the eigenvalues at the given 1-based indices.
double cluster_sym_function(const Spectrum& spectrum, const std::vector<int>& indices, int s);

/// Scale lambda^s * perimeter * max |psi| on the boundary used to normalize
/// derivative discrepancies.
double derivative_scale(const Mesh& mesh, double lambda, int s, const PerturbationField& psi);

/// |a - b| / max(|b|, scale).
double relative_discrepancy(double value, double reference, double scale);

struct CriticalityReport
{
    double c_star = 0.0;    // weighted boundary mean of the summed density
    double residual = 0.0;  // relative L2 deviation from c_star
    BoundaryDensity density;
};

CriticalityReport criticality_residual(const Mesh& mesh, const SystemMatrices& S, const CoefficientTensor& t,
                                       const Cluster& cluster);

enum class Homomorphism { IdentityBlock, Vector };

/// Largest deviation |L(S(R)^T u o R) - S(R)^T (L u) o R| over seeded random
/// orthogonal R (rotations and reflections) and random quadratic u.
double rotation_invariance_check(const CoefficientTensor& t, Homomorphism hom, int n_samples,
                                 std::uint64_t seed);

}  // namespace specshape
