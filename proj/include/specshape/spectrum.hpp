#pragma once

#include "specshape/assembly.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

namespace specshape {

enum class Normalization { L2, Form };

/// Lowest eigenpairs of K v = lambda M v in non-decreasing order.
struct Spectrum
{
    std::vector<double> eigenvalues;
    Eigen::MatrixXd eigenvectors;  // one free-DOF column per eigenvalue
    std::vector<double> residuals;  // ||K v - lambda M v||_2
    Normalization normalization = Normalization::L2;

    int size() const { return static_cast<int>(eigenvalues.size()); }
};

/// Problems with fewer free DOFs than this are solved densely.
inline constexpr int kDenseThreshold = 600;

/// The k smallest eigenpairs, M-normalized. Shift-invert Lanczos (shift 0
/// for Dirichlet, -1 for Neumann) with full reorthogonalization; converged
/// pairs are locked and the iteration restarted from a deflated random
/// vector until no eigenvalue below the k-th is missing, which also recovers
/// exactly repeated eigenvalues.
Spectrum solve_eigs(const SystemMatrices& S, int k);

/// (u^T K u) / (u^T M u).
double rayleigh(const SystemMatrices& S, const Eigen::VectorXd& u);

inline constexpr double kTightClusterTol = 1e-6;
inline constexpr double kPhysicalClusterTol = 1e-2;
inline constexpr double kZeroEigenvalue = 1e-10;

/// A group of (numerically) coincident eigenvalues separated from the rest.
struct Cluster
{
    std::vector<int> indices;  // 1-based positions in the spectrum, contiguous
    double lambda = 0.0;       // mean over the cluster
    double spread = 0.0;
    double gap = 0.0;          // distance to the nearest eigenvalue outside
    Eigen::MatrixXd basis;
    Normalization normalization = Normalization::L2;

    int size() const { return static_cast<int>(indices.size()); }
};

/// Maximal contiguous cluster around the 1-based index k whose spread stays
/// within tol * max(1, lambda_k). Throws when the gap is below ten times the
/// spread or when the cluster reaches the last solved eigenvalue.
Cluster detect_cluster(const Spectrum& spectrum, int k, double tol);

/// Replace the basis by a K-orthonormal one of the same span.
Cluster form_orthonormalize(const SystemMatrices& S, const Cluster& cluster);

/// Elementary symmetric function e_s of `values`, 1 <= s <= values.size().
double sym_function(std::span<const double> values, int s);

/// Binomial coefficient as a double.
double binomial(int n, int k);

/// CSV rows "index,eigenvalue,residual,m_norm" with a header.
void write_spectrum_csv(const SystemMatrices& S, const Spectrum& spectrum, std::ostream& out);

}  // namespace specshape
