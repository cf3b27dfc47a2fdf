#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace specshape {

/// Constant coefficient array a^{ij}_{ab} of a second-order system
///
///     (L u)_j = - a^{ij}_{ab} d^2 u_i / dx_a dx_b ,
///
/// with i, j in [0, m) indexing solution components and a, b in [0, n)
/// indexing spatial directions. Indices are 0-based in the API; the config
/// literal format is 1-based.
class CoefficientTensor
{
public:
    CoefficientTensor(int m, int n);

    int m() const { return m_; }
    int n() const { return n_; }

    double operator()(int i, int j, int a, int b) const { return entries_[index(i, j, a, b)]; }
    double& operator()(int i, int j, int a, int b) { return entries_[index(i, j, a, b)]; }

    CoefficientTensor operator-() const;

private:
    std::size_t index(int i, int j, int a, int b) const
    {
        return ((static_cast<std::size_t>(i) * m_ + j) * n_ + a) * n_ + b;
    }

    int m_;
    int n_;
    std::vector<double> entries_;
};

/// Decoupled system a^{ij}_{ab} = delta_ij delta_ab (componentwise Laplacian).
CoefficientTensor make_laplacian(int m);

/// Lame preset a^{ij}_{ab} = delta_ij delta_ab + k delta_ia delta_jb, m = n = 2.
CoefficientTensor make_lame(double k);

/// True iff a^{ij}_{ab} == a^{ji}_{ba} exactly.
bool check_symmetry(const CoefficientTensor& t);

/// Legendre-Hadamard constant: min over unit xi in R^m, eta in R^n of
/// a^{ij}_{ab} xi_i xi_j eta_a eta_b. Negative results are returned, not thrown.
double legendre_hadamard_constant(const CoefficientTensor& t, int grid_density = 360);

/// Assembly refuses tensors whose Legendre-Hadamard constant is at or below this.
inline constexpr double kEllipticityFloor = 1e-12;

/// a^{ij}_{ab} G_{ia} G_{jb} for a gradient-shaped m x n matrix G.
double energy_density(const CoefficientTensor& t, const Eigen::MatrixXd& grad);

/// Exact (L u)_j for a vector polynomial with constant per-component Hessians.
Eigen::VectorXd apply_operator_quadratic(const CoefficientTensor& t,
                                         const std::vector<Eigen::MatrixXd>& hessians);

/// Parse "laplacian:m", "lame:k" or a JSON array of {i, j, alpha, beta, value}
/// records (1-based, unlisted entries zero, n = 2).
CoefficientTensor parse_tensor_literal(const std::string& literal);

}  // namespace specshape
