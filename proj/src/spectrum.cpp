#include "specshape/spectrum.hpp"

#include "specshape/error.hpp"

#include <Eigen/CholmodSupport>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

namespace specshape {

namespace {

using SparseMatrix = Eigen::SparseMatrix<double>;

bool converged(const SystemMatrices& S, const Eigen::VectorXd& x, double lambda, double* residual)
{
    const Eigen::VectorXd kx = S.K * x;
    const double r = (kx - lambda * (S.M * x)).norm();
    if (residual)
        *residual = r;
    return r <= 1e-8 * kx.norm() + 1e-12;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v)
{
    Eigen::Index at = 0;
    v.cwiseAbs().maxCoeff(&at);
    if (v(at) < 0.0)
        v = -v;
}

// (K - sigma M)^{-1} M, self-adjoint in the M inner product. CHOLMOD's
// supernodal factorization is tried first; some OpenBLAS builds report
// spurious dpotrf failures, so a failure is retried with Eigen's own
// simplicial factorization before the matrix is declared indefinite.
class ShiftInvert
{
public:
    ShiftInvert(const SystemMatrices& S, double sigma) : S_(S), sigma_(sigma)
    {
        const SparseMatrix shifted = S.K - sigma * S.M;
        supernodal_.compute(shifted);
        if (supernodal_.info() == Eigen::Success)
            return;
        use_fallback_ = true;
        fallback_.compute(shifted);
        if (fallback_.info() != Eigen::Success)
            throw Error("sparse factorization of K - sigma M failed (matrix not positive definite)");
    }

    double sigma() const { return sigma_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const
    {
        const Eigen::VectorXd rhs = S_.M * x;
        return use_fallback_ ? Eigen::VectorXd(fallback_.solve(rhs)) : Eigen::VectorXd(supernodal_.solve(rhs));
    }

private:
    const SystemMatrices& S_;
    double sigma_;
    bool use_fallback_ = false;
    Eigen::CholmodSupernodalLLT<SparseMatrix, Eigen::Lower> supernodal_;
    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower> fallback_;
};

struct LockedSet
{
    Eigen::MatrixXd x;   // M-orthonormal columns
    Eigen::MatrixXd mx;  // M * x
    std::vector<double> values;

    int size() const { return static_cast<int>(values.size()); }

    void deflate(Eigen::VectorXd& w) const
    {
        if (size() == 0)
            return;
        for (int pass = 0; pass < 2; ++pass)
            w -= x * (mx.transpose() * w);
    }

    // Returns false if the vector is (numerically) already in the span.
    bool add(const SystemMatrices& S, Eigen::VectorXd v)
    {
        const double before = std::sqrt(v.dot(S.M * v));
        deflate(v);
        Eigen::VectorXd mv = S.M * v;
        const double norm = std::sqrt(v.dot(mv));
        if (!(norm > 1e-6 * before))
            return false;
        v /= norm;
        mv /= norm;
        x.conservativeResize(v.size(), size() + 1);
        mx.conservativeResize(v.size(), size() + 1);
        x.col(size()) = v;
        mx.col(size()) = mv;
        values.push_back(v.dot(S.K * v));
        return true;
    }
};

struct RunResult
{
    int n_converged = 0;
    double smallest_new = std::numeric_limits<double>::infinity();
};

// Tridiagonal Lanczos matrix of the current basis.
Eigen::MatrixXd tridiagonal(const std::vector<double>& alpha, const std::vector<double>& beta, int dim)
{
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(dim, dim);
    for (int j = 0; j < dim; ++j) {
        T(j, j) = alpha[j];
        if (j + 1 < dim)
            T(j, j + 1) = T(j + 1, j) = beta[j];
    }
    return T;
}

// One Lanczos pass of length up to p on the operator deflated by `locked`.
// The pass stops early once the `want` largest Ritz values pass the cheap
// residual estimate; converged Ritz pairs are then moved into `locked`.
RunResult lanczos_run(const SystemMatrices& S, const ShiftInvert& op, LockedSet& locked, int p, int want,
                      std::mt19937_64& rng)
{
    const Eigen::Index n = S.K.rows();
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Eigen::VectorXd q(n);
    for (Eigen::Index i = 0; i < n; ++i)
        q(i) = uniform(rng);
    locked.deflate(q);
    q /= std::sqrt(q.dot(S.M * q));

    Eigen::MatrixXd Q(n, p);
    Eigen::MatrixXd MQ(n, p);
    std::vector<double> alpha;
    std::vector<double> beta;
    int dim = 0;
    for (int j = 0; j < p; ++j) {
        Q.col(j) = q;
        MQ.col(j) = S.M * q;
        dim = j + 1;
        Eigen::VectorXd w = op.apply(q);
        locked.deflate(w);
        double a = 0.0;
        for (int pass = 0; pass < 2; ++pass) {
            const Eigen::VectorXd h = MQ.leftCols(dim).transpose() * w;
            w -= Q.leftCols(dim) * h;
            a += h(j);
            locked.deflate(w);
        }
        alpha.push_back(a);
        const double b = std::sqrt(std::max(0.0, w.dot(S.M * w)));
        if (j + 1 == p || b <= 1e-14 * std::abs(a))
            break;
        beta.push_back(b);
        q = w / b;

        if (dim >= want + 2 && dim % 4 == 0) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri(tridiagonal(alpha, beta, dim));
            bool ready = true;
            for (int i = dim - 1; i >= dim - want && ready; --i) {
                const double theta = tri.eigenvalues()(i);
                ready = theta > 0.0 && b * std::abs(tri.eigenvectors()(dim - 1, i)) <= 1e-11 * theta;
            }
            if (ready)
                break;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri(tridiagonal(alpha, beta, dim));

    // Largest theta first: smallest lambda above the shift. Only the largest
    // 2 * want + 4 Ritz values are examined; the rest are far from converged.
    const int examine = std::max(0, dim - (2 * want + 4));
    std::vector<std::pair<double, Eigen::VectorXd>> found;
    for (int i = dim - 1; i >= examine; --i) {
        const double theta = tri.eigenvalues()(i);
        if (!(theta > 0.0))
            break;
        Eigen::VectorXd x = Q.leftCols(dim) * tri.eigenvectors().col(i);
        x /= std::sqrt(x.dot(S.M * x));
        const double lambda = op.sigma() + 1.0 / theta;
        if (!converged(S, x, lambda, nullptr))
            continue;
        found.emplace_back(lambda, std::move(x));
    }

    RunResult result;
    for (auto& [lambda, x] : found) {
        if (locked.add(S, x)) {
            ++result.n_converged;
            result.smallest_new = std::min(result.smallest_new, lambda);
        }
    }
    return result;
}

Spectrum finish(const SystemMatrices& S, std::vector<double> values, Eigen::MatrixXd vectors, int k)
{
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });

    Spectrum out;
    out.eigenvectors.resize(vectors.rows(), k);
    for (int i = 0; i < k; ++i) {
        Eigen::VectorXd v = vectors.col(order[i]);
        v /= std::sqrt(v.dot(S.M * v));
        fix_sign(v);
        out.eigenvectors.col(i) = v;
        const double lambda = v.dot(S.K * v);
        double residual = 0.0;
        converged(S, v, lambda, &residual);
        out.eigenvalues.push_back(lambda);
        out.residuals.push_back(residual);
    }
    return out;
}

}  // namespace

Spectrum solve_eigs(const SystemMatrices& S, int k)
{
    const int n = S.dofmap.n_free;
    if (k < 1 || k > n)
        throw Error("requested " + std::to_string(k) + " eigenpairs but only " + std::to_string(n) +
                    " free DOFs exist");

    if (n < kDenseThreshold) {
        const Eigen::MatrixXd K(S.K);
        const Eigen::MatrixXd M(S.M);
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> dense(K, M);
        if (dense.info() != Eigen::Success)
            throw Error("dense generalized eigensolver failed");
        std::vector<double> values(dense.eigenvalues().data(), dense.eigenvalues().data() + n);
        return finish(S, std::move(values), dense.eigenvectors(), k);
    }

    const double sigma = S.dofmap.bc == BoundaryCondition::Dirichlet ? 0.0 : -1.0;
    const ShiftInvert op(S, sigma);
    std::mt19937_64 rng(0x5eedULL);
    LockedSet locked;
    int p = std::max(2 * k + 20, 40);
    const int max_runs = 4 * k + 20;
    bool done = false;
    for (int run = 0; run < max_runs && !done; ++run) {
        const int room = n - locked.size();
        if (room <= 0)
            break;
        double kth = std::numeric_limits<double>::infinity();
        if (locked.size() >= k) {
            std::vector<double> sorted = locked.values;
            std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
            kth = sorted[k - 1];
        }
        const int want = std::min(room, std::max(1, k - locked.size()));
        const RunResult r = lanczos_run(S, op, locked, std::min(p, room), want, rng);
        if (r.n_converged == 0) {
            p *= 2;
            continue;
        }
        done = locked.size() >= k && r.smallest_new >= kth;
    }
    if (locked.size() < k)
        throw Error("Lanczos iteration did not converge");
    return finish(S, locked.values, locked.x, k);
}

double rayleigh(const SystemMatrices& S, const Eigen::VectorXd& u)
{
    if (u.size() != S.dofmap.n_free)
        throw Error("rayleigh: vector length does not match the free DOF count");
    const double mass = u.dot(S.M * u);
    if (!(mass > 0.0))
        throw Error("rayleigh: vector has zero M-norm");
    return u.dot(S.K * u) / mass;
}

Cluster detect_cluster(const Spectrum& spectrum, int k, double tol)
{
    const int n = spectrum.size();
    if (k < 1 || k > n)
        throw Error("cluster index " + std::to_string(k) + " outside the solved range 1.." +
                    std::to_string(n));
    if (!(tol > 0.0))
        throw Error("cluster tolerance must be positive");
    const auto& ev = spectrum.eigenvalues;
    const double limit = tol * std::max(1.0, std::abs(ev[k - 1]));
    int lo = k - 1;
    int hi = k - 1;
    for (;;) {
        const bool grow_lo = lo > 0 && ev[hi] - ev[lo - 1] <= limit;
        const bool grow_hi = hi + 1 < n && ev[hi + 1] - ev[lo] <= limit;
        if (!grow_lo && !grow_hi)
            break;
        // Absorb the closer neighbour first.
        if (grow_lo && (!grow_hi || ev[lo] - ev[lo - 1] <= ev[hi + 1] - ev[hi]))
            --lo;
        else
            ++hi;
    }
    if (hi == n - 1)
        throw Error("cluster reaches the last solved eigenvalue; solve more eigenpairs to certify its gap");

    Cluster c;
    for (int i = lo; i <= hi; ++i)
        c.indices.push_back(i + 1);
    c.spread = ev[hi] - ev[lo];
    c.lambda = std::accumulate(ev.begin() + lo, ev.begin() + hi + 1, 0.0) / (hi - lo + 1);
    c.gap = ev[hi + 1] - ev[hi];
    if (lo > 0)
        c.gap = std::min(c.gap, ev[lo] - ev[lo - 1]);
    if (c.gap < 10.0 * c.spread)
        throw Error("ambiguous cluster: gap to the rest of the spectrum is below ten times its spread");
    c.basis = spectrum.eigenvectors.middleCols(lo, hi - lo + 1);
    c.normalization = spectrum.normalization;
    return c;
}

Cluster form_orthonormalize(const SystemMatrices& S, const Cluster& cluster)
{
    if (cluster.size() == 0)
        throw Error("empty cluster");
    if (!(cluster.lambda > kZeroEigenvalue))
        throw Error("energy form is degenerate on a zero-eigenvalue cluster");
    Cluster out = cluster;
    for (int pass = 0; pass < 2; ++pass) {
        for (int l = 0; l < out.size(); ++l) {
            Eigen::VectorXd v = out.basis.col(l);
            for (int r = 0; r < l; ++r)
                v -= out.basis.col(r).dot(S.K * v) * out.basis.col(r);
            v /= std::sqrt(v.dot(S.K * v));
            out.basis.col(l) = v;
        }
    }
    out.normalization = Normalization::Form;
    return out;
}

double sym_function(std::span<const double> values, int s)
{
    const int n = static_cast<int>(values.size());
    if (s < 1 || s > n)
        throw Error("symmetric function order out of range");
    std::vector<double> e(n + 1, 0.0);
    e[0] = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j >= 1; --j)
            e[j] += values[i] * e[j - 1];
    return e[s];
}

double binomial(int n, int k)
{
    if (k < 0 || k > n)
        return 0.0;
    double b = 1.0;
    for (int i = 1; i <= k; ++i)
        b = b * (n - k + i) / i;
    return b;
}

void write_spectrum_csv(const SystemMatrices& S, const Spectrum& spectrum, std::ostream& out)
{
    out << "index,eigenvalue,residual,m_norm\n";
    char buf[160];
    for (int i = 0; i < spectrum.size(); ++i) {
        const Eigen::VectorXd v = spectrum.eigenvectors.col(i);
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", i + 1, spectrum.eigenvalues[i],
                      spectrum.residuals[i], std::sqrt(v.dot(S.M * v)));
        out << buf;
    }
}

}  // namespace specshape
