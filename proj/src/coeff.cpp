#include "specshape/coeff.hpp"

#include "specshape/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

namespace specshape {

CoefficientTensor::CoefficientTensor(int m, int n) : m_(m), n_(n)
{
    if (m < 1 || n < 1)
        throw Error("coefficient tensor needs m >= 1 and n >= 1");
    entries_.assign(static_cast<std::size_t>(m) * m * n * n, 0.0);
}

CoefficientTensor CoefficientTensor::operator-() const
{
    CoefficientTensor out = *this;
    for (double& v : out.entries_)
        v = -v;
    return out;
}

CoefficientTensor make_laplacian(int m)
{
    if (m < 1)
        throw Error("make_laplacian: m must be positive");
    CoefficientTensor t(m, 2);
    for (int i = 0; i < m; ++i)
        for (int a = 0; a < 2; ++a)
            t(i, i, a, a) = 1.0;
    return t;
}

CoefficientTensor make_lame(double k)
{
    if (!(k >= 0.0))
        throw Error("make_lame: k must be nonnegative");
    CoefficientTensor t(2, 2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    t(i, j, a, b) = (i == j && a == b ? 1.0 : 0.0) + (i == a && j == b ? k : 0.0);
    return t;
}

bool check_symmetry(const CoefficientTensor& t)
{
    for (int i = 0; i < t.m(); ++i)
        for (int j = 0; j < t.m(); ++j)
            for (int a = 0; a < t.n(); ++a)
                for (int b = 0; b < t.n(); ++b)
                    if (t(i, j, a, b) != t(j, i, b, a))
                        return false;
    return true;
}

namespace {

// Point on the unit sphere in R^dim from dim-1 hyperspherical angles.
void unit_vector(std::span<const double> angles, std::span<double> out)
{
    double prod = 1.0;
    const std::size_t dim = out.size();
    for (std::size_t k = 0; k + 1 < dim; ++k) {
        out[k] = prod * std::cos(angles[k]);
        prod *= std::sin(angles[k]);
    }
    out[dim - 1] = prod;
}

class RankOneForm
{
public:
    explicit RankOneForm(const CoefficientTensor& t)
        : t_(t), xi_(static_cast<std::size_t>(t.m())), eta_(static_cast<std::size_t>(t.n()))
    {
    }

    std::size_t n_angles() const { return xi_.size() - 1 + eta_.size() - 1; }

    double operator()(std::span<const double> angles)
    {
        unit_vector(angles.subspan(0, xi_.size() - 1), xi_);
        unit_vector(angles.subspan(xi_.size() - 1), eta_);
        double sum = 0.0;
        for (int i = 0; i < t_.m(); ++i)
            for (int j = 0; j < t_.m(); ++j)
                for (int a = 0; a < t_.n(); ++a)
                    for (int b = 0; b < t_.n(); ++b)
                        sum += t_(i, j, a, b) * xi_[i] * xi_[j] * eta_[a] * eta_[b];
        return sum;
    }

private:
    const CoefficientTensor& t_;
    std::vector<double> xi_;
    std::vector<double> eta_;
};

}  // namespace

double legendre_hadamard_constant(const CoefficientTensor& t, int grid_density)
{
    RankOneForm form(t);
    const std::size_t dims = form.n_angles();
    std::vector<double> angles(dims, 0.0);
    if (dims == 0)
        return form(angles);

    // Keep the full tensor-product grid below ~2e6 evaluations.
    int density = std::max(grid_density, 4);
    const double cap = 2.0e6;
    if (std::pow(static_cast<double>(density), static_cast<double>(dims)) > cap)
        density = std::max(4, static_cast<int>(std::floor(std::pow(cap, 1.0 / dims))));
    const double spacing = std::numbers::pi / density;

    // The form is even in xi and eta, so every angle ranges over [0, pi).
    std::vector<int> counter(dims, 0);
    std::vector<double> best_angles(dims, 0.0);
    double best = form(angles);
    for (;;) {
        for (std::size_t d = 0; d < dims; ++d)
            angles[d] = counter[d] * spacing;
        const double v = form(angles);
        if (v < best) {
            best = v;
            best_angles = angles;
        }
        std::size_t d = 0;
        while (d < dims && ++counter[d] == density)
            counter[d++] = 0;
        if (d == dims)
            break;
    }

    // Coordinate descent: golden-section search on each angle in turn.
    angles = best_angles;
    const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int sweep = 0; sweep < 200; ++sweep) {
        const double before = best;
        for (std::size_t d = 0; d < dims; ++d) {
            const double center = angles[d];
            auto at = [&](double x) {
                angles[d] = x;
                return form(angles);
            };
            double lo = center - spacing;
            double hi = center + spacing;
            double x1 = hi - golden * (hi - lo);
            double x2 = lo + golden * (hi - lo);
            double f1 = at(x1);
            double f2 = at(x2);
            while (hi - lo > 1e-13) {
                if (f1 < f2) {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - golden * (hi - lo);
                    f1 = at(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + golden * (hi - lo);
                    f2 = at(x2);
                }
            }
            const double x = f1 < f2 ? x1 : x2;
            const double fx = std::min(f1, f2);
            if (fx < best) {
                best = fx;
                angles[d] = x;
            } else {
                angles[d] = center;
            }
        }
        if (before - best < 1e-12)
            break;
    }
    return best;
}

double energy_density(const CoefficientTensor& t, const Eigen::MatrixXd& grad)
{
    if (grad.rows() != t.m() || grad.cols() != t.n())
        throw Error("energy_density: gradient shape does not match tensor");
    double sum = 0.0;
    for (int i = 0; i < t.m(); ++i)
        for (int j = 0; j < t.m(); ++j)
            for (int a = 0; a < t.n(); ++a)
                for (int b = 0; b < t.n(); ++b)
                    sum += t(i, j, a, b) * grad(i, a) * grad(j, b);
    return sum;
}

Eigen::VectorXd apply_operator_quadratic(const CoefficientTensor& t,
                                         const std::vector<Eigen::MatrixXd>& hessians)
{
    if (static_cast<int>(hessians.size()) != t.m())
        throw Error("apply_operator_quadratic: need one Hessian per component");
    for (const auto& h : hessians) {
        if (h.rows() != t.n() || h.cols() != t.n())
            throw Error("apply_operator_quadratic: Hessian shape mismatch");
        if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-14 * (1.0 + h.cwiseAbs().maxCoeff()))
            throw Error("apply_operator_quadratic: Hessian is not symmetric");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(t.m());
    for (int j = 0; j < t.m(); ++j)
        for (int i = 0; i < t.m(); ++i)
            for (int a = 0; a < t.n(); ++a)
                for (int b = 0; b < t.n(); ++b)
                    out(j) -= t(i, j, a, b) * hessians[i](a, b);
    return out;
}

CoefficientTensor parse_tensor_literal(const std::string& literal)
{
    auto number = [&](const std::string& s) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            throw ConfigError("tensor literal: bad number '" + s + "'");
        }
        if (used != s.size())
            throw ConfigError("tensor literal: bad number '" + s + "'");
        return v;
    };

    if (literal.rfind("laplacian:", 0) == 0) {
        const double m = number(literal.substr(10));
        if (m < 1 || m != std::floor(m))
            throw ConfigError("tensor literal: laplacian needs a positive integer m");
        return make_laplacian(static_cast<int>(m));
    }
    if (literal.rfind("lame:", 0) == 0) {
        const double k = number(literal.substr(5));
        if (!(k >= 0.0))
            throw ConfigError("tensor literal: lame needs k >= 0");
        return make_lame(k);
    }

    nlohmann::json records;
    try {
        records = nlohmann::json::parse(literal);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tensor literal: ") + e.what());
    }
    if (!records.is_array() || records.empty())
        throw ConfigError("tensor literal: expected preset or non-empty record list");

    int m = 0;
    try {
        for (const auto& r : records)
            m = std::max({m, r.at("i").get<int>(), r.at("j").get<int>()});
        if (m < 1)
            throw ConfigError("tensor literal: component indices are 1-based");
        CoefficientTensor t(m, 2);
        for (const auto& r : records) {
            const int i = r.at("i").get<int>();
            const int j = r.at("j").get<int>();
            const int a = r.at("alpha").get<int>();
            const int b = r.at("beta").get<int>();
            if (i < 1 || j < 1 || a < 1 || a > 2 || b < 1 || b > 2)
                throw ConfigError("tensor literal: index out of range");
            t(i - 1, j - 1, a - 1, b - 1) = r.at("value").get<double>();
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("tensor literal: ") + e.what());
    }
}

}  // namespace specshape
