#pragma once

#include "specshape/assembly.hpp"
#include "specshape/coeff.hpp"
#include "specshape/geometry.hpp"
#include "specshape/shapederiv.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace specshape::cli {

/// Parsed experiment definition. Every field has a default so a config only
/// lists what differs.
struct RunConfig
{
    // [problem]
    CoefficientTensor tensor = make_laplacian(1);
    std::string tensor_literal = "laplacian:1";
    BoundaryCondition bc = BoundaryCondition::Dirichlet;
    DomainSpec domain;
    std::string domain_literal = "disk";
    int order = 2;
    int n_eigs = 6;
    int index = 1;
    std::string cluster_mode = "physical";
    double cluster_tol = 0.0;  // resolved from cluster_mode unless given

    // [shape-derivative]
    PerturbationField psi;
    std::string psi_literal = "dilation";
    std::optional<double> h;

    // [optimize]
    int steps = 10;
    double step0 = 0.2;
    int s = 1;
    bool maximize = false;
    bool dump_meshes = false;

    // [rotation-check]
    Homomorphism homomorphism = Homomorphism::Vector;
    int samples = 100;
    std::uint64_t seed = 0;
};

/// Parse the INI-style text of a config. Throws ConfigError on syntax
/// errors, unknown keys, bad values or missing referenced files.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

DomainSpec parse_domain(const std::string& literal);
PerturbationField parse_field(const std::string& literal);

/// Entry point shared by the executable and the tests. Returns the exit code:
/// 0 success, 1 domain or numerical failure, 2 usage or parse error.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace specshape::cli
