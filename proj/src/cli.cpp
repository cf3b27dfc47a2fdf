#include "specshape/cli.hpp"

#include "specshape/error.hpp"
#include "specshape/optimize.hpp"
#include "specshape/spectrum.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace specshape::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(b, e - b + 1);
    if (out.size() >= 2 && (out.front() == '"' || out.front() == '\'') && out.back() == out.front())
        out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<double> parse_numbers(const std::string& list, const std::string& what)
{
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != item.size() || !std::isfinite(v))
            throw ConfigError("bad number '" + item + "' in " + what);
        out.push_back(v);
    }
    return out;
}

double to_double(const std::string& key, const std::string& value)
{
    const auto v = parse_numbers(value, key);
    if (v.size() != 1)
        throw ConfigError(key + " expects a single number");
    return v[0];
}

int to_int(const std::string& key, const std::string& value)
{
    const double v = to_double(key, value);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ConfigError(key + " expects an integer");
    return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& value)
{
    if (value == "true" || value == "1" || value == "yes")
        return true;
    if (value == "false" || value == "0" || value == "no")
        return false;
    throw ConfigError(key + " expects true or false");
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// JSON with sorted keys (nlohmann objects are ordered maps) and 17-digit floats.
void dump(const json& j, std::string& out, int indent)
{
    const std::string pad(2 * indent, ' ');
    const std::string inner(2 * (indent + 1), ' ');
    switch (j.type()) {
    case json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                out += ",\n";
            first = false;
            out += inner + json(it.key()).dump() + ": ";
            dump(it.value(), out, indent + 1);
        }
        out += "\n" + pad + "}";
        return;
    }
    case json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[";
        bool first = true;
        for (const auto& v : j) {
            if (!first)
                out += ", ";
            first = false;
            dump(v, out, indent + 1);
        }
        out += "]";
        return;
    }
    case json::value_t::number_float: {
        const double v = j.get<double>();
        out += std::isfinite(v) ? fmt(v) : "null";
        return;
    }
    default:
        out += j.dump();
    }
}

void write_json(const json& j, const fs::path& path, std::ostream& echo)
{
    std::string text;
    dump(j, text, 0);
    text += "\n";
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot write " + path.string());
    f << text;
    echo << text;
}

void write_text(const std::string& text, const fs::path& path, std::ostream& echo)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw Error("cannot write " + path.string());
    f << text;
    echo << text;
}

using Setter = void (*)(RunConfig&, const std::string&, const std::string&);

const std::map<std::string, std::map<std::string, Setter>>& schema()
{
    static const std::map<std::string, std::map<std::string, Setter>> s = {
        {"problem",
         {
             {"tensor",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  c.tensor = parse_tensor_literal(v);
                  c.tensor_literal = v;
              }},
             {"tensor_file",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  std::ifstream f(v);
                  if (!f)
                      throw ConfigError("tensor file not found: " + v);
                  std::stringstream ss;
                  ss << f.rdbuf();
                  c.tensor = parse_tensor_literal(ss.str());
                  c.tensor_literal = ss.str();
              }},
             {"bc",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  if (v == "dirichlet")
                      c.bc = BoundaryCondition::Dirichlet;
                  else if (v == "neumann")
                      c.bc = BoundaryCondition::Neumann;
                  else
                      throw ConfigError("bc must be dirichlet or neumann");
              }},
             {"domain",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  const int n_rings = c.domain.n_rings;
                  c.domain = parse_domain(v);
                  c.domain.n_rings = n_rings;
                  c.domain_literal = v;
              }},
             {"n_rings", [](RunConfig& c, const std::string& k, const std::string& v) { c.domain.n_rings = to_int(k, v); }},
             {"order", [](RunConfig& c, const std::string& k, const std::string& v) { c.order = to_int(k, v); }},
             {"n_eigs", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_eigs = to_int(k, v); }},
             {"index", [](RunConfig& c, const std::string& k, const std::string& v) { c.index = to_int(k, v); }},
             {"cluster_mode", [](RunConfig& c, const std::string&, const std::string& v) { c.cluster_mode = v; }},
             {"cluster_tol",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.cluster_tol = to_double(k, v); }},
         }},
        {"shape-derivative",
         {
             {"psi",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  c.psi = parse_field(v);
                  c.psi_literal = v;
              }},
             {"h", [](RunConfig& c, const std::string& k, const std::string& v) { c.h = to_double(k, v); }},
         }},
        {"optimize",
         {
             {"steps", [](RunConfig& c, const std::string& k, const std::string& v) { c.steps = to_int(k, v); }},
             {"step0", [](RunConfig& c, const std::string& k, const std::string& v) { c.step0 = to_double(k, v); }},
             {"s", [](RunConfig& c, const std::string& k, const std::string& v) { c.s = to_int(k, v); }},
             {"maximize",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.maximize = to_bool(k, v); }},
             {"dump_meshes",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.dump_meshes = to_bool(k, v); }},
         }},
        {"rotation-check",
         {
             {"homomorphism",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  if (v == "vector")
                      c.homomorphism = Homomorphism::Vector;
                  else if (v == "identity")
                      c.homomorphism = Homomorphism::IdentityBlock;
                  else
                      throw ConfigError("homomorphism must be vector or identity");
              }},
             {"samples", [](RunConfig& c, const std::string& k, const std::string& v) { c.samples = to_int(k, v); }},
             {"seed",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  const int s = to_int(k, v);
                  if (s < 0)
                      throw ConfigError("seed must be nonnegative");
                  c.seed = static_cast<std::uint64_t>(s);
              }},
         }},
    };
    return s;
}

void validate(RunConfig& c)
{
    if (c.domain.n_rings < 1)
        throw ConfigError("n_rings must be at least 1");
    if (c.order != 1 && c.order != 2)
        throw ConfigError("order must be 1 or 2");
    if (c.n_eigs < 1)
        throw ConfigError("n_eigs must be positive");
    if (c.index < 1)
        throw ConfigError("index is 1-based and must be positive");
    if (c.cluster_tol == 0.0) {
        if (c.cluster_mode == "tight")
            c.cluster_tol = kTightClusterTol;
        else if (c.cluster_mode == "physical")
            c.cluster_tol = kPhysicalClusterTol;
        else
            throw ConfigError("cluster_mode must be tight or physical");
    }
    if (!(c.cluster_tol > 0.0))
        throw ConfigError("cluster_tol must be positive");
    if (c.h && !(*c.h > 0.0))
        throw ConfigError("h must be positive");
    if (c.steps < 0)
        throw ConfigError("steps must be nonnegative");
    if (c.step0 < 0.0)
        throw ConfigError("step0 must be nonnegative");
    if (c.s < 1)
        throw ConfigError("s must be positive");
    if (c.samples < 1)
        throw ConfigError("samples must be positive");
}

struct Problem
{
    Mesh mesh;
    SystemMatrices system;
    Spectrum spectrum;
};

Problem solve_problem(const RunConfig& c)
{
    Problem p;
    p.mesh = build_mesh(c.domain);
    p.system = assemble(p.mesh, c.tensor, c.bc, c.order);
    p.spectrum = solve_eigs(p.system, c.n_eigs);
    return p;
}

// Cluster around the configured index with the basis the formulas expect.
Cluster select_cluster(const RunConfig& c, const Problem& p)
{
    if (c.index > p.spectrum.size())
        throw Error("index exceeds n_eigs");
    Cluster cluster = detect_cluster(p.spectrum, c.index, c.cluster_tol);
    if (cluster.lambda > kZeroEigenvalue)
        cluster = form_orthonormalize(p.system, cluster);
    return cluster;
}

int cmd_check_tensor(const RunConfig& c, const fs::path& out_dir, std::ostream& out)
{
    const bool symmetric = check_symmetry(c.tensor);
    const double theta = legendre_hadamard_constant(c.tensor);
    json j;
    j["tensor"] = c.tensor_literal;
    j["m"] = c.tensor.m();
    j["n"] = c.tensor.n();
    j["symmetric"] = symmetric;
    j["theta"] = theta;
    j["elliptic"] = theta > kEllipticityFloor;
    write_json(j, out_dir / "check_tensor.json", out);
    return symmetric && theta > kEllipticityFloor ? 0 : 1;
}

int cmd_solve(const RunConfig& c, const fs::path& out_dir, std::ostream& out)
{
    const Problem p = solve_problem(c);
    std::ostringstream csv;
    write_spectrum_csv(p.system, p.spectrum, csv);
    write_text(csv.str(), out_dir / "eigenvalues.csv", out);
    return 0;
}

json points_json(const BoundaryDensity& d)
{
    json pts = json::array();
    for (const auto& q : d.points)
        pts.push_back({q.point.x(), q.point.y(), q.weight});
    return pts;
}

int cmd_shape_derivative(const RunConfig& c, const fs::path& out_dir, std::ostream& out)
{
    const Problem p = solve_problem(c);
    const Cluster cluster = select_cluster(c, p);
    const HadamardReport report = hadamard(p.mesh, p.system, c.tensor, cluster, c.psi);
    const CriticalityReport crit = criticality_residual(p.mesh, p.system, c.tensor, cluster);

    json j;
    j["bc"] = to_string(c.bc);
    j["lambda_F"] = cluster.lambda;
    j["F"] = cluster.indices;
    j["psi"] = c.psi_literal;
    json s = json::array();
    for (int i = 1; i <= cluster.size(); ++i)
        s.push_back(i);
    j["s"] = s;
    j["dLambda"] = report.derivatives;
    j["per_l_integrals"] = report.per_l_integrals;
    j["residual"] = crit.residual;
    j["c_star"] = crit.c_star;
    j["fd"] = nullptr;
    j["rel_err"] = nullptr;
    if (c.h) {
        const FdResult fd =
            fd_reference(p.mesh, c.tensor, c.bc, c.order, p.system, p.spectrum, cluster.indices, c.psi, *c.h);
        json rel = json::array();
        for (int i = 0; i < cluster.size(); ++i)
            rel.push_back(relative_discrepancy(report.derivatives[i], fd.derivatives[i],
                                               derivative_scale(p.mesh, cluster.lambda, i + 1, c.psi)));
        j["h"] = *c.h;
        j["fd"] = fd.derivatives;
        j["rel_err"] = rel;
    }
    write_json(j, out_dir / "shape_derivative.json", out);
    return 0;
}

int cmd_criticality(const RunConfig& c, const fs::path& out_dir, std::ostream& out)
{
    const Problem p = solve_problem(c);
    const Cluster cluster = select_cluster(c, p);
    const CriticalityReport crit = criticality_residual(p.mesh, p.system, c.tensor, cluster);
    json j;
    j["bc"] = to_string(c.bc);
    j["lambda_F"] = cluster.lambda;
    j["F"] = cluster.indices;
    j["residual"] = crit.residual;
    j["c_star"] = crit.c_star;
    j["density"] = crit.density.total;
    j["points"] = points_json(crit.density);
    write_json(j, out_dir / "criticality.json", out);
    return 0;
}

int cmd_optimize(const RunConfig& c, const fs::path& out_dir, std::ostream& out)
{
    OptTarget target;
    target.bc = c.bc;
    target.tensor = c.tensor;
    target.index = c.index;
    target.s = c.s;
    target.order = c.order;
    target.cluster_tol = c.cluster_tol;
    target.n_eigs = std::max(c.n_eigs, c.index + 1);
    target.maximize = c.maximize;

    const fs::path mesh_dir = out_dir / "meshes";
    auto dump_mesh = [&](const Mesh& mesh, int step) {
        char name[32];
        std::snprintf(name, sizeof name, "step_%04d.json", step);
        write_mesh_json(mesh, (mesh_dir / name).string());
    };
    if (c.dump_meshes)
        fs::create_directories(mesh_dir);

    OptState state = make_state(build_mesh(c.domain), target);
    if (c.dump_meshes)
        dump_mesh(state.mesh, 0);
    for (int i = 0; i < c.steps; ++i) {
        step(state, c.step0);
        if (c.dump_meshes)
            dump_mesh(state.mesh, i + 1);
    }
    std::ostringstream csv;
    write_history_csv(state.history, csv);
    write_text(csv.str(), out_dir / "history.csv", out);
    return 0;
}

int cmd_rotation_check(const RunConfig& c, const fs::path& out_dir, std::ostream& out)
{
    const double deviation = rotation_invariance_check(c.tensor, c.homomorphism, c.samples, c.seed);
    json j;
    j["tensor"] = c.tensor_literal;
    j["homomorphism"] = c.homomorphism == Homomorphism::Vector ? "vector" : "identity";
    j["samples"] = c.samples;
    j["seed"] = c.seed;
    j["deviation"] = deviation;
    write_json(j, out_dir / "rotation_check.json", out);
    return 0;
}

}  // namespace

DomainSpec parse_domain(const std::string& literal)
{
    const std::string lit = trim(literal);
    const auto colon = lit.find(':');
    const std::string kind = lit.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : lit.substr(colon + 1);
    DomainSpec d;
    if (kind == "disk" && colon == std::string::npos) {
        d.shape = UnitDisk{};
    } else if (kind == "ellipse") {
        const auto v = parse_numbers(args, "ellipse");
        if (v.size() != 2 || !(v[0] > 0.0) || !(v[1] > 0.0))
            throw ConfigError("ellipse expects two positive semi-axes: ellipse:a,b");
        d.shape = Ellipse{v[0], v[1]};
    } else if (kind == "radial") {
        const auto v = parse_numbers(args, "radial");
        if (v.size() != 2 || v[0] < 1 || v[0] != std::floor(v[0]))
            throw ConfigError("radial expects a positive integer mode and an amplitude: radial:mode,amplitude");
        RadialProfile profile;
        profile.fourier.assign(static_cast<std::size_t>(v[0]), {0.0, 0.0});
        profile.fourier.back().first = v[1];
        d.shape = profile;
    } else if (kind == "fourier") {
        const auto v = parse_numbers(args, "fourier");
        if (v.empty() || v.size() % 2 != 0)
            throw ConfigError("fourier expects cosine/sine pairs: fourier:c1,s1,c2,s2,...");
        RadialProfile profile;
        for (std::size_t i = 0; i < v.size(); i += 2)
            profile.fourier.emplace_back(v[i], v[i + 1]);
        d.shape = profile;
    } else if (kind == "mesh") {
        if (!fs::exists(args))
            throw ConfigError("mesh file not found: " + args);
        d.shape = MeshFile{args};
    } else {
        throw ConfigError("unknown domain '" + lit + "'");
    }
    return d;
}

PerturbationField parse_field(const std::string& literal)
{
    const std::string lit = trim(literal);
    const auto colon = lit.find(':');
    const std::string kind = lit.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : lit.substr(colon + 1);
    if (kind == "zero" && colon == std::string::npos)
        return PerturbationField{Translation{0.0, 0.0}};
    if (kind == "dilation" && colon == std::string::npos)
        return PerturbationField{Dilation{}};
    if (kind == "translation") {
        const auto v = parse_numbers(args, "translation");
        if (v.size() != 2)
            throw ConfigError("translation expects translation:dx,dy");
        return PerturbationField{Translation{v[0], v[1]}};
    }
    if (kind == "bump") {
        const auto v = parse_numbers(args, "bump");
        if (v.size() != 2 || v[0] < 0 || v[0] != std::floor(v[0]))
            throw ConfigError("bump expects a nonnegative integer mode and an amplitude: bump:mode,amplitude");
        return PerturbationField{RadialBump{static_cast<int>(v[0]), v[1]}};
    }
    throw ConfigError("unknown perturbation field '" + lit + "'");
}

RunConfig parse_config(const std::string& text)
{
    boost::property_tree::ptree tree;
    std::istringstream in(text);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " + e.message());
    }
    RunConfig c;
    const auto& known = schema();
    for (const auto& [section, body] : tree) {
        const auto sec = known.find(section);
        if (sec == known.end() || !body.data().empty())
            throw ConfigError("unknown config section '" + section + "'");
        for (const auto& [key, value] : body) {
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end())
                throw ConfigError("unknown key '" + key + "' in section [" + section + "]");
            setter->second(c, key, trim(value.data()));
        }
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream f(path);
    if (!f)
        throw ConfigError("cannot open config file " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Spectral shape analysis for constant-coefficient elliptic systems on planar domains"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::optional<long long> seed;
    app.add_option("--config", config_path,
                   "INI-style config with sections [problem], [shape-derivative], [optimize], [rotation-check].\n"
                   "[problem] defaults: tensor = laplacian:1 (or lame:k, or a JSON array of {i,j,alpha,beta,value}),\n"
                   "  tensor_file = path, bc = dirichlet|neumann, domain = disk (or ellipse:a,b, radial:mode,amp,\n"
                   "  fourier:c1,s1,..., mesh:path), n_rings = 16, order = 2, n_eigs = 6, index = 1,\n"
                   "  cluster_mode = physical (1e-2) | tight (1e-6), cluster_tol overrides the mode.\n"
                   "[shape-derivative] psi = dilation (or zero, translation:dx,dy, bump:mode,amp); h = FD step,\n"
                   "  finite-difference check only when given.\n"
                   "[optimize] steps = 10, step0 = 0.2, s = 1, maximize = false, dump_meshes = false.\n"
                   "[rotation-check] homomorphism = vector|identity, samples = 100, seed = 0.")
        ->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory (created if missing)");
    app.add_option("--seed", seed, "Seed for randomized checks; overrides the config")->check(CLI::NonNegativeNumber);

    using Command = int (*)(const RunConfig&, const fs::path&, std::ostream&);
    const std::vector<std::tuple<std::string, std::string, Command>> commands = {
        {"check-tensor", "Symmetry and Legendre-Hadamard constant of the tensor", cmd_check_tensor},
        {"solve", "Lowest n_eigs eigenvalues as CSV", cmd_solve},
        {"shape-derivative", "Hadamard derivatives of the cluster's symmetric functions", cmd_shape_derivative},
        {"criticality", "Boundary density constancy of the cluster", cmd_criticality},
        {"optimize", "Volume-constrained descent on Lambda_{F,s}", cmd_optimize},
        {"rotation-check", "Rotation invariance deviation of the operator", cmd_rotation_check},
    };
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        RunConfig c = config_path.empty() ? parse_config("") : load_config(config_path);
        if (seed)
            c.seed = static_cast<std::uint64_t>(*seed);
        fs::create_directories(out_dir);
        for (const auto& [name, help, fn] : commands)
            if (app.got_subcommand(name))
                return fn(c, out_dir, out);
        return 2;
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace specshape::cli
