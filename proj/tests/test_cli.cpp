#include "helpers.hpp"
#include "specshape/cli.hpp"
#include "specshape/error.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace specshape;

namespace {

struct Result
{
    int code;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "specshape");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string write(const std::filesystem::path& dir, const std::string& name, const std::string& text)
{
    const auto p = dir / name;
    std::ofstream(p) << text;
    return p.string();
}

std::string slurp(const std::filesystem::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli")
{
    TEST_CASE("config parsing")
    {
        const auto c = cli::parse_config("[problem]\ntensor = \"lame:0.5\"\nbc = neumann\ndomain = ellipse:1.2,0.8\n"
                                         "n_rings = 7\ncluster_mode = tight\n[optimize]\nmaximize = true\n");
        CHECK(c.tensor.m() == 2);
        CHECK(c.bc == BoundaryCondition::Neumann);
        CHECK(c.domain.n_rings == 7);
        CHECK(std::holds_alternative<Ellipse>(c.domain.shape));
        CHECK(c.cluster_tol == 1e-6);
        CHECK(c.maximize);
        CHECK(cli::parse_config("").cluster_tol == 1e-2);

        CHECK_THROWS_AS(cli::parse_config("[problem]\nbogus = 1\n"), ConfigError);
        CHECK_THROWS_AS(cli::parse_config("[nowhere]\nx = 1\n"), ConfigError);
        CHECK_THROWS_AS(cli::parse_config("[problem]\nn_rings = 2.5\n"), ConfigError);
        CHECK_THROWS_AS(cli::parse_config("[problem]\nbc = robin\n"), ConfigError);
        CHECK_THROWS_AS(cli::parse_config("[problem]\ncluster_tol = -1\n"), ConfigError);
        CHECK_THROWS_AS(cli::parse_config("[problem]\ndomain = mesh:/no/such/file.json\n"), ConfigError);
        CHECK_THROWS_AS(cli::parse_config("[problem\n"), ConfigError);

        CHECK(std::holds_alternative<RadialProfile>(cli::parse_domain("radial:3,0.1").shape));
        CHECK(std::get<RadialBump>(cli::parse_field("bump:2,0.5").field).mode == 2);
        CHECK_THROWS_AS(cli::parse_field("spin"), ConfigError);
    }

    TEST_CASE("check-tensor exit codes")
    {
        const auto dir = testing::scratch_dir("cli_tensor");
        const auto good = write(dir, "good.ini", "[problem]\ntensor = lame:1\n");
        auto r = run_cli({"check-tensor", "--config", good, "--out", dir.string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("\"theta\": 0.99999") != std::string::npos);

        const auto bad = write(dir, "bad.ini",
                               "[problem]\ntensor = [{\"i\":1,\"j\":2,\"alpha\":1,\"beta\":2,\"value\":1.0},"
                               "{\"i\":1,\"j\":1,\"alpha\":1,\"beta\":1,\"value\":1.0},"
                               "{\"i\":2,\"j\":2,\"alpha\":2,\"beta\":2,\"value\":1.0}]\n");
        CHECK(run_cli({"check-tensor", "--config", bad, "--out", dir.string()}).code == 1);

        const auto broken = write(dir, "broken.ini", "[problem]\ntensor = lame:\n");
        CHECK(run_cli({"check-tensor", "--config", broken, "--out", dir.string()}).code == 2);
        CHECK(run_cli({"check-tensor", "--config", (dir / "absent.ini").string()}).code == 2);
        CHECK(run_cli({}).code == 2);
        CHECK(run_cli({"frobnicate"}).code == 2);
        CHECK(run_cli({"--help"}).code == 0);
    }

    TEST_CASE("solve and determinism")
    {
        const auto dir = testing::scratch_dir("cli_solve");
        const auto cfg = write(dir, "s.ini", "[problem]\nn_rings = 8\nn_eigs = 6\n");
        REQUIRE(run_cli({"solve", "--config", cfg, "--out", (dir / "a").string()}).code == 0);
        REQUIRE(run_cli({"solve", "--config", cfg, "--out", (dir / "b").string()}).code == 0);
        const auto a = slurp(dir / "a" / "eigenvalues.csv");
        CHECK(a == slurp(dir / "b" / "eigenvalues.csv"));
        CHECK(a.rfind("index,eigenvalue,residual,m_norm\n1,5.8", 0) == 0);

        const auto neu = write(dir, "n.ini", "[problem]\nn_rings = 6\nbc = neumann\n");
        const auto r = run_cli({"solve", "--config", neu, "--out", (dir / "n").string()});
        CHECK(r.code == 0);
        std::istringstream rows(r.out);
        std::string line;
        std::getline(rows, line);
        std::getline(rows, line);
        CHECK(std::abs(std::stod(line.substr(line.find(',') + 1))) < 1e-8);

        const auto big = write(dir, "big.ini", "[problem]\nn_rings = 2\nn_eigs = 10000\n");
        CHECK(run_cli({"solve", "--config", big, "--out", dir.string()}).code == 1);
    }

    TEST_CASE("shape-derivative and criticality reports")
    {
        const auto dir = testing::scratch_dir("cli_shape");
        const auto cfg = write(dir, "d.ini",
                               "[problem]\nn_rings = 10\nn_eigs = 4\n[shape-derivative]\npsi = dilation\nh = 1e-3\n");
        auto r = run_cli({"shape-derivative", "--config", cfg, "--out", dir.string()});
        REQUIRE(r.code == 0);
        const auto j = slurp(dir / "shape_derivative.json");
        for (const char* key : {"\"F\"", "\"bc\"", "\"c_star\"", "\"dLambda\"", "\"fd\"", "\"lambda_F\"",
                                "\"per_l_integrals\"", "\"rel_err\"", "\"residual\"", "\"s\""})
            CHECK(j.find(key) != std::string::npos);
        CHECK(j.find("\"F\"") < j.find("\"bc\""));  // sorted keys

        const auto zero = write(dir, "z.ini", "[problem]\nn_rings = 6\n[shape-derivative]\npsi = zero\n");
        r = run_cli({"shape-derivative", "--config", zero, "--out", dir.string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("\"dLambda\": [0]") != std::string::npos);

        const auto lost = write(dir, "l.ini",
                                "[problem]\ndomain = ellipse:1.001,0.999000999000999\nn_rings = 10\nindex = 2\n"
                                "cluster_mode = tight\ncluster_tol = 1e-9\n"
                                "[shape-derivative]\npsi = bump:2,1\nh = 1e-2\n");
        r = run_cli({"shape-derivative", "--config", lost, "--out", dir.string()});
        CHECK(r.code == 1);
        CHECK(r.err.find("cluster identity lost") != std::string::npos);

        const auto crit = write(dir, "c.ini", "[problem]\nn_rings = 16\nindex = 2\n");
        r = run_cli({"criticality", "--config", crit, "--out", dir.string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("\"F\": [2, 3]") != std::string::npos);

        const auto empty = write(dir, "e.ini", "[problem]\nn_rings = 4\nindex = 9\nn_eigs = 4\n");
        CHECK(run_cli({"criticality", "--config", empty, "--out", dir.string()}).code == 1);
    }

    TEST_CASE("optimize outputs")
    {
        const auto dir = testing::scratch_dir("cli_opt");
        const auto none = write(dir, "z.ini", "[problem]\nn_rings = 6\n[optimize]\nsteps = 0\n");
        REQUIRE(run_cli({"optimize", "--config", none, "--out", dir.string()}).code == 0);
        CHECK(slurp(dir / "history.csv") == "step,lambda_F,Lambda_s,volume,residual,step_size\n");

        const auto two = write(dir, "t.ini",
                               "[problem]\ndomain = ellipse:1.3,0.7692307692307692\nn_rings = 6\n"
                               "[optimize]\nsteps = 2\ndump_meshes = true\n");
        REQUIRE(run_cli({"optimize", "--config", two, "--out", (dir / "a").string()}).code == 0);
        REQUIRE(run_cli({"optimize", "--config", two, "--out", (dir / "b").string()}).code == 0);
        CHECK(slurp(dir / "a" / "history.csv") == slurp(dir / "b" / "history.csv"));
        CHECK(std::filesystem::exists(dir / "a" / "meshes" / "step_0002.json"));

        write_mesh_json(testing::u_shape(3), (dir / "u.json").string());
        const auto u = write(dir, "u.ini",
                             "[problem]\ndomain = mesh:" + (dir / "u.json").string() + "\n[optimize]\nsteps = 1\n");
        const auto r = run_cli({"optimize", "--config", u, "--out", dir.string()});
        CHECK(r.code == 1);
        CHECK(r.err.find("star-shaped") != std::string::npos);
    }

    TEST_CASE("rotation-check seed override")
    {
        const auto dir = testing::scratch_dir("cli_rot");
        const auto cfg = write(dir, "r.ini", "[problem]\ntensor = lame:2\n[rotation-check]\nsamples = 20\n");
        const auto a = run_cli({"rotation-check", "--config", cfg, "--out", dir.string(), "--seed", "9"});
        const auto b = run_cli({"rotation-check", "--config", cfg, "--seed", "9", "--out", dir.string()});
        CHECK(a.code == 0);
        CHECK(a.out == b.out);
        CHECK(a.out.find("\"seed\": 9") != std::string::npos);
        CHECK(run_cli({"rotation-check", "--config", cfg, "--seed", "-3"}).code == 2);
    }
}
