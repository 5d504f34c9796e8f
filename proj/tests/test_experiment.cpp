#include "peig/experiment.hpp"
#include "peig/reference.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace peig;
namespace fs = std::filesystem;

namespace {

std::vector<std::vector<std::string>> read_csv(const std::string& text)
{
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            row.push_back(cell);
        }
        if (!line.empty() && line.back() == ',') {
            row.emplace_back();
        }
        rows.push_back(row);
    }
    return rows;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("peig_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args)
{
    const std::string cmd = std::string(PEIG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Config, ParsesSettings)
{
    const auto spec = parse_experiment(R"(
# comment
p_max = 20
domain = disk
radius = 0.5      # trailing comment
levels = 1:3
delta_p = 0.5
rescale = fixed:2
study_p = 3, 10
export_p = 4
preconditioner = jacobi
)");
    ASSERT_TRUE(spec.domain);
    EXPECT_EQ(spec.domain->kind, DomainKind::disk);
    EXPECT_EQ(spec.domain->param0, 0.5);
    EXPECT_EQ(spec.level_min, 1);
    EXPECT_EQ(spec.level_max, 3);
    EXPECT_EQ(spec.solver.p_max, 20.0);
    EXPECT_EQ(spec.solver.delta_p, 0.5);
    EXPECT_EQ(spec.rescale, RescaleMode::fixed);
    EXPECT_EQ(spec.fixed_alpha, 2.0);
    EXPECT_EQ(spec.study_p, (std::vector<double>{3.0, 10.0}));
    EXPECT_EQ(spec.export_p, (std::vector<double>{4.0}));
    EXPECT_EQ(spec.solver.precond.kind, PreconditionerKind::jacobi);
}

TEST(Config, Errors)
{
    EXPECT_THROW(parse_experiment("domain = interval\nfoo = 1\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = blob\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = interval\np_max = abc\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = interval\nno equals sign\n"), ConfigError);
    EXPECT_THROW(parse_experiment("p_max = 10\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = interval\nmesh = x.mesh\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = interval\nstudy_p = 1.5\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = interval\nlevels = 3:1\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = interval\nrescale = fixed:-1\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = interval\nrescale = sometimes\n"), ConfigError);
    EXPECT_THROW(parse_experiment("domain = interval\neta = 0\n"), ConfigError);
    try {
        parse_experiment("domain = interval\n\nbogus = 2\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_experiment("/nonexistent/peig.cfg"), ConfigError);
}

TEST(Config, FormatP)
{
    EXPECT_EQ(format_p(3.0), "3");
    EXPECT_EQ(format_p(2.5), "2.5");
    EXPECT_EQ(format_p(10.125), "10.125");
}

TEST(Convergence, IntervalTableAgainstExactEigenpair)
{
    auto spec = parse_experiment("domain = interval\nlevels = 0:2\nstudy_p = 3, 4\n");
    const auto tables = run_convergence_study(spec);
    ASSERT_EQ(tables.size(), 2u);
    for (const auto& t : tables) {
        EXPECT_TRUE(t.exact_reference);
        EXPECT_NEAR(t.reference_lambda, exact_1d_eigenvalue(t.p, -1.0, 1.0), 1e-12);
        ASSERT_EQ(t.rows.size(), 3u);
        EXPECT_EQ(t.rows[0].cells, 64u);
        EXPECT_EQ(t.rows[2].cells, 256u);
        EXPECT_TRUE(std::isnan(t.rows[0].l2_rate));
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            const auto& r = t.rows[i];
            EXPECT_TRUE(r.ok);
            EXPECT_NEAR(r.lambda_rel_error, std::abs(r.lambda - t.reference_lambda) / t.reference_lambda, 1e-15);
            if (i > 0) {
                const auto& c = t.rows[i - 1];
                EXPECT_NEAR(r.l2_rate, std::log2(c.l2_error / r.l2_error), 1e-12);
                EXPECT_NEAR(r.lambda_rate, std::log2(c.lambda_rel_error / r.lambda_rel_error), 1e-12);
                EXPECT_LT(r.lambda_rel_error, c.lambda_rel_error);
            }
        }
    }

    const auto rows = read_csv(format_convergence_csv(tables[0]));
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"cells", "L2_error", "L2_rate", "lambda_rel_error", "lambda_rate",
                                                 "lambda"}));
    EXPECT_EQ(rows[1][2], "");
    for (std::size_t i = 2; i < rows.size(); ++i) {
        const double l2c = std::stod(rows[i - 1][1]);
        const double l2f = std::stod(rows[i][1]);
        const double lc = std::stod(rows[i - 1][3]);
        const double lf = std::stod(rows[i][3]);
        EXPECT_NEAR(std::stod(rows[i][2]), std::log2(l2c / l2f), 1e-7);
        EXPECT_NEAR(std::stod(rows[i][4]), std::log2(lc / lf), 1e-7);
    }
}

TEST(Convergence, SelfConvergenceOnDisk)
{
    auto spec = parse_experiment("domain = disk\nlevels = 0:2\nstudy_p = 3\n");
    const auto tables = run_convergence_study(spec);
    ASSERT_EQ(tables.size(), 1u);
    const auto& t = tables[0];
    EXPECT_FALSE(t.exact_reference);
    EXPECT_EQ(t.reference_cells, 80u);
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0].cells, 5u);
    EXPECT_EQ(t.rows[1].cells, 20u);
    for (const auto& r : t.rows) {
        EXPECT_TRUE(r.ok) << r.failure;
        EXPECT_GT(r.l2_error, 0.0);
        EXPECT_GT(r.lambda, t.reference_lambda);
    }
}

TEST(Sweep, CsvColumns)
{
    auto spec = parse_experiment("domain = disk\nradius = 0.5\nlevel = 1\np_max = 5\nrescale = adaptive\n");
    std::vector<double> seen;
    const auto sweep = run_p_sweep(spec, [&](const EigenResult& r) { seen.push_back(r.p); });
    ASSERT_FALSE(sweep.continuation.truncated);
    EXPECT_EQ(seen.size(), sweep.continuation.results.size());
    const auto rows = read_csv(format_sweep_csv(sweep.continuation));
    ASSERT_EQ(rows.size(), sweep.continuation.results.size() + 1);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"p", "lambda_working", "alpha", "lambda_original", "lambda_root",
                                                 "p_lambda_root", "newton_iters"}));
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = sweep.continuation.results[i - 1];
        ASSERT_EQ(rows[i].size(), 7u);
        EXPECT_NEAR(std::stod(rows[i][0]), r.p, 1e-12);
        EXPECT_NEAR(std::stod(rows[i][1]) / r.lambda, 1.0, 1e-8);
        EXPECT_NEAR(std::stod(rows[i][3]) / r.lambda_original, 1.0, 1e-8);
        EXPECT_NEAR(std::stod(rows[i][4]), std::pow(r.lambda_original, 1.0 / r.p), 1e-7);
        EXPECT_NEAR(std::stod(rows[i][5]), r.p * std::stod(rows[i][4]), 1e-6);
        EXPECT_EQ(std::stoi(rows[i][6]), r.newton_iters);
    }
}

TEST(Export, VtkLayout)
{
    auto spec = parse_experiment("domain = disk\nlevel = 1\np_max = 3\n");
    const auto sweep = run_p_sweep(spec);
    const auto dir = scratch("vtk");
    const auto path = dir / "u.vtk";
    export_eigenfunction(sweep.continuation.results.back(), *sweep.mesh, spec.domain, path);
    const auto text = slurp(path);
    EXPECT_EQ(text.rfind("# vtk DataFile Version", 0), 0u);
    EXPECT_NE(text.find("DATASET UNSTRUCTURED_GRID"), std::string::npos);
    EXPECT_NE(text.find("POINTS " + std::to_string(sweep.mesh->num_vertices()) + " double"), std::string::npos);
    const auto nc = sweep.mesh->num_cells();
    EXPECT_NE(text.find("CELLS " + std::to_string(nc) + " " + std::to_string(5 * nc)), std::string::npos);
    EXPECT_NE(text.find("CELL_TYPES " + std::to_string(nc)), std::string::npos);
    EXPECT_NE(text.find("SCALARS u double"), std::string::npos);
    EXPECT_NE(text.find("SCALARS u_inf double"), std::string::npos);
    EXPECT_NE(text.find("SCALARS diff double"), std::string::npos);
}

TEST(Export, SquareHasNoLimitField)
{
    auto spec = parse_experiment("domain = square\nlevel = 1\np_max = 2\n");
    const auto sweep = run_p_sweep(spec);
    const auto dir = scratch("vtk_square");
    export_eigenfunction(sweep.continuation.results.back(), *sweep.mesh, spec.domain, dir / "u.vtk");
    const auto text = slurp(dir / "u.vtk");
    EXPECT_NE(text.find("SCALARS u double"), std::string::npos);
    EXPECT_EQ(text.find("u_inf"), std::string::npos);
}

TEST(Export, IntervalTable)
{
    auto spec = parse_experiment("domain = interval\nlevel = 0\nbase_cells = 8\np_max = 4\n");
    const auto sweep = run_p_sweep(spec);
    const auto dir = scratch("table");
    export_eigenfunction(sweep.continuation.results.back(), *sweep.mesh, spec.domain, dir / "u.txt");
    std::ifstream in(dir / "u.txt");
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "x u u_inf diff");
    double x = 0, u = 0, uinf = 0, diff = 0, prev = -2.0;
    int n = 0;
    while (in >> x >> u >> uinf >> diff) {
        EXPECT_GT(x, prev);
        EXPECT_NEAR(uinf, 1.0 - std::abs(x), 1e-12);
        EXPECT_NEAR(diff, u - uinf, 1e-8);
        prev = x;
        ++n;
    }
    EXPECT_EQ(n, 9);
}

TEST(Cli, SolveConvergeAndMeshGen)
{
    const auto dir = scratch("cli");
    {
        std::ofstream cfg(dir / "run.cfg");
        cfg << "domain = disk\nradius = 0.5\nlevel = 1\np_max = 4\nlevels = 0:1\nstudy_p = 3\nexport_p = 3\n";
    }
    const auto cfg = (dir / "run.cfg").string();
    EXPECT_EQ(run_cli("solve --config " + cfg + " --rescale adaptive --out " + (dir / "solve").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "solve" / "sweep.csv"));
    EXPECT_TRUE(fs::exists(dir / "solve" / "u_p3.vtk"));
    EXPECT_TRUE(fs::exists(dir / "solve" / "u_p4.vtk"));

    EXPECT_EQ(run_cli("solve --config " + cfg + " --p-max 3 --delta-p 0.5 --out " + (dir / "half").string()), 0);
    EXPECT_EQ(read_csv(slurp(dir / "half" / "sweep.csv")).size(), 4u);

    EXPECT_EQ(run_cli("converge --config " + cfg + " --out " + (dir / "conv").string()), 0);
    EXPECT_TRUE(fs::exists(dir / "conv" / "convergence_p3.csv"));

    const auto mesh = (dir / "disk.mesh").string();
    EXPECT_EQ(run_cli("mesh gen disk radius=2 level=1 --out " + mesh), 0);
    EXPECT_EQ(read_mesh(mesh).num_cells(), 20u);

    // Newton capped at one iteration: the sweep stops early.
    {
        std::ofstream bad(dir / "trunc.cfg");
        bad << "domain = interval\nlevel = 0\np_max = 8\nmax_newton_iters = 1\n";
    }
    EXPECT_EQ(run_cli("solve --config " + (dir / "trunc.cfg").string() + " --out " + (dir / "trunc").string()), 2);

    EXPECT_EQ(run_cli("solve --config " + (dir / "missing.cfg").string()), 1);
    EXPECT_EQ(run_cli("solve --config " + cfg + " --rescale fixed:abc"), 1);
    EXPECT_EQ(run_cli("mesh gen blob --out " + mesh), 1);
}
