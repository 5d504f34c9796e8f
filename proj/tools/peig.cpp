#include "peig/experiment.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kPartial = 2;

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path);
    out << text;
    if (!out) {
        throw peig::ConfigError("cannot write " + path.string());
    }
}

bool wanted(const std::vector<double>& ps, double p)
{
    for (double q : ps) {
        if (std::abs(q - p) < 1e-9) {
            return true;
        }
    }
    return false;
}

int cmd_solve(peig::ExperimentSpec spec)
{
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);
    const auto sweep = peig::run_p_sweep(spec, [](const peig::EigenResult& r) {
        std::fprintf(stderr, "p = %-10g lambda = %.10g  alpha = %.6g  newton = %d\n", r.p, r.lambda_original, r.alpha,
                     r.newton_iters);
    });
    const auto& c = sweep.continuation;
    write_text(spec.out_dir / "sweep.csv", peig::format_sweep_csv(c));
    for (std::size_t i = 0; i < c.results.size(); ++i) {
        const auto& r = c.results[i];
        if (wanted(spec.export_p, r.p) || i + 1 == c.results.size()) {
            // 1D results go to a plain table instead of a VTK file.
            const char* ext = sweep.mesh->nodes_per_cell() == 2 ? ".txt" : ".vtk";
            peig::export_eigenfunction(r, *sweep.mesh, spec.domain,
                                       spec.out_dir / ("u_p" + peig::format_p(r.p) + ext));
        }
    }
    if (c.truncated) {
        std::cerr << "sweep truncated: " << c.reason << "\n";
        return kPartial;
    }
    return kOk;
}

int cmd_converge(peig::ExperimentSpec spec)
{
    spec.validate();
    std::filesystem::create_directories(spec.out_dir);
    const auto tables = peig::run_convergence_study(spec);
    int code = kOk;
    for (const auto& t : tables) {
        const auto csv = peig::format_convergence_csv(t);
        write_text(spec.out_dir / ("convergence_p" + peig::format_p(t.p) + ".csv"), csv);
        std::cout << "p = " << peig::format_p(t.p) << (t.exact_reference ? " (exact reference)" : " (finest level reference)")
                  << "\n"
                  << csv;
        for (const auto& row : t.rows) {
            if (!row.ok) {
                std::cerr << row.cells << " cells: " << row.failure << "\n";
                code = kPartial;
            }
        }
    }
    return code;
}

int cmd_mesh_gen(const std::string& generator, const std::vector<std::string>& params, const std::string& out)
{
    peig::ExperimentSpec spec;
    peig::apply_setting(spec, "domain", generator);
    for (const auto& item : params) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw peig::ConfigError("mesh parameter '" + item + "' must be key=value");
        }
        peig::apply_setting(spec, item.substr(0, eq), item.substr(eq + 1));
    }
    const auto mesh = peig::experiment_mesh(spec, spec.level);
    peig::write_mesh(mesh, out);
    std::cout << "wrote " << out << ": " << mesh.num_vertices() << " vertices, " << mesh.num_cells() << " cells\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"First Dirichlet p-Laplace eigenpair by Newton inverse-power iteration"};
    app.require_subcommand(1);

    std::string config;
    std::optional<double> p_max;
    std::optional<double> delta_p;
    std::string rescale;
    std::string out_dir;

    auto* solve = app.add_subcommand("solve", "Continuation in p, writing sweep.csv and u_p<p>.vtk");
    solve->add_option("--config", config, "Experiment file")->required()->check(CLI::ExistingFile);
    solve->add_option("--p-max", p_max, "Final p");
    solve->add_option("--delta-p", delta_p, "Continuation step");
    solve->add_option("--rescale", rescale, "adaptive, off or fixed:<alpha>");
    solve->add_option("--out", out_dir, "Output directory");

    auto* converge = app.add_subcommand("converge", "Mesh convergence study, writing convergence_p<p>.csv");
    converge->add_option("--config", config, "Experiment file")->required()->check(CLI::ExistingFile);
    converge->add_option("--out", out_dir, "Output directory");

    std::string generator;
    std::vector<std::string> gen_params;
    std::string mesh_out;
    auto* mesh = app.add_subcommand("mesh", "Mesh utilities");
    mesh->require_subcommand(1);
    auto* gen = mesh->add_subcommand("gen", "Generate a mesh: interval, square, disk, hemisphere or half_torus");
    gen->add_option("generator", generator, "Generator name")->required();
    gen->add_option("params", gen_params, "key=value settings, e.g. level=3 radius=0.5");
    gen->add_option("--out", mesh_out, "Mesh file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kFailure;
    }

    try {
        if (gen->parsed()) {
            return cmd_mesh_gen(generator, gen_params, mesh_out);
        }
        auto spec = peig::load_experiment(config);
        if (!out_dir.empty()) {
            spec.out_dir = out_dir;
        }
        if (converge->parsed()) {
            return cmd_converge(spec);
        }
        if (p_max) {
            spec.solver.p_max = *p_max;
        }
        if (delta_p) {
            spec.solver.delta_p = *delta_p;
            spec.solver.min_delta_p = std::min(spec.solver.min_delta_p, *delta_p);
        }
        if (!rescale.empty()) {
            peig::apply_rescale(spec, rescale);
        }
        return cmd_solve(spec);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
}
