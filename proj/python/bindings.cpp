#include "peig/eigensolver.hpp"
#include "peig/experiment.hpp"
#include "peig/fem.hpp"
#include "peig/reference.hpp"

#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace peig;

namespace {

py::array_t<double> vertex_array(const Mesh& m)
{
    py::array_t<double> out({static_cast<py::ssize_t>(m.num_vertices()), static_cast<py::ssize_t>(m.dim_embed())});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < m.num_vertices(); ++i) {
        for (int d = 0; d < m.dim_embed(); ++d) {
            a(i, d) = m.vertex(i)[d];
        }
    }
    return out;
}

py::array_t<std::uint32_t> cell_array(const Mesh& m)
{
    const int npc = m.nodes_per_cell();
    py::array_t<std::uint32_t> out({static_cast<py::ssize_t>(m.num_cells()), static_cast<py::ssize_t>(npc)});
    auto a = out.mutable_unchecked<2>();
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        for (int k = 0; k < npc; ++k) {
            a(c, k) = m.cell(c)[k];
        }
    }
    return out;
}

Mesh mesh_from_arrays(py::array_t<double, py::array::c_style | py::array::forcecast> vertices,
                      py::array_t<std::uint32_t, py::array::c_style | py::array::forcecast> cells,
                      std::vector<std::uint32_t> boundary)
{
    if (vertices.ndim() != 2 || cells.ndim() != 2) {
        throw MeshError("vertices and cells must be 2D arrays");
    }
    const auto dim = static_cast<int>(vertices.shape(1));
    const auto npc = static_cast<int>(cells.shape(1));
    auto v = vertices.unchecked<2>();
    auto c = cells.unchecked<2>();
    std::vector<Point> pts(v.shape(0), Point::Zero());
    for (py::ssize_t i = 0; i < v.shape(0); ++i) {
        for (int d = 0; d < std::min(dim, 3); ++d) {
            pts[i][d] = v(i, d);
        }
    }
    std::vector<Cell> cs(c.shape(0), Cell{});
    for (py::ssize_t i = 0; i < c.shape(0); ++i) {
        for (int k = 0; k < std::min(npc, 4); ++k) {
            cs[i][k] = c(i, k);
        }
    }
    return Mesh(dim, npc, std::move(pts), std::move(cs), std::move(boundary));
}

py::array_t<double> coeffs(const FeFunction& f)
{
    py::array_t<double> out(static_cast<py::ssize_t>(f.coeffs.size()));
    std::copy(f.coeffs.begin(), f.coeffs.end(), out.mutable_data());
    return out;
}

std::shared_ptr<const Mesh> share(const Mesh& m)
{
    return std::make_shared<const Mesh>(m);
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "First Dirichlet p-Laplace eigenpairs by Newton inverse-power iteration";

    py::register_exception<MeshError>(m, "MeshError", PyExc_ValueError);
    py::register_exception<FemError>(m, "FemError", PyExc_ValueError);
    py::register_exception<ReferenceError>(m, "ReferenceError", PyExc_ValueError);
    py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<Mesh, std::shared_ptr<Mesh>>(m, "Mesh")
        .def(py::init(&mesh_from_arrays), py::arg("vertices"), py::arg("cells"), py::arg("boundary_nodes"))
        .def_property_readonly("dim_embed", &Mesh::dim_embed)
        .def_property_readonly("nodes_per_cell", &Mesh::nodes_per_cell)
        .def_property_readonly("num_vertices", &Mesh::num_vertices)
        .def_property_readonly("num_cells", &Mesh::num_cells)
        .def_property_readonly("vertices", &vertex_array)
        .def_property_readonly("cells", &cell_array)
        .def_property_readonly("boundary_nodes",
                               [](const Mesh& self) {
                                   const auto b = self.boundary_nodes();
                                   return std::vector<std::uint32_t>(b.begin(), b.end());
                               })
        .def("__repr__", [](const Mesh& self) {
            return "<Mesh " + std::to_string(self.num_vertices()) + " vertices, " + std::to_string(self.num_cells()) +
                   " cells>";
        });

    m.def("build_interval_mesh", &build_interval_mesh, py::arg("a"), py::arg("b"), py::arg("n_cells"));
    m.def("build_square_mesh", &build_square_mesh, py::arg("c"), py::arg("refinements"));
    m.def("build_disk_mesh", &build_disk_mesh, py::arg("radius"), py::arg("refinements"));
    m.def("build_hemisphere_mesh", &build_hemisphere_mesh, py::arg("radius"), py::arg("refinements"));
    m.def("build_half_torus_mesh", &build_half_torus_mesh, py::arg("major_radius"), py::arg("tube_radius"),
          py::arg("refinements"));
    m.def("scale_mesh", &scale_mesh, py::arg("mesh"), py::arg("alpha"));
    m.def("mesh_size", &mesh_size);
    m.def("boundary_graph_distance", &boundary_graph_distance);
    m.def("read_mesh", &read_mesh);
    m.def("write_mesh", &write_mesh);

    m.def("pi_p", &pi_p, py::arg("p"));
    m.def("sin_p", [](double t, double p) { return sin_p(t, p); }, py::arg("t"), py::arg("p"));
    m.def("F_p", &F_p, py::arg("x"), py::arg("p"));
    m.def("exact_1d_eigenvalue", &exact_1d_eigenvalue, py::arg("p"), py::arg("a") = -1.0, py::arg("b") = 1.0);
    m.def(
        "exact_1d_eigenfunction",
        [](double p, double a, double b, std::vector<double> xs) { return exact_1d_eigenfunction(p, a, b, xs); },
        py::arg("p"), py::arg("a"), py::arg("b"), py::arg("xs"));
    m.def("lambda_root_expansion", &lambda_root_expansion, py::arg("p"), py::arg("a") = -1.0, py::arg("b") = 1.0);

    m.def(
        "rayleigh_quotient",
        [](const Mesh& mesh, std::vector<double> u, double p, int quad_points) {
            FeSpace s(share(mesh), quad_points);
            return rayleigh_quotient(s, FeFunction(std::move(u)), p);
        },
        py::arg("mesh"), py::arg("u"), py::arg("p"), py::arg("quad_points") = 2);

    py::enum_<PreconditionerKind>(m, "PreconditionerKind")
        .value("none", PreconditionerKind::none)
        .value("jacobi", PreconditionerKind::jacobi)
        .value("ssor", PreconditionerKind::ssor);

    py::enum_<RescaleMode>(m, "RescaleMode")
        .value("off", RescaleMode::off)
        .value("fixed", RescaleMode::fixed)
        .value("adaptive", RescaleMode::adaptive);

    py::class_<SolverConfig>(m, "SolverConfig")
        .def(py::init<>())
        .def_readwrite("eta", &SolverConfig::eta)
        .def_readwrite("tol_newton", &SolverConfig::tol_newton)
        .def_readwrite("tol_cg", &SolverConfig::tol_cg)
        .def_readwrite("c1", &SolverConfig::c1)
        .def_readwrite("delta_p", &SolverConfig::delta_p)
        .def_readwrite("min_delta_p", &SolverConfig::min_delta_p)
        .def_readwrite("p_max", &SolverConfig::p_max)
        .def_readwrite("tau_minus", &SolverConfig::tau_minus)
        .def_readwrite("tau_plus", &SolverConfig::tau_plus)
        .def_readwrite("max_newton_iters", &SolverConfig::max_newton_iters)
        .def_readwrite("cg_max_iter", &SolverConfig::cg_max_iter)
        .def_property(
            "preconditioner", [](const SolverConfig& c) { return c.precond.kind; },
            [](SolverConfig& c, PreconditionerKind k) { c.precond.kind = k; })
        .def_property(
            "omega", [](const SolverConfig& c) { return c.precond.omega; },
            [](SolverConfig& c, double w) { c.precond.omega = w; })
        .def_readwrite("quad_points", &SolverConfig::quad_points)
        .def_readwrite("quad_points_high_p", &SolverConfig::quad_points_high_p)
        .def_readwrite("high_p_threshold", &SolverConfig::high_p_threshold)
        .def_readwrite("high_p_in_assembly", &SolverConfig::high_p_in_assembly)
        .def("validate", &SolverConfig::validate);

    py::class_<EigenResult>(m, "EigenResult")
        .def_readonly("p", &EigenResult::p)
        .def_readonly("lambda_", &EigenResult::lambda)
        .def_property_readonly("u", [](const EigenResult& r) { return coeffs(r.u); })
        .def_readonly("alpha", &EigenResult::alpha)
        .def_readonly("lambda_original", &EigenResult::lambda_original)
        .def_readonly("newton_iters", &EigenResult::newton_iters)
        .def_readonly("converged", &EigenResult::converged)
        .def_readonly("failure", &EigenResult::failure)
        .def_readonly("rayleigh_history", &EigenResult::rayleigh_history)
        .def_property_readonly("lambda_root", &EigenResult::lambda_root);

    py::class_<ContinuationResult>(m, "ContinuationResult")
        .def_readonly("results", &ContinuationResult::results)
        .def_readonly("truncated", &ContinuationResult::truncated)
        .def_readonly("reason", &ContinuationResult::reason);

    m.def(
        "run_continuation",
        [](const Mesh& mesh, const SolverConfig& cfg, RescaleMode rescale, double fixed_alpha,
           std::vector<double> checkpoints) {
            ContinuationOptions opts;
            opts.rescale = rescale;
            opts.fixed_alpha = fixed_alpha;
            opts.checkpoints = std::move(checkpoints);
            py::gil_scoped_release release;
            return run_continuation(share(mesh), cfg, opts);
        },
        py::arg("mesh"), py::arg("config"), py::arg("rescale") = RescaleMode::off, py::arg("fixed_alpha") = 1.0,
        py::arg("checkpoints") = std::vector<double>{});

    m.def(
        "newton_solve_fixed_p",
        [](const Mesh& mesh, double p, const EigenResult& init, const SolverConfig& cfg) {
            py::gil_scoped_release release;
            return newton_solve_fixed_p(share(mesh), p, init, cfg);
        },
        py::arg("mesh"), py::arg("p"), py::arg("init"), py::arg("config"));

    py::class_<ConvergenceRow>(m, "ConvergenceRow")
        .def_readonly("cells", &ConvergenceRow::cells)
        .def_readonly("l2_error", &ConvergenceRow::l2_error)
        .def_readonly("l2_rate", &ConvergenceRow::l2_rate)
        .def_readonly("lambda_rel_error", &ConvergenceRow::lambda_rel_error)
        .def_readonly("lambda_rate", &ConvergenceRow::lambda_rate)
        .def_readonly("lambda_", &ConvergenceRow::lambda)
        .def_readonly("ok", &ConvergenceRow::ok)
        .def_readonly("failure", &ConvergenceRow::failure);

    py::class_<ConvergenceTable>(m, "ConvergenceTable")
        .def_readonly("p", &ConvergenceTable::p)
        .def_readonly("exact_reference", &ConvergenceTable::exact_reference)
        .def_readonly("reference_lambda", &ConvergenceTable::reference_lambda)
        .def_readonly("reference_cells", &ConvergenceTable::reference_cells)
        .def_readonly("rows", &ConvergenceTable::rows)
        .def("to_csv", &format_convergence_csv);

    py::class_<ExperimentSpec>(m, "Experiment")
        .def_static("parse", &parse_experiment, py::arg("text"))
        .def_static("load", &load_experiment, py::arg("path"))
        .def("set", &apply_setting, py::arg("key"), py::arg("value"))
        .def_readwrite("config", &ExperimentSpec::solver)
        .def("mesh", &experiment_mesh, py::arg("level"))
        .def(
            "sweep",
            [](const ExperimentSpec& spec) {
                py::gil_scoped_release release;
                return run_p_sweep(spec).continuation;
            })
        .def("convergence_study", [](const ExperimentSpec& spec) {
            py::gil_scoped_release release;
            return run_convergence_study(spec);
        });
}
