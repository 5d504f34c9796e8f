#include "peig/experiment.hpp"

#include "peig/reference.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

namespace peig {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v)
{
    double x = 0.0;
    const auto s = trim(v);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(x)) {
        throw ConfigError("invalid number for '" + key + "': '" + v + "'");
    }
    return x;
}

int to_int(const std::string& key, const std::string& v)
{
    int x = 0;
    const auto s = trim(v);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw ConfigError("invalid integer for '" + key + "': '" + v + "'");
    }
    return x;
}

bool to_bool(const std::string& key, const std::string& v)
{
    const auto s = trim(v);
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    throw ConfigError("invalid boolean for '" + key + "': '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    std::string item;
    std::istringstream in(v);
    while (std::getline(in, item, ',')) {
        if (!trim(item).empty()) {
            out.push_back(to_double(key, item));
        }
    }
    return out;
}

DomainDescriptor default_domain(const std::string& name)
{
    if (name == "interval") {
        return {DomainKind::interval, -1.0, 1.0};
    }
    if (name == "square") {
        return {DomainKind::square, std::numbers::sqrt2, 0.0};
    }
    if (name == "disk") {
        return {DomainKind::disk, 1.0, 0.0};
    }
    if (name == "hemisphere") {
        return {DomainKind::hemisphere, 2.0 / std::numbers::pi, 0.0}; // pole at geodesic distance 1
    }
    if (name == "half_torus") {
        return {DomainKind::half_torus, 2.0, 1.0};
    }
    throw ConfigError("unknown domain '" + name + "'");
}

DomainDescriptor& need_domain(ExperimentSpec& spec, const std::string& key, std::initializer_list<DomainKind> kinds)
{
    if (!spec.domain) {
        throw ConfigError("'" + key + "' given without a domain");
    }
    if (std::find(kinds.begin(), kinds.end(), spec.domain->kind) == kinds.end()) {
        throw ConfigError("'" + key + "' does not apply to this domain");
    }
    return *spec.domain;
}

std::string fmt(double x)
{
    if (!std::isfinite(x)) {
        return "";
    }
    std::ostringstream s;
    s << std::setprecision(9) << x;
    return s.str();
}

double rate(double coarse, double fine)
{
    if (!(coarse > 0.0) || !(fine > 0.0)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return std::log2(coarse / fine);
}

const EigenResult* find_p(const ContinuationResult& c, double p)
{
    for (const auto& r : c.results) {
        if (std::abs(r.p - p) < 1e-9) {
            return &r;
        }
    }
    return nullptr;
}

SolverConfig study_config(const ExperimentSpec& spec)
{
    SolverConfig cfg = spec.solver;
    cfg.p_max = *std::max_element(spec.study_p.begin(), spec.study_p.end());
    return cfg;
}

ContinuationOptions study_options(const ExperimentSpec& spec)
{
    ContinuationOptions opts;
    opts.rescale = spec.rescale;
    opts.fixed_alpha = spec.fixed_alpha;
    opts.checkpoints = spec.study_p;
    return opts;
}

} // namespace

void ExperimentSpec::validate() const
{
    if (domain.has_value() == !mesh_file.empty()) {
        throw ConfigError("exactly one of 'domain' and 'mesh' must be given");
    }
    if (level < 0 || level_min < 0 || level_max < level_min) {
        throw ConfigError("refinement levels must satisfy 0 <= level_min <= level_max and level >= 0");
    }
    if (interval_base_cells < 2) {
        throw ConfigError("base_cells must be at least 2");
    }
    if (study_p.empty()) {
        throw ConfigError("study_p must not be empty");
    }
    for (double p : study_p) {
        if (!(p >= 2.0)) {
            throw ConfigError("study_p values must be at least 2");
        }
    }
    if (rescale == RescaleMode::fixed && !(fixed_alpha > 0.0)) {
        throw ConfigError("fixed rescaling needs a positive alpha");
    }
    try {
        solver.validate();
    } catch (const SolverError& e) {
        throw ConfigError(e.what());
    }
}

void apply_rescale(ExperimentSpec& spec, const std::string& mode)
{
    const auto m = trim(mode);
    if (m == "off") {
        spec.rescale = RescaleMode::off;
    } else if (m == "adaptive") {
        spec.rescale = RescaleMode::adaptive;
    } else if (m.rfind("fixed:", 0) == 0) {
        spec.rescale = RescaleMode::fixed;
        spec.fixed_alpha = to_double("rescale", m.substr(6));
        if (!(spec.fixed_alpha > 0.0)) {
            throw ConfigError("fixed rescaling needs a positive alpha");
        }
    } else {
        throw ConfigError("rescale must be off, adaptive or fixed:<alpha>, got '" + mode + "'");
    }
}

void apply_setting(ExperimentSpec& spec, const std::string& key_in, const std::string& value_in)
{
    const auto key = trim(key_in);
    const auto value = trim(value_in);
    auto& s = spec.solver;
    if (key == "domain") {
        spec.domain = default_domain(value);
        spec.mesh_file.clear();
    } else if (key == "mesh") {
        spec.mesh_file = value;
        spec.domain.reset();
    } else if (key == "a") {
        need_domain(spec, key, {DomainKind::interval}).param0 = to_double(key, value);
    } else if (key == "b") {
        need_domain(spec, key, {DomainKind::interval}).param1 = to_double(key, value);
    } else if (key == "c") {
        need_domain(spec, key, {DomainKind::square}).param0 = to_double(key, value);
    } else if (key == "radius") {
        need_domain(spec, key, {DomainKind::disk, DomainKind::hemisphere}).param0 = to_double(key, value);
    } else if (key == "major_radius") {
        need_domain(spec, key, {DomainKind::half_torus}).param0 = to_double(key, value);
    } else if (key == "tube_radius") {
        need_domain(spec, key, {DomainKind::half_torus}).param1 = to_double(key, value);
    } else if (key == "level") {
        spec.level = to_int(key, value);
    } else if (key == "levels") {
        const auto colon = value.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("levels must be written as <min>:<max>");
        }
        spec.level_min = to_int(key, value.substr(0, colon));
        spec.level_max = to_int(key, value.substr(colon + 1));
    } else if (key == "base_cells") {
        spec.interval_base_cells = to_int(key, value);
    } else if (key == "p_max") {
        s.p_max = to_double(key, value);
    } else if (key == "delta_p") {
        s.delta_p = to_double(key, value);
        s.min_delta_p = std::min(s.min_delta_p, s.delta_p);
    } else if (key == "min_delta_p") {
        s.min_delta_p = to_double(key, value);
    } else if (key == "eta") {
        s.eta = to_double(key, value);
    } else if (key == "tol_newton") {
        s.tol_newton = to_double(key, value);
    } else if (key == "tol_cg") {
        s.tol_cg = to_double(key, value);
    } else if (key == "c1") {
        s.c1 = to_double(key, value);
    } else if (key == "tau_minus") {
        s.tau_minus = to_double(key, value);
    } else if (key == "tau_plus") {
        s.tau_plus = to_double(key, value);
    } else if (key == "max_newton_iters") {
        s.max_newton_iters = to_int(key, value);
    } else if (key == "cg_max_iter") {
        s.cg_max_iter = to_int(key, value);
    } else if (key == "preconditioner") {
        if (value == "ssor") {
            s.precond.kind = PreconditionerKind::ssor;
        } else if (value == "jacobi") {
            s.precond.kind = PreconditionerKind::jacobi;
        } else if (value == "none") {
            s.precond.kind = PreconditionerKind::none;
        } else {
            throw ConfigError("preconditioner must be ssor, jacobi or none");
        }
    } else if (key == "omega") {
        s.precond.omega = to_double(key, value);
    } else if (key == "quad_points") {
        s.quad_points = to_int(key, value);
    } else if (key == "quad_points_high_p") {
        s.quad_points_high_p = to_int(key, value);
    } else if (key == "high_p_threshold") {
        s.high_p_threshold = to_double(key, value);
    } else if (key == "high_p_in_assembly") {
        s.high_p_in_assembly = to_bool(key, value);
    } else if (key == "rescale") {
        apply_rescale(spec, value);
    } else if (key == "study_p") {
        spec.study_p = to_list(key, value);
    } else if (key == "export_p") {
        spec.export_p = to_list(key, value);
    } else if (key == "out") {
        spec.out_dir = value;
    } else {
        throw ConfigError("unknown key '" + key + "'");
    }
}

ExperimentSpec parse_experiment(const std::string& text)
{
    // Domain keys are applied first so parameter keys may appear in any order.
    struct Entry {
        std::string key;
        std::string value;
        int line;
    };
    std::vector<Entry> entries;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        if (trim(line).empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        entries.push_back({trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no});
    }
    if (std::count_if(entries.begin(), entries.end(),
                      [](const auto& e) { return e.key == "domain" || e.key == "mesh"; }) > 1) {
        throw ConfigError("config must set exactly one of 'domain' or 'mesh'");
    }
    ExperimentSpec spec;
    std::stable_partition(entries.begin(), entries.end(),
                          [](const auto& e) { return e.key == "domain" || e.key == "mesh"; });
    for (const auto& e : entries) {
        try {
            apply_setting(spec, e.key, e.value);
        } catch (const ConfigError& err) {
            throw ConfigError("config line " + std::to_string(e.line) + ": " + err.what());
        }
    }
    spec.validate();
    return spec;
}

ExperimentSpec load_experiment(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment(ss.str());
}

Mesh experiment_mesh(const ExperimentSpec& spec, int level)
{
    if (spec.domain) {
        return build_domain_mesh(*spec.domain, level, spec.interval_base_cells);
    }
    return read_mesh(spec.mesh_file);
}

std::vector<ConvergenceTable> run_convergence_study(const ExperimentSpec& spec)
{
    spec.validate();
    if (!spec.domain) {
        throw ConfigError("a convergence study needs a generated domain");
    }
    const auto& dom = *spec.domain;
    const auto hierarchy = build_hierarchy(dom, spec.level_min, spec.level_max, spec.interval_base_cells);
    const auto cfg = study_config(spec);
    const auto opts = study_options(spec);

    std::vector<ContinuationResult> sweeps;
    std::vector<std::shared_ptr<const Mesh>> meshes;
    for (const auto& level : hierarchy.levels) {
        meshes.push_back(std::make_shared<const Mesh>(level));
        sweeps.push_back(run_continuation(meshes.back(), cfg, opts));
    }

    const bool exact = dom.kind == DomainKind::interval;
    std::vector<ConvergenceTable> tables;
    for (double p : spec.study_p) {
        ConvergenceTable t;
        t.p = p;
        t.exact_reference = exact;
        const std::size_t n_rows = exact ? meshes.size() : meshes.size() - 1;
        const EigenResult* ref = nullptr;
        std::unique_ptr<FeSpace> ref_space;
        if (exact) {
            t.reference_lambda = exact_1d_eigenvalue(p, dom.param0, dom.param1);
        } else {
            ref = find_p(sweeps.back(), p);
            t.reference_cells = meshes.back()->num_cells();
            if (ref == nullptr) {
                throw SolverError("reference solve did not reach p = " + format_p(p) + ": " + sweeps.back().reason);
            }
            t.reference_lambda = ref->lambda_original;
            ref_space = std::make_unique<FeSpace>(meshes.back(), 3);
        }
        for (std::size_t k = 0; k < n_rows; ++k) {
            ConvergenceRow row;
            row.cells = meshes[k]->num_cells();
            const EigenResult* r = find_p(sweeps[k], p);
            if (r == nullptr) {
                row.ok = false;
                row.failure = sweeps[k].reason;
                row.l2_error = row.lambda_rel_error = row.lambda = std::numeric_limits<double>::quiet_NaN();
            } else {
                row.lambda = r->lambda_original;
                row.lambda_rel_error = std::abs(row.lambda - t.reference_lambda) / t.reference_lambda;
                if (exact) {
                    FeSpace sp(meshes[k], 5);
                    std::vector<double> xs;
                    for (const auto& x : quadrature_positions(sp)) {
                        xs.push_back(x.x());
                    }
                    const auto u = exact_1d_eigenfunction(p, dom.param0, dom.param1, xs);
                    row.l2_error = l2_error_at_qps(sp, r->u, u);
                } else {
                    std::vector<double> v = r->u.coeffs;
                    for (std::size_t j = k; j + 1 < meshes.size(); ++j) {
                        v = prolongate(hierarchy.parents[j], v);
                    }
                    row.l2_error = l2_distance(*ref_space, FeFunction(std::move(v)), ref->u);
                }
            }
            row.l2_rate = row.lambda_rate = std::numeric_limits<double>::quiet_NaN();
            if (!t.rows.empty()) {
                row.l2_rate = rate(t.rows.back().l2_error, row.l2_error);
                row.lambda_rate = rate(t.rows.back().lambda_rel_error, row.lambda_rel_error);
            }
            t.rows.push_back(row);
        }
        tables.push_back(std::move(t));
    }
    return tables;
}

SweepResult run_p_sweep(const ExperimentSpec& spec, const std::function<void(const EigenResult&)>& observer)
{
    spec.validate();
    SweepResult out;
    out.mesh = std::make_shared<const Mesh>(experiment_mesh(spec, spec.level));
    ContinuationOptions opts;
    opts.rescale = spec.rescale;
    opts.fixed_alpha = spec.fixed_alpha;
    opts.checkpoints = spec.export_p;
    opts.observer = observer;
    out.continuation = run_continuation(out.mesh, spec.solver, opts);
    return out;
}

std::string format_convergence_csv(const ConvergenceTable& table)
{
    std::ostringstream s;
    s << "cells,L2_error,L2_rate,lambda_rel_error,lambda_rate,lambda\n";
    for (const auto& r : table.rows) {
        s << r.cells << ',' << fmt(r.l2_error) << ',' << fmt(r.l2_rate) << ',' << fmt(r.lambda_rel_error) << ','
          << fmt(r.lambda_rate) << ',' << fmt(r.lambda) << '\n';
    }
    return s.str();
}

std::string format_sweep_csv(const ContinuationResult& sweep)
{
    std::ostringstream s;
    s << "p,lambda_working,alpha,lambda_original,lambda_root,p_lambda_root,newton_iters\n";
    for (const auto& r : sweep.results) {
        const double root = r.lambda_root();
        s << fmt(r.p) << ',' << fmt(r.lambda) << ',' << fmt(r.alpha) << ',' << fmt(r.lambda_original) << ','
          << fmt(root) << ',' << fmt(r.p * root) << ',' << r.newton_iters << '\n';
    }
    return s.str();
}

void export_eigenfunction(const EigenResult& result, const Mesh& mesh, const std::optional<DomainDescriptor>& domain,
                          const std::filesystem::path& path)
{
    if (result.u.size() != mesh.num_vertices()) {
        throw ConfigError("eigenfunction does not match the mesh");
    }
    const auto nv = mesh.num_vertices();
    std::vector<double> limit;
    if (domain && domain->kind != DomainKind::square) {
        limit.resize(nv);
        for (std::size_t i = 0; i < nv; ++i) {
            limit[i] = limit_distance_function(*domain, mesh.vertex(i));
        }
    }
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write " + path.string());
    }
    out << std::setprecision(9);
    const int npc = mesh.nodes_per_cell();
    if (npc == 2) {
        out << (limit.empty() ? "x u\n" : "x u u_inf diff\n");
        std::vector<std::size_t> order(nv);
        for (std::size_t i = 0; i < nv; ++i) {
            order[i] = i;
        }
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return mesh.vertex(a).x() < mesh.vertex(b).x(); });
        for (auto i : order) {
            out << mesh.vertex(i).x() << ' ' << result.u.coeffs[i];
            if (!limit.empty()) {
                out << ' ' << limit[i] << ' ' << result.u.coeffs[i] - limit[i];
            }
            out << '\n';
        }
        if (!out) {
            throw ConfigError("failed writing " + path.string());
        }
        return;
    }
    out << "# vtk DataFile Version 3.0\n";
    out << "p-Laplace eigenfunction p=" << format_p(result.p) << " lambda=" << result.lambda_original << "\n";
    out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << nv << " double\n";
    for (const auto& x : mesh.vertices()) {
        out << x.x() << ' ' << x.y() << ' ' << x.z() << '\n';
    }
    out << "CELLS " << mesh.num_cells() << ' ' << 5 * mesh.num_cells() << '\n';
    for (const auto& c : mesh.cells()) {
        out << "4 " << c[0] << ' ' << c[1] << ' ' << c[2] << ' ' << c[3] << '\n';
    }
    out << "CELL_TYPES " << mesh.num_cells() << '\n';
    for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
        out << "9\n"; // VTK_QUAD
    }
    out << "POINT_DATA " << nv << '\n';
    auto field = [&](const char* name, auto value) {
        out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (std::size_t i = 0; i < nv; ++i) {
            out << value(i) << '\n';
        }
    };
    field("u", [&](std::size_t i) { return result.u.coeffs[i]; });
    if (!limit.empty()) {
        field("u_inf", [&](std::size_t i) { return limit[i]; });
        field("diff", [&](std::size_t i) { return result.u.coeffs[i] - limit[i]; });
    }
    if (!out) {
        throw ConfigError("failed writing " + path.string());
    }
}

std::string format_p(double p)
{
    std::ostringstream s;
    s << std::setprecision(9) << p;
    return s.str();
}

} // namespace peig
