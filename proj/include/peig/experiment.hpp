#pragma once

#include "peig/eigensolver.hpp"
#include "peig/mesh.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace peig {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One experiment, read from a flat `key = value` file. See README for keys.
struct ExperimentSpec {
    std::optional<DomainDescriptor> domain; // unset when `mesh_file` is used
    std::filesystem::path mesh_file;
    int level = 4;     // mesh used by `solve`
    int level_min = 0; // levels of a convergence study; the finest is the
    int level_max = 5; // self-convergence reference outside 1D
    int interval_base_cells = 64;
    SolverConfig solver{};
    RescaleMode rescale = RescaleMode::off;
    double fixed_alpha = 1.0;
    std::vector<double> study_p{3.0};
    std::vector<double> export_p;
    std::filesystem::path out_dir = ".";

    /// Throws ConfigError on inconsistent settings.
    void validate() const;
};

ExperimentSpec parse_experiment(const std::string& text);
ExperimentSpec load_experiment(const std::filesystem::path& path);
/// Applies a single `key = value` setting; throws ConfigError on unknown keys or bad values.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);
/// Parses "off", "adaptive" or "fixed:<alpha>".
void apply_rescale(ExperimentSpec& spec, const std::string& mode);

/// Mesh at `level` for the spec's domain, or the mesh file.
Mesh experiment_mesh(const ExperimentSpec& spec, int level);

struct ConvergenceRow {
    std::size_t cells = 0;
    double l2_error = 0.0;
    double l2_rate = 0.0; // NaN on the first row
    double lambda_rel_error = 0.0;
    double lambda_rate = 0.0;
    double lambda = 0.0;
    bool ok = true;
    std::string failure;
};

struct ConvergenceTable {
    double p = 0.0;
    bool exact_reference = false;
    double reference_lambda = 0.0;
    std::size_t reference_cells = 0;
    std::vector<ConvergenceRow> rows;
};

/// Errors against the exact eigenpair in 1D, otherwise against the finest
/// level (coarse solutions prolongated through the nested refinements).
std::vector<ConvergenceTable> run_convergence_study(const ExperimentSpec& spec);

/// The sweep plus a flag telling whether it stopped early.
struct SweepResult {
    ContinuationResult continuation;
    std::shared_ptr<const Mesh> mesh; // unscaled mesh
};

SweepResult run_p_sweep(const ExperimentSpec& spec,
                        const std::function<void(const EigenResult&)>& observer = {});

std::string format_convergence_csv(const ConvergenceTable& table);
std::string format_sweep_csv(const ContinuationResult& sweep);

/// Writes a legacy VTK file (quad meshes) or an ASCII table (1D) with u and,
/// when a limit function is known for `domain`, u_inf and diff = u - u_inf.
/// The result is shown on the unscaled mesh.
void export_eigenfunction(const EigenResult& result, const Mesh& mesh, const std::optional<DomainDescriptor>& domain,
                          const std::filesystem::path& path);

/// "3", "2.5", "10.125": p formatted for file names.
std::string format_p(double p);

} // namespace peig
