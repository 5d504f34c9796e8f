#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace peig {

class MeshError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Point = Eigen::Vector3d;

/// Vertex indices of one cell. Segments use the first two slots; quadrilaterals
/// list their vertices counterclockwise with respect to the cell normal.
using Cell = std::array<std::uint32_t, 4>;

/// Discrete domain made of segment cells or bilinear quadrilateral cells.
///
/// Vertex coordinates are stored padded to three components; components beyond
/// `dim_embed()` are zero. A mesh is immutable once constructed and the
/// constructor rejects anything that violates the cell/boundary invariants.
class Mesh {
public:
    Mesh(int dim_embed, int nodes_per_cell, std::vector<Point> vertices, std::vector<Cell> cells,
         std::vector<std::uint32_t> boundary_nodes);

    int dim_embed() const { return dim_embed_; }
    /// 2 for segment meshes, 4 for quadrilateral meshes.
    int nodes_per_cell() const { return nodes_per_cell_; }
    int reference_dim() const { return nodes_per_cell_ == 2 ? 1 : 2; }

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_cells() const { return cells_.size(); }

    std::span<const Point> vertices() const { return vertices_; }
    const Point& vertex(std::size_t i) const { return vertices_[i]; }
    std::span<const Cell> cells() const { return cells_; }
    const Cell& cell(std::size_t c) const { return cells_[c]; }

    /// Sorted, duplicate-free Dirichlet node list.
    std::span<const std::uint32_t> boundary_nodes() const { return boundary_nodes_; }
    bool is_boundary(std::size_t v) const { return boundary_mask_[v] != 0; }

    /// Unique undirected cell edges (i < j), sorted.
    std::vector<std::array<std::uint32_t, 2>> edges() const;

    bool operator==(const Mesh& other) const = default;

private:
    int dim_embed_;
    int nodes_per_cell_;
    std::vector<Point> vertices_;
    std::vector<Cell> cells_;
    std::vector<std::uint32_t> boundary_nodes_;
    std::vector<std::uint8_t> boundary_mask_;
};

/// How each fine vertex of a nested refinement is obtained from coarse
/// vertices: the average of `count` parents. Coarse vertices keep their index
/// and have a single parent (themselves).
struct VertexParents {
    std::array<std::uint32_t, 4> ids{};
    std::uint8_t count = 1;
};

/// A nested refinement step: the fine mesh and the coarse-to-fine nodal map.
struct Refinement {
    Mesh fine;
    std::vector<VertexParents> parents;
};

/// Prolongates nodal values through a refinement by parent averaging. This is
/// exact for (bi)linear interpolation in reference coordinates.
std::vector<double> prolongate(const Refinement& r, std::span<const double> coarse);
std::vector<double> prolongate(std::span<const VertexParents> parents, std::span<const double> coarse);

// Generators. `refinements` counts uniform refinement steps applied to the base
// layout; every quadrilateral step quadrisects each cell.
Mesh build_interval_mesh(double a, double b, int n_cells);
Mesh build_square_mesh(double c, int refinements);
Mesh build_disk_mesh(double radius, int refinements);
Mesh build_hemisphere_mesh(double radius, int refinements);
Mesh build_half_torus_mesh(double major_radius, double tube_radius, int refinements);

/// Successive levels of a generator: levels[0] is the base (or `first_level`
/// refinements), each subsequent entry refines the previous one.
struct MeshHierarchy {
    std::vector<Mesh> levels;
    /// parents[k] maps levels[k] to levels[k + 1].
    std::vector<std::vector<VertexParents>> parents;
};

enum class DomainKind { interval, square, disk, hemisphere, half_torus };

struct DomainDescriptor {
    DomainKind kind = DomainKind::interval;
    // interval: (a, b); square: c; disk/hemisphere: radius; half_torus: (major, tube).
    double param0 = -1.0;
    double param1 = 1.0;
};

/// Refinement level `level` means: interval -> `base_cells * 2^level` cells,
/// other domains -> `level` quadrisection steps of the base layout.
MeshHierarchy build_hierarchy(const DomainDescriptor& domain, int first_level, int last_level,
                              int interval_base_cells = 64);
Mesh build_domain_mesh(const DomainDescriptor& domain, int level, int interval_base_cells = 64);

/// Dilation x -> alpha * x. Connectivity and boundary set are unchanged.
Mesh scale_mesh(const Mesh& m, double alpha);

/// Largest vertex-to-vertex distance within any cell.
double mesh_size(const Mesh& m);

/// Shortest-path distance along cell edges from every vertex to the boundary set.
std::vector<double> boundary_graph_distance(const Mesh& m);

/// Maximum of `boundary_graph_distance`; approximates the inradius.
double approx_max_boundary_distance(const Mesh& m);

Mesh read_mesh(const std::filesystem::path& path);
Mesh parse_mesh(const std::string& text);
void write_mesh(const Mesh& m, const std::filesystem::path& path);
std::string format_mesh(const Mesh& m);

} // namespace peig
