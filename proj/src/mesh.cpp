#include "peig/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace peig {

namespace {

// 2x2 Gauss points on [-1, 1]^2, used to check the bilinear map is non-degenerate.
constexpr double kGauss2 = 0.57735026918962576451;

double bilinear_area_element(const Mesh& m, const Cell& c, double xi, double eta)
{
    Eigen::Vector3d dxi = Eigen::Vector3d::Zero();
    Eigen::Vector3d deta = Eigen::Vector3d::Zero();
    const double gx[4] = {-(1 - eta), (1 - eta), (1 + eta), -(1 + eta)};
    const double ge[4] = {-(1 - xi), -(1 + xi), (1 + xi), (1 - xi)};
    for (int a = 0; a < 4; ++a) {
        dxi += 0.25 * gx[a] * m.vertex(c[a]);
        deta += 0.25 * ge[a] * m.vertex(c[a]);
    }
    return dxi.cross(deta).norm();
}

} // namespace

Mesh::Mesh(int dim_embed, int nodes_per_cell, std::vector<Point> vertices, std::vector<Cell> cells,
           std::vector<std::uint32_t> boundary_nodes)
    : dim_embed_(dim_embed),
      nodes_per_cell_(nodes_per_cell),
      vertices_(std::move(vertices)),
      cells_(std::move(cells)),
      boundary_nodes_(std::move(boundary_nodes))
{
    if (dim_embed_ < 1 || dim_embed_ > 3) {
        throw MeshError("embedding dimension must be 1, 2 or 3");
    }
    if (nodes_per_cell_ != 2 && nodes_per_cell_ != 4) {
        throw MeshError("cells must be segments (2 nodes) or quadrilaterals (4 nodes)");
    }
    if (nodes_per_cell_ == 4 && dim_embed_ < 2) {
        throw MeshError("quadrilateral cells need an embedding dimension of at least 2");
    }
    if (cells_.empty()) {
        throw MeshError("mesh has no cells");
    }
    for (std::size_t i = 0; i < vertices_.size(); ++i) {
        const Point& x = vertices_[i];
        if (!x.allFinite()) {
            throw MeshError("vertex " + std::to_string(i) + " has a non-finite coordinate");
        }
        for (int d = dim_embed_; d < 3; ++d) {
            if (x[d] != 0.0) {
                throw MeshError("vertex " + std::to_string(i) + " has a coordinate beyond the embedding dimension");
            }
        }
    }

    const auto nv = vertices_.size();
    for (std::size_t c = 0; c < cells_.size(); ++c) {
        Cell& cell = cells_[c];
        for (int a = nodes_per_cell_; a < 4; ++a) {
            cell[a] = 0;
        }
        for (int a = 0; a < nodes_per_cell_; ++a) {
            if (cell[a] >= nv) {
                throw MeshError("cell " + std::to_string(c) + " references missing vertex " + std::to_string(cell[a]));
            }
            for (int b = 0; b < a; ++b) {
                if (cell[a] == cell[b]) {
                    throw MeshError("cell " + std::to_string(c) + " is degenerate (repeated vertex)");
                }
            }
        }
        if (nodes_per_cell_ == 2) {
            if ((vertices_[cell[0]] - vertices_[cell[1]]).norm() <= 0.0) {
                throw MeshError("cell " + std::to_string(c) + " has zero length");
            }
        } else {
            for (double xi : {-kGauss2, kGauss2}) {
                for (double eta : {-kGauss2, kGauss2}) {
                    if (!(bilinear_area_element(*this, cell, xi, eta) > 0.0)) {
                        throw MeshError("cell " + std::to_string(c) + " has a vanishing Jacobian");
                    }
                }
            }
        }
    }

    std::sort(boundary_nodes_.begin(), boundary_nodes_.end());
    boundary_nodes_.erase(std::unique(boundary_nodes_.begin(), boundary_nodes_.end()), boundary_nodes_.end());
    if (boundary_nodes_.empty()) {
        throw MeshError("boundary node set is empty");
    }
    boundary_mask_.assign(nv, 0);
    for (auto b : boundary_nodes_) {
        if (b >= nv) {
            throw MeshError("boundary node " + std::to_string(b) + " is not a vertex");
        }
        boundary_mask_[b] = 1;
    }
}

std::vector<std::array<std::uint32_t, 2>> Mesh::edges() const
{
    std::vector<std::array<std::uint32_t, 2>> out;
    out.reserve(cells_.size() * static_cast<std::size_t>(nodes_per_cell_));
    auto push = [&out](std::uint32_t i, std::uint32_t j) {
        out.push_back(i < j ? std::array{i, j} : std::array{j, i});
    };
    for (const auto& c : cells_) {
        if (nodes_per_cell_ == 2) {
            push(c[0], c[1]);
        } else {
            for (int a = 0; a < 4; ++a) {
                push(c[a], c[(a + 1) % 4]);
            }
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<double> prolongate(const Refinement& r, std::span<const double> coarse)
{
    return prolongate(r.parents, coarse);
}

std::vector<double> prolongate(std::span<const VertexParents> parents, std::span<const double> coarse)
{
    std::vector<double> fine(parents.size());
    for (std::size_t i = 0; i < fine.size(); ++i) {
        const auto& par = parents[i];
        double s = 0.0;
        for (int k = 0; k < par.count; ++k) {
            if (par.ids[k] >= coarse.size()) {
                throw MeshError("prolongation parent index out of range");
            }
            s += coarse[par.ids[k]];
        }
        fine[i] = s / par.count;
    }
    return fine;
}

Mesh scale_mesh(const Mesh& m, double alpha)
{
    if (!std::isfinite(alpha) || !(alpha > 0.0)) {
        throw MeshError("scale factor must be finite and positive");
    }
    std::vector<Point> v(m.vertices().begin(), m.vertices().end());
    for (auto& x : v) {
        x *= alpha;
    }
    return Mesh(m.dim_embed(), m.nodes_per_cell(), std::move(v),
                std::vector<Cell>(m.cells().begin(), m.cells().end()),
                std::vector<std::uint32_t>(m.boundary_nodes().begin(), m.boundary_nodes().end()));
}

double mesh_size(const Mesh& m)
{
    double h = 0.0;
    const int n = m.nodes_per_cell();
    for (const auto& c : m.cells()) {
        for (int a = 0; a < n; ++a) {
            for (int b = a + 1; b < n; ++b) {
                h = std::max(h, (m.vertex(c[a]) - m.vertex(c[b])).norm());
            }
        }
    }
    return h;
}

} // namespace peig
