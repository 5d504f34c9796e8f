#include "peig/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>

namespace peig {

namespace {

enum class NewNode { boundary_midpoint, interior_midpoint, cell_center };

using Placement = std::function<Point(const Point& average, NewNode kind)>;

// Uniform nested refinement: segments are bisected, quadrilaterals quadrisected.
// Coarse vertices keep their indices; edge midpoints follow in sorted edge order,
// then cell centers in cell order. Midpoints of edges that carry two boundary
// vertices and belong to a single cell become boundary nodes.
Refinement refine(const Mesh& m, const Placement& place)
{
    const auto nv = static_cast<std::uint32_t>(m.num_vertices());
    const bool quads = m.nodes_per_cell() == 4;

    std::map<std::array<std::uint32_t, 2>, int> edge_use;
    auto key = [](std::uint32_t i, std::uint32_t j) { return i < j ? std::array{i, j} : std::array{j, i}; };
    for (const auto& c : m.cells()) {
        if (quads) {
            for (int a = 0; a < 4; ++a) {
                ++edge_use[key(c[a], c[(a + 1) % 4])];
            }
        } else {
            ++edge_use[key(c[0], c[1])];
        }
    }

    std::vector<Point> verts(m.vertices().begin(), m.vertices().end());
    std::vector<VertexParents> parents(nv);
    for (std::uint32_t i = 0; i < nv; ++i) {
        parents[i].ids[0] = i;
        parents[i].count = 1;
    }
    std::vector<std::uint32_t> boundary(m.boundary_nodes().begin(), m.boundary_nodes().end());

    std::map<std::array<std::uint32_t, 2>, std::uint32_t> midpoint;
    for (const auto& [e, uses] : edge_use) {
        const bool on_boundary = m.is_boundary(e[0]) && m.is_boundary(e[1]) && (uses == 1 || !quads);
        const Point avg = 0.5 * (m.vertex(e[0]) + m.vertex(e[1]));
        const auto id = static_cast<std::uint32_t>(verts.size());
        // A bisected segment between two Dirichlet nodes is still interior in 1D.
        const bool boundary_mid = quads && on_boundary;
        verts.push_back(place(avg, boundary_mid ? NewNode::boundary_midpoint : NewNode::interior_midpoint));
        VertexParents par;
        par.ids = {e[0], e[1], 0, 0};
        par.count = 2;
        parents.push_back(par);
        midpoint[e] = id;
        if (boundary_mid) {
            boundary.push_back(id);
        }
    }

    std::vector<Cell> cells;
    cells.reserve(m.num_cells() * (quads ? 4 : 2));
    for (const auto& c : m.cells()) {
        if (!quads) {
            const auto mid = midpoint.at(key(c[0], c[1]));
            cells.push_back({c[0], mid, 0, 0});
            cells.push_back({mid, c[1], 0, 0});
            continue;
        }
        Point avg = Point::Zero();
        for (int a = 0; a < 4; ++a) {
            avg += 0.25 * m.vertex(c[a]);
        }
        const auto center = static_cast<std::uint32_t>(verts.size());
        verts.push_back(place(avg, NewNode::cell_center));
        VertexParents par;
        par.ids = {c[0], c[1], c[2], c[3]};
        par.count = 4;
        parents.push_back(par);

        const auto m01 = midpoint.at(key(c[0], c[1]));
        const auto m12 = midpoint.at(key(c[1], c[2]));
        const auto m23 = midpoint.at(key(c[2], c[3]));
        const auto m30 = midpoint.at(key(c[3], c[0]));
        cells.push_back({c[0], m01, center, m30});
        cells.push_back({m01, c[1], m12, center});
        cells.push_back({center, m12, c[2], m23});
        cells.push_back({m30, center, m23, c[3]});
    }

    return Refinement{Mesh(m.dim_embed(), m.nodes_per_cell(), std::move(verts), std::move(cells), std::move(boundary)),
                      std::move(parents)};
}

Point keep(const Point& avg, NewNode) { return avg; }

Placement disk_placement(double radius)
{
    return [radius](const Point& avg, NewNode kind) -> Point {
        if (kind == NewNode::boundary_midpoint) {
            return avg * (radius / avg.norm());
        }
        return avg;
    };
}

Placement sphere_placement(double radius)
{
    return [radius](const Point& avg, NewNode kind) -> Point {
        Point p = avg * (radius / avg.norm());
        if (kind == NewNode::boundary_midpoint) {
            p.z() = 0.0;
        }
        return p;
    };
}

Placement torus_placement(double major, double tube)
{
    return [major, tube](const Point& avg, NewNode kind) -> Point {
        const double theta = std::atan2(avg.y(), avg.x());
        const Point center(major * std::cos(theta), major * std::sin(theta), 0.0);
        Point p = center + (avg - center) * (tube / (avg - center).norm());
        if (kind == NewNode::boundary_midpoint) {
            p.z() = 0.0;
        }
        return p;
    };
}

// Center square plus four annular quadrilaterals. Outer vertices sit on the
// circle at 45 degree angles; inner square corners at radius a*R with
// a = 1/(1+sqrt(2)).
Mesh disk_base(double radius)
{
    const double s = radius / std::numbers::sqrt2;
    const double a = 1.0 / (1.0 + std::numbers::sqrt2);
    const double t = s * a;
    std::vector<Point> v = {
        {-s, -s, 0}, {s, -s, 0}, {s, s, 0}, {-s, s, 0},  // outer
        {-t, -t, 0}, {t, -t, 0}, {t, t, 0}, {-t, t, 0},  // inner
    };
    std::vector<Cell> cells = {
        {4, 5, 6, 7},  // center
        {0, 1, 5, 4},  // bottom
        {1, 2, 6, 5},  // right
        {2, 3, 7, 6},  // top
        {3, 0, 4, 7},  // left
    };
    return Mesh(2, 4, std::move(v), std::move(cells), {0, 1, 2, 3});
}

Mesh refine_times(Mesh m, int refinements, const Placement& place)
{
    for (int k = 0; k < refinements; ++k) {
        m = refine(m, place).fine;
    }
    return m;
}

struct Generator {
    Mesh base;
    Placement place;
};

Generator make_generator(const DomainDescriptor& d)
{
    switch (d.kind) {
    case DomainKind::square: {
        const double c = d.param0;
        if (!(c > 0.0)) {
            throw MeshError("square half-diagonal must be positive");
        }
        const double h = 0.5 * c;
        std::vector<Point> v = {
            {0, 0, 0},   {c, 0, 0},  {0, c, 0},  {-c, 0, 0}, {0, -c, 0},
            {h, h, 0},   {-h, h, 0}, {-h, -h, 0}, {h, -h, 0},
        };
        std::vector<Cell> cells = {{0, 8, 1, 5}, {0, 5, 2, 6}, {0, 6, 3, 7}, {0, 7, 4, 8}};
        return {Mesh(2, 4, std::move(v), std::move(cells), {1, 2, 3, 4, 5, 6, 7, 8}), keep};
    }
    case DomainKind::disk: {
        if (!(d.param0 > 0.0)) {
            throw MeshError("disk radius must be positive");
        }
        return {disk_base(d.param0), disk_placement(d.param0)};
    }
    case DomainKind::hemisphere: {
        const double r = d.param0;
        if (!(r > 0.0)) {
            throw MeshError("hemisphere radius must be positive");
        }
        // Lift the disk layout with an azimuthal equidistant map: planar radius
        // rho becomes polar angle (rho / R) * pi / 2.
        const Mesh flat = disk_base(r);
        std::vector<Point> v;
        for (const auto& x : flat.vertices()) {
            const double rho = std::hypot(x.x(), x.y());
            const double polar = (rho / r) * std::numbers::pi / 2.0;
            const double planar = r * std::sin(polar);
            Point p(x.x() * planar / rho, x.y() * planar / rho, r * std::cos(polar));
            if (flat.is_boundary(static_cast<std::size_t>(&x - flat.vertices().data()))) {
                p.z() = 0.0;
            }
            v.push_back(p);
        }
        return {Mesh(3, 4, std::move(v), std::vector<Cell>(flat.cells().begin(), flat.cells().end()),
                     std::vector<std::uint32_t>(flat.boundary_nodes().begin(), flat.boundary_nodes().end())),
                sphere_placement(r)};
    }
    case DomainKind::half_torus: {
        const double major = d.param0;
        const double tube = d.param1;
        if (!(tube > 0.0) || !(major > tube)) {
            throw MeshError("half torus needs major_radius > tube_radius > 0");
        }
        // Structured (theta, phi) grid, periodic in theta, phi in [0, pi].
        constexpr int n_theta = 16;
        constexpr int n_phi = 4;
        std::vector<Point> v;
        std::vector<std::uint32_t> boundary;
        for (int j = 0; j <= n_phi; ++j) {
            const double phi = std::numbers::pi * j / n_phi;
            for (int i = 0; i < n_theta; ++i) {
                const double theta = 2.0 * std::numbers::pi * i / n_theta;
                const double ring = major + tube * std::cos(phi);
                const double z = (j == 0 || j == n_phi) ? 0.0 : tube * std::sin(phi);
                v.emplace_back(ring * std::cos(theta), ring * std::sin(theta), z);
                if (j == 0 || j == n_phi) {
                    boundary.push_back(static_cast<std::uint32_t>(v.size() - 1));
                }
            }
        }
        auto id = [](int i, int j) { return static_cast<std::uint32_t>(j * n_theta + (i % n_theta)); };
        std::vector<Cell> cells;
        for (int j = 0; j < n_phi; ++j) {
            for (int i = 0; i < n_theta; ++i) {
                // Counterclockwise seen from outside the tube.
                cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        }
        return {Mesh(3, 4, std::move(v), std::move(cells), std::move(boundary)), torus_placement(major, tube)};
    }
    case DomainKind::interval:
        break;
    }
    throw MeshError("interval meshes are not built by quadrisection");
}

} // namespace

Mesh build_interval_mesh(double a, double b, int n_cells)
{
    if (!(a < b)) {
        throw MeshError("interval needs a < b");
    }
    if (n_cells < 2) {
        throw MeshError("interval mesh needs at least 2 cells");
    }
    std::vector<Point> v;
    v.reserve(static_cast<std::size_t>(n_cells) + 1);
    const double h = (b - a) / n_cells;
    for (int i = 0; i <= n_cells; ++i) {
        v.emplace_back(i == n_cells ? b : a + h * i, 0.0, 0.0);
    }
    std::vector<Cell> cells;
    cells.reserve(static_cast<std::size_t>(n_cells));
    for (int i = 0; i < n_cells; ++i) {
        cells.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1), 0, 0});
    }
    return Mesh(1, 2, std::move(v), std::move(cells), {0, static_cast<std::uint32_t>(n_cells)});
}

Mesh build_square_mesh(double c, int refinements)
{
    auto g = make_generator({DomainKind::square, c, 0.0});
    return refine_times(std::move(g.base), refinements, g.place);
}

Mesh build_disk_mesh(double radius, int refinements)
{
    auto g = make_generator({DomainKind::disk, radius, 0.0});
    return refine_times(std::move(g.base), refinements, g.place);
}

Mesh build_hemisphere_mesh(double radius, int refinements)
{
    auto g = make_generator({DomainKind::hemisphere, radius, 0.0});
    return refine_times(std::move(g.base), refinements, g.place);
}

Mesh build_half_torus_mesh(double major_radius, double tube_radius, int refinements)
{
    auto g = make_generator({DomainKind::half_torus, major_radius, tube_radius});
    return refine_times(std::move(g.base), refinements, g.place);
}

Mesh build_domain_mesh(const DomainDescriptor& domain, int level, int interval_base_cells)
{
    if (level < 0) {
        throw MeshError("refinement level must be nonnegative");
    }
    if (domain.kind == DomainKind::interval) {
        return build_interval_mesh(domain.param0, domain.param1, interval_base_cells << level);
    }
    auto g = make_generator(domain);
    return refine_times(std::move(g.base), level, g.place);
}

MeshHierarchy build_hierarchy(const DomainDescriptor& domain, int first_level, int last_level,
                              int interval_base_cells)
{
    if (first_level < 0 || last_level < first_level) {
        throw MeshError("invalid refinement level range");
    }
    MeshHierarchy h;
    if (domain.kind == DomainKind::interval) {
        for (int l = first_level; l <= last_level; ++l) {
            h.levels.push_back(build_domain_mesh(domain, l, interval_base_cells));
        }
        // Uniform bisection: fine vertex 2k is coarse vertex k, 2k+1 the midpoint.
        for (std::size_t k = 0; k + 1 < h.levels.size(); ++k) {
            const auto n_fine = h.levels[k + 1].num_vertices();
            std::vector<VertexParents> par(n_fine);
            for (std::size_t i = 0; i < n_fine; ++i) {
                const auto c = static_cast<std::uint32_t>(i / 2);
                if (i % 2 == 0) {
                    par[i].ids = {c, 0, 0, 0};
                    par[i].count = 1;
                } else {
                    par[i].ids = {c, c + 1, 0, 0};
                    par[i].count = 2;
                }
            }
            h.parents.push_back(std::move(par));
        }
        return h;
    }
    auto g = make_generator(domain);
    Mesh m = refine_times(std::move(g.base), first_level, g.place);
    h.levels.push_back(m);
    for (int l = first_level; l < last_level; ++l) {
        auto r = refine(h.levels.back(), g.place);
        h.levels.push_back(std::move(r.fine));
        h.parents.push_back(std::move(r.parents));
    }
    return h;
}

} // namespace peig
