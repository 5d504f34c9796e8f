#include "peig/mesh.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace peig;

namespace {

double max_radius_error(const Mesh& m, double r)
{
    double e = 0.0;
    for (const auto& x : m.vertices()) {
        e = std::max(e, std::abs(x.norm() - r));
    }
    return e;
}

} // namespace

TEST(IntervalMesh, TwoCells)
{
    const auto m = build_interval_mesh(-1.0, 1.0, 2);
    ASSERT_EQ(m.num_vertices(), 3u);
    EXPECT_DOUBLE_EQ(m.vertex(0).x(), -1.0);
    EXPECT_DOUBLE_EQ(m.vertex(1).x(), 0.0);
    EXPECT_DOUBLE_EQ(m.vertex(2).x(), 1.0);
    ASSERT_EQ(m.num_cells(), 2u);
    EXPECT_EQ(m.cell(0)[0], 0u);
    EXPECT_EQ(m.cell(0)[1], 1u);
    EXPECT_EQ(m.cell(1)[0], 1u);
    EXPECT_EQ(m.cell(1)[1], 2u);
    ASSERT_EQ(m.boundary_nodes().size(), 2u);
    EXPECT_EQ(m.boundary_nodes()[0], 0u);
    EXPECT_EQ(m.boundary_nodes()[1], 2u);
    EXPECT_EQ(m.dim_embed(), 1);
}

TEST(IntervalMesh, SizesAndSpacing)
{
    const auto m = build_interval_mesh(-1.0, 1.0, 2048);
    EXPECT_EQ(m.num_vertices(), 2049u);
    EXPECT_NEAR(mesh_size(m), 2.0 / 2048, 1e-15);

    const auto q = build_interval_mesh(0.0, 1.0, 4);
    EXPECT_NEAR(mesh_size(q), 0.25, 1e-15);
    std::vector<double> interior;
    for (std::size_t i = 0; i < q.num_vertices(); ++i) {
        if (!q.is_boundary(i)) {
            interior.push_back(q.vertex(i).x());
        }
    }
    ASSERT_EQ(interior.size(), 3u);
    EXPECT_NEAR(interior[0], 0.25, 1e-15);
    EXPECT_NEAR(interior[1], 0.5, 1e-15);
    EXPECT_NEAR(interior[2], 0.75, 1e-15);
}

TEST(IntervalMesh, RejectsBadInput)
{
    EXPECT_THROW(build_interval_mesh(1.0, 1.0, 4), MeshError);
    EXPECT_THROW(build_interval_mesh(1.0, -1.0, 4), MeshError);
    EXPECT_THROW(build_interval_mesh(-1.0, 1.0, 1), MeshError);
}

TEST(SquareMesh, CellCountsAndBoundary)
{
    EXPECT_EQ(build_square_mesh(std::numbers::sqrt2, 4).num_cells(), 1024u);
    const auto base = build_square_mesh(std::numbers::sqrt2, 0);
    EXPECT_EQ(base.num_cells(), 4u);
    EXPECT_EQ(base.num_vertices(), 9u);

    const auto m = build_square_mesh(1.0, 1);
    EXPECT_EQ(m.num_cells(), 16u);
    for (auto b : m.boundary_nodes()) {
        const auto& x = m.vertex(b);
        EXPECT_NEAR(std::abs(x.x()) + std::abs(x.y()), 1.0, 1e-12);
    }
    // Inradius of |x| + |y| < c is c / sqrt(2); the graph distance is exact
    // here because the grid lines run along the square's diagonals.
    EXPECT_NEAR(approx_max_boundary_distance(m), 1.0 / std::numbers::sqrt2, 1e-12);
    EXPECT_THROW(build_square_mesh(0.0, 1), MeshError);
}

TEST(DiskMesh, CellCountsAndBoundary)
{
    EXPECT_EQ(build_disk_mesh(1.0, 3).num_cells(), 320u);
    EXPECT_EQ(build_disk_mesh(1.0, 0).num_cells(), 5u);
    const auto m = build_disk_mesh(2.0, 0);
    for (auto b : m.boundary_nodes()) {
        EXPECT_NEAR(m.vertex(b).norm(), 2.0, 1e-12 * 2.0);
    }
    const auto fine = build_disk_mesh(1.0, 3);
    for (auto b : fine.boundary_nodes()) {
        EXPECT_NEAR(fine.vertex(b).norm(), 1.0, 1e-12);
    }
    EXPECT_THROW(build_disk_mesh(0.0, 1), MeshError);
    EXPECT_THROW(build_disk_mesh(-1.0, 1), MeshError);
}

TEST(DiskMesh, GraphDistanceApproximatesInradius)
{
    const auto m = build_disk_mesh(1.0, 4);
    EXPECT_NEAR(approx_max_boundary_distance(m), 1.0, 0.05);
}

TEST(HemisphereMesh, OnSphere)
{
    const auto m = build_hemisphere_mesh(1.0, 3);
    EXPECT_EQ(m.num_cells(), 320u);
    EXPECT_EQ(m.dim_embed(), 3);
    EXPECT_LE(max_radius_error(m, 1.0), 1e-12);
    for (auto b : m.boundary_nodes()) {
        EXPECT_LT(std::abs(m.vertex(b).z()), 1e-12);
    }
    for (std::size_t i = 0; i < m.num_vertices(); ++i) {
        EXPECT_GE(m.vertex(i).z(), -1e-12);
    }
    EXPECT_EQ(build_hemisphere_mesh(1.0, 0).num_cells(), 5u);
    EXPECT_THROW(build_hemisphere_mesh(0.0, 1), MeshError);
}

TEST(HemisphereMesh, PoleIsAVertexAfterRefinement)
{
    const auto m = build_hemisphere_mesh(1.0, 1);
    bool found = false;
    for (const auto& x : m.vertices()) {
        found = found || (x - Point(0, 0, 1)).norm() < 1e-12;
    }
    EXPECT_TRUE(found);
}

TEST(HemisphereMesh, GeodesicInradius)
{
    const auto m = build_hemisphere_mesh(1.0, 4);
    EXPECT_NEAR(approx_max_boundary_distance(m), std::numbers::pi / 2, 0.05 * std::numbers::pi / 2);
    const auto s = build_hemisphere_mesh(2.0 / std::numbers::pi, 4);
    EXPECT_NEAR(approx_max_boundary_distance(s), 1.0, 0.05);
}

TEST(HalfTorusMesh, OnSurfaceWithTwoBoundaryCircles)
{
    const auto m = build_half_torus_mesh(2.0, 1.0, 2);
    for (const auto& x : m.vertices()) {
        const double rho = std::hypot(x.x(), x.y());
        EXPECT_NEAR((2.0 - rho) * (2.0 - rho) + x.z() * x.z(), 1.0, 1e-12);
        EXPECT_GE(x.z(), -1e-12);
    }
    int inner = 0;
    int outer = 0;
    for (auto b : m.boundary_nodes()) {
        const auto& x = m.vertex(b);
        EXPECT_LT(std::abs(x.z()), 1e-12);
        const double rho = std::hypot(x.x(), x.y());
        if (std::abs(rho - 1.0) < 1e-12) {
            ++inner;
        } else if (std::abs(rho - 3.0) < 1e-12) {
            ++outer;
        } else {
            ADD_FAILURE() << "boundary node off both circles, rho = " << rho;
        }
    }
    EXPECT_GT(inner, 0);
    EXPECT_EQ(inner, outer);
    EXPECT_NEAR(approx_max_boundary_distance(build_half_torus_mesh(2.0, 1.0, 3)), std::numbers::pi / 2, 0.05);
    EXPECT_THROW(build_half_torus_mesh(1.0, 1.0, 1), MeshError);
    EXPECT_THROW(build_half_torus_mesh(1.0, 2.0, 1), MeshError);
}

TEST(MeshInvariants, QuadrisectionQuadruplesCells)
{
    for (int k = 0; k < 3; ++k) {
        EXPECT_EQ(build_disk_mesh(1.0, k + 1).num_cells(), 4 * build_disk_mesh(1.0, k).num_cells());
        EXPECT_EQ(build_square_mesh(1.0, k + 1).num_cells(), 4 * build_square_mesh(1.0, k).num_cells());
        EXPECT_EQ(build_hemisphere_mesh(1.0, k + 1).num_cells(), 4 * build_hemisphere_mesh(1.0, k).num_cells());
    }
}

TEST(MeshInvariants, MeshSizeHalvesUnderRefinement)
{
    const double h1 = mesh_size(build_interval_mesh(-1.0, 1.0, 64));
    const double h2 = mesh_size(build_interval_mesh(-1.0, 1.0, 128));
    EXPECT_NEAR(h2 / h1, 0.5, 1e-12);
    const double s3 = mesh_size(build_hemisphere_mesh(1.0, 3));
    const double s4 = mesh_size(build_hemisphere_mesh(1.0, 4));
    EXPECT_NEAR(s4 / s3, 0.5, 0.05);
}

TEST(MeshInvariants, RejectsInvalidMeshes)
{
    std::vector<Point> v{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    EXPECT_THROW(Mesh(2, 4, v, {Cell{0, 1, 2, 7}}, {0}), MeshError);
    EXPECT_THROW(Mesh(2, 4, v, {Cell{0, 1, 1, 3}}, {0}), MeshError);
    EXPECT_THROW(Mesh(2, 4, v, {Cell{0, 1, 2, 3}}, {}), MeshError);
    // Collapsed quad: all vertices on a line.
    std::vector<Point> flat{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    EXPECT_THROW(Mesh(2, 4, flat, {Cell{0, 1, 2, 3}}, {0}), MeshError);
    EXPECT_NO_THROW(Mesh(2, 4, v, {Cell{0, 1, 2, 3}}, {0, 1}));
}

TEST(ScaleMesh, Basics)
{
    const auto m = build_disk_mesh(1.0, 2);
    EXPECT_EQ(scale_mesh(m, 1.0), m);
    const auto big = scale_mesh(m, 2.0);
    for (auto b : big.boundary_nodes()) {
        EXPECT_NEAR(big.vertex(b).norm(), 2.0, 1e-12);
    }
    const auto iv = scale_mesh(build_interval_mesh(-1.0, 1.0, 8), 0.5);
    const auto ref = build_interval_mesh(-0.5, 0.5, 8);
    ASSERT_EQ(iv.num_vertices(), ref.num_vertices());
    for (std::size_t i = 0; i < iv.num_vertices(); ++i) {
        EXPECT_NEAR(iv.vertex(i).x(), ref.vertex(i).x(), 1e-15);
    }
    EXPECT_THROW(scale_mesh(m, 0.0), MeshError);
    EXPECT_THROW(scale_mesh(m, -1.0), MeshError);
    EXPECT_THROW(scale_mesh(m, std::nan("")), MeshError);
    EXPECT_THROW(scale_mesh(m, INFINITY), MeshError);
}

TEST(ScaleMesh, RoundTripAndHomogeneity)
{
    const auto m = build_hemisphere_mesh(1.0, 2);
    for (double a : {0.3, 2.0, 7.5}) {
        const auto back = scale_mesh(scale_mesh(m, a), 1.0 / a);
        for (std::size_t i = 0; i < m.num_vertices(); ++i) {
            EXPECT_LE((back.vertex(i) - m.vertex(i)).norm(), 1e-14 * std::max(1.0, m.vertex(i).norm()));
        }
        const auto s = scale_mesh(m, a);
        EXPECT_NEAR(mesh_size(s), a * mesh_size(m), 1e-13 * a);
        EXPECT_NEAR(approx_max_boundary_distance(s), a * approx_max_boundary_distance(m),
                    1e-12 * a * approx_max_boundary_distance(m));
    }
}

TEST(MeshSize, UnitSquareCell)
{
    const double s = 0.7;
    Mesh m(2, 4, {{0, 0, 0}, {s, 0, 0}, {s, s, 0}, {0, s, 0}}, {Cell{0, 1, 2, 3}}, {0});
    EXPECT_NEAR(mesh_size(m), s * std::numbers::sqrt2, 1e-15);
}

TEST(Geodesic, IntervalIsExact)
{
    EXPECT_NEAR(approx_max_boundary_distance(build_interval_mesh(-1.0, 1.0, 64)), 1.0, 1e-14);
}

TEST(Geodesic, DisconnectedMeshThrows)
{
    std::vector<Point> v{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    Mesh m(1, 2, v, {Cell{0, 1}, Cell{2, 3}}, {0});
    EXPECT_THROW(approx_max_boundary_distance(m), MeshError);
}

TEST(Geodesic, DiskDistanceAgainstExact)
{
    const auto m = build_disk_mesh(1.0, 4);
    const auto d = boundary_graph_distance(m);
    for (std::size_t i = 0; i < m.num_vertices(); ++i) {
        const double exact = 1.0 - m.vertex(i).norm();
        EXPECT_GE(d[i], exact - 1e-12);
        EXPECT_LE(d[i], exact + 0.08);
    }
}

TEST(MeshIo, MinimalQuadFile)
{
    const auto m = parse_mesh("pmesh 1\ndim 2\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n0 1 2 3\nboundary 1\n0\n");
    EXPECT_EQ(m.num_vertices(), 4u);
    EXPECT_EQ(m.num_cells(), 1u);
    EXPECT_EQ(m.nodes_per_cell(), 4);
}

TEST(MeshIo, OutOfRangeIndexNamesLine)
{
    try {
        parse_mesh("pmesh 1\ndim 2\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n0 1 2 9\nboundary 1\n0\n");
        FAIL() << "expected a parse error";
    } catch (const MeshError& e) {
        EXPECT_NE(std::string(e.what()).find("line 9"), std::string::npos) << e.what();
    }
}

TEST(MeshIo, RejectsMalformedFiles)
{
    EXPECT_THROW(parse_mesh(""), MeshError);
    EXPECT_THROW(parse_mesh("pmesh 2\ndim 2\n"), MeshError);
    EXPECT_THROW(parse_mesh("pmesh 1\ndim 2\nvertices 4\n0 0\n1 0\n1 1\n0 1\ncells 1\n0 1 2 3\nboundary 0\n"),
                 MeshError);
    EXPECT_THROW(parse_mesh("pmesh 1\ndim 2\nvertices 2\n0 0\n1 x\n"), MeshError);
}

TEST(MeshIo, RoundTrip)
{
    const auto m = build_disk_mesh(1.0, 3);
    const auto path = std::filesystem::temp_directory_path() / "peig_roundtrip.pmesh";
    write_mesh(m, path);
    const auto back = read_mesh(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back, m);
    const auto h = build_hemisphere_mesh(1.0, 2);
    EXPECT_EQ(parse_mesh(format_mesh(h)), h);
}

TEST(MeshIo, MissingFile)
{
    EXPECT_THROW(read_mesh("/nonexistent/dir/mesh.pmesh"), MeshError);
}

TEST(Hierarchy, ProlongationIsExactForLinearFunctions)
{
    DomainDescriptor d{DomainKind::disk, 1.0, 0.0};
    const auto h = build_hierarchy(d, 1, 3);
    ASSERT_EQ(h.levels.size(), 3u);
    ASSERT_EQ(h.parents.size(), 2u);
    for (std::size_t k = 0; k + 1 < h.levels.size(); ++k) {
        const auto& c = h.levels[k];
        const auto& f = h.levels[k + 1];
        ASSERT_EQ(h.parents[k].size(), f.num_vertices());
        // Coarse vertices keep their index.
        for (std::size_t i = 0; i < c.num_vertices(); ++i) {
            EXPECT_EQ(f.vertex(i), c.vertex(i));
        }
        std::vector<double> ones(c.num_vertices(), 1.0);
        for (double v : prolongate(h.parents[k], ones)) {
            EXPECT_DOUBLE_EQ(v, 1.0);
        }
    }
    // Interval hierarchy: prolongation of a linear function is exact.
    const auto iv = build_hierarchy(DomainDescriptor{}, 0, 1, 8);
    std::vector<double> lin;
    for (const auto& x : iv.levels[0].vertices()) {
        lin.push_back(3.0 * x.x() + 1.0);
    }
    const auto fine = prolongate(iv.parents[0], lin);
    for (std::size_t i = 0; i < fine.size(); ++i) {
        EXPECT_NEAR(fine[i], 3.0 * iv.levels[1].vertex(i).x() + 1.0, 1e-14);
    }
    EXPECT_THROW(prolongate(iv.parents[0], std::vector<double>(2, 0.0)), MeshError);
}

TEST(Hierarchy, DomainLevels)
{
    EXPECT_EQ(build_domain_mesh(DomainDescriptor{}, 5).num_cells(), 2048u);
    EXPECT_EQ(build_domain_mesh({DomainKind::disk, 1.0, 0.0}, 3).num_cells(), 320u);
    EXPECT_THROW(build_domain_mesh({DomainKind::disk, 1.0, 0.0}, -1), MeshError);
    EXPECT_THROW(build_hierarchy({DomainKind::disk, 1.0, 0.0}, 3, 2), MeshError);
}
