#include "peig/mesh.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace peig {

namespace {

struct LineReader {
    std::istringstream in;
    int line_no = 0;
    std::string line;

    explicit LineReader(const std::string& text) : in(text) {}

    // Next non-empty line with comments stripped; false at end of input.
    bool next()
    {
        while (std::getline(in, line)) {
            ++line_no;
            if (auto hash = line.find('#'); hash != std::string::npos) {
                line.erase(hash);
            }
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                return true;
            }
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw MeshError("mesh parse error at line " + std::to_string(line_no) + ": " + what);
    }

    void expect_line(const char* what)
    {
        if (!next()) {
            ++line_no;
            fail(std::string("unexpected end of file, expected ") + what);
        }
    }

    std::size_t header(const std::string& keyword)
    {
        expect_line(keyword.c_str());
        std::istringstream ls(line);
        std::string word;
        long long count = -1;
        if (!(ls >> word >> count) || word != keyword || count < 0) {
            fail("expected '" + keyword + " <count>'");
        }
        std::string extra;
        if (ls >> extra) {
            fail("trailing tokens after '" + keyword + "' header");
        }
        return static_cast<std::size_t>(count);
    }

    std::vector<double> numbers(std::size_t expected)
    {
        std::istringstream ls(line);
        std::vector<double> out;
        std::string tok;
        while (ls >> tok) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || ptr != tok.data() + tok.size()) {
                fail("invalid number '" + tok + "'");
            }
            out.push_back(v);
        }
        if (out.size() != expected) {
            fail("expected " + std::to_string(expected) + " values, found " + std::to_string(out.size()));
        }
        return out;
    }

    std::vector<std::uint32_t> indices(std::size_t min_count, std::size_t max_count, std::size_t nv)
    {
        std::istringstream ls(line);
        std::vector<std::uint32_t> out;
        std::string tok;
        while (ls >> tok) {
            unsigned long long v = 0;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc() || ptr != tok.data() + tok.size()) {
                fail("invalid index '" + tok + "'");
            }
            if (v >= nv) {
                fail("vertex index " + tok + " out of range (" + std::to_string(nv) + " vertices)");
            }
            out.push_back(static_cast<std::uint32_t>(v));
        }
        if (out.size() < min_count || out.size() > max_count) {
            fail("wrong number of indices");
        }
        return out;
    }
};

} // namespace

Mesh parse_mesh(const std::string& text)
{
    LineReader r(text);
    r.expect_line("format header");
    {
        std::istringstream ls(r.line);
        std::string magic;
        int version = 0;
        if (!(ls >> magic >> version) || magic != "pmesh" || version != 1) {
            r.fail("expected 'pmesh 1'");
        }
    }
    const auto dim = r.header("dim");
    if (dim < 1 || dim > 3) {
        r.fail("dim must be 1, 2 or 3");
    }

    const auto nv = r.header("vertices");
    std::vector<Point> verts;
    verts.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i) {
        r.expect_line("vertex coordinates");
        const auto xs = r.numbers(dim);
        Point p = Point::Zero();
        for (std::size_t d = 0; d < dim; ++d) {
            p[static_cast<Eigen::Index>(d)] = xs[d];
        }
        verts.push_back(p);
    }

    const auto nc = r.header("cells");
    std::vector<Cell> cells;
    cells.reserve(nc);
    int nodes_per_cell = 0;
    for (std::size_t c = 0; c < nc; ++c) {
        r.expect_line("cell indices");
        const auto ids = r.indices(2, 4, nv);
        if (ids.size() == 3) {
            r.fail("cells must have 2 or 4 vertices");
        }
        const int n = static_cast<int>(ids.size());
        if (nodes_per_cell == 0) {
            nodes_per_cell = n;
        } else if (n != nodes_per_cell) {
            r.fail("mixed segment and quadrilateral cells");
        }
        Cell cell{};
        std::copy(ids.begin(), ids.end(), cell.begin());
        cells.push_back(cell);
    }

    const auto nb = r.header("boundary");
    if (nb == 0) {
        r.fail("boundary block is empty");
    }
    std::vector<std::uint32_t> boundary;
    boundary.reserve(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        r.expect_line("boundary index");
        boundary.push_back(r.indices(1, 1, nv)[0]);
    }
    if (r.next()) {
        r.fail("unexpected content after boundary block");
    }
    if (nodes_per_cell == 0) {
        r.fail("mesh has no cells");
    }
    return Mesh(static_cast<int>(dim), nodes_per_cell, std::move(verts), std::move(cells), std::move(boundary));
}

Mesh read_mesh(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw MeshError("cannot open mesh file " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_mesh(ss.str());
}

std::string format_mesh(const Mesh& m)
{
    std::ostringstream out;
    out << std::setprecision(17);
    out << "pmesh 1\n";
    out << "dim " << m.dim_embed() << "\n";
    out << "vertices " << m.num_vertices() << "\n";
    for (const auto& x : m.vertices()) {
        for (int d = 0; d < m.dim_embed(); ++d) {
            out << (d ? " " : "") << x[d];
        }
        out << "\n";
    }
    out << "cells " << m.num_cells() << "\n";
    for (const auto& c : m.cells()) {
        for (int a = 0; a < m.nodes_per_cell(); ++a) {
            out << (a ? " " : "") << c[a];
        }
        out << "\n";
    }
    out << "boundary " << m.boundary_nodes().size() << "\n";
    for (auto b : m.boundary_nodes()) {
        out << b << "\n";
    }
    return out.str();
}

void write_mesh(const Mesh& m, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw MeshError("cannot write mesh file " + path.string());
    }
    out << format_mesh(m);
    if (!out) {
        throw MeshError("failed writing mesh file " + path.string());
    }
}

} // namespace peig
