#include "peig/fem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace peig {

namespace {

// Compensated (Neumaier) accumulator.
struct Sum {
    double s = 0.0;
    double c = 0.0;
    void add(double x)
    {
        const double t = s + x;
        if (std::abs(s) >= std::abs(x)) {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    double value() const { return s + c; }
};

void gauss_1d(int n, std::vector<double>& x, std::vector<double>& w)
{
    switch (n) {
    case 1:
        x = {0.0};
        w = {2.0};
        break;
    case 2: {
        const double a = 1.0 / std::sqrt(3.0);
        x = {-a, a};
        w = {1.0, 1.0};
        break;
    }
    case 3: {
        const double a = std::sqrt(0.6);
        x = {-a, 0.0, a};
        w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
        break;
    }
    case 4: {
        const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
        const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
        const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
        const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
        x = {-b, -a, a, b};
        w = {wb, wa, wa, wb};
        break;
    }
    case 5: {
        const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
        const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
        const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
        x = {-b, -a, 0.0, a, b};
        w = {wb, wa, 128.0 / 225.0, wa, wb};
        break;
    }
    default:
        throw FemError("Gauss rule with " + std::to_string(n) + " points per axis is not available");
    }
}

// Jacobian columns of the cell map at a reference point.
Eigen::Matrix<double, 3, Eigen::Dynamic> cell_jacobian(const Mesh& m, std::size_t cell,
                                                       const std::array<std::array<double, 2>, 4>& rg)
{
    const int r = m.reference_dim();
    Eigen::Matrix<double, 3, Eigen::Dynamic> j = Eigen::Matrix<double, 3, Eigen::Dynamic>::Zero(3, r);
    const auto& c = m.cell(cell);
    for (int a = 0; a < m.nodes_per_cell(); ++a) {
        for (int d = 0; d < r; ++d) {
            j.col(d) += rg[a][d] * m.vertex(c[a]);
        }
    }
    return j;
}

} // namespace

QuadratureRule gauss_rule(int dim, int points_per_axis)
{
    if (dim != 1 && dim != 2) {
        throw FemError("quadrature dimension must be 1 or 2");
    }
    std::vector<double> x;
    std::vector<double> w;
    gauss_1d(points_per_axis, x, w);
    QuadratureRule rule;
    rule.dim = dim;
    if (dim == 1) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            rule.points.push_back({x[i], 0.0});
            rule.weights.push_back(w[i]);
        }
    } else {
        for (std::size_t j = 0; j < x.size(); ++j) {
            for (std::size_t i = 0; i < x.size(); ++i) {
                rule.points.push_back({x[i], x[j]});
                rule.weights.push_back(w[i] * w[j]);
            }
        }
    }
    return rule;
}

void reference_basis(int ref_dim, std::array<double, 2> ref, std::array<double, 4>& values,
                     std::array<std::array<double, 2>, 4>& grads)
{
    values.fill(0.0);
    for (auto& g : grads) {
        g = {0.0, 0.0};
    }
    const double xi = ref[0];
    if (ref_dim == 1) {
        values[0] = 0.5 * (1.0 - xi);
        values[1] = 0.5 * (1.0 + xi);
        grads[0][0] = -0.5;
        grads[1][0] = 0.5;
        return;
    }
    const double eta = ref[1];
    constexpr std::array<double, 4> sx{-1.0, 1.0, 1.0, -1.0};
    constexpr std::array<double, 4> sy{-1.0, -1.0, 1.0, 1.0};
    for (int a = 0; a < 4; ++a) {
        values[a] = 0.25 * (1.0 + sx[a] * xi) * (1.0 + sy[a] * eta);
        grads[a][0] = 0.25 * sx[a] * (1.0 + sy[a] * eta);
        grads[a][1] = 0.25 * sy[a] * (1.0 + sx[a] * xi);
    }
}

FeSpace::FeSpace(std::shared_ptr<const Mesh> mesh, int quad_points_per_axis)
    : mesh_(std::move(mesh)), quad_order_(quad_points_per_axis)
{
    if (!mesh_) {
        throw FemError("FeSpace requires a mesh");
    }
    const Mesh& m = *mesh_;
    const int r = m.reference_dim();
    npc_ = m.nodes_per_cell();
    const auto rule = gauss_rule(r, quad_points_per_axis);
    nqp_ = static_cast<int>(rule.points.size());

    std::vector<std::array<std::array<double, 2>, 4>> ref_grads(nqp_);
    shapes_.assign(static_cast<std::size_t>(nqp_) * npc_, 0.0);
    for (int q = 0; q < nqp_; ++q) {
        std::array<double, 4> vals{};
        reference_basis(r, rule.points[q], vals, ref_grads[q]);
        for (int a = 0; a < npc_; ++a) {
            shapes_[q * npc_ + a] = vals[a];
        }
    }

    const auto nc = m.num_cells();
    jxw_.resize(nc * nqp_);
    grads_.resize(nc * nqp_ * npc_);
    for (std::size_t c = 0; c < nc; ++c) {
        for (int q = 0; q < nqp_; ++q) {
            const auto j = cell_jacobian(m, c, ref_grads[q]);
            const Eigen::MatrixXd g = j.transpose() * j;
            const double det = g.determinant();
            if (!(det > 0.0)) {
                throw FemError("degenerate cell " + std::to_string(c));
            }
            jxw_[c * nqp_ + q] = rule.weights[q] * std::sqrt(det);
            const Eigen::MatrixXd pinv = j * g.inverse();
            for (int a = 0; a < npc_; ++a) {
                Eigen::VectorXd rg(r);
                for (int d = 0; d < r; ++d) {
                    rg[d] = ref_grads[q][a][d];
                }
                grads_[(c * nqp_ + q) * npc_ + a] = pinv * rg;
            }
        }
    }

    free_index_.assign(m.num_vertices(), -1);
    for (std::size_t v = 0; v < m.num_vertices(); ++v) {
        if (!m.is_boundary(v)) {
            free_index_[v] = static_cast<std::int32_t>(free_vertices_.size());
            free_vertices_.push_back(static_cast<std::uint32_t>(v));
        }
    }

    // Free-free sparsity pattern from cell connectivity.
    const auto nf = free_vertices_.size();
    std::vector<std::vector<std::uint32_t>> rows(nf);
    for (const auto& cell : m.cells()) {
        for (int a = 0; a < npc_; ++a) {
            const auto ia = free_index_[cell[a]];
            if (ia < 0) {
                continue;
            }
            for (int b = 0; b < npc_; ++b) {
                const auto ib = free_index_[cell[b]];
                if (ib >= 0) {
                    rows[ia].push_back(static_cast<std::uint32_t>(ib));
                }
            }
        }
    }
    pattern_offsets_.assign(nf + 1, 0);
    for (std::size_t i = 0; i < nf; ++i) {
        auto& row = rows[i];
        std::sort(row.begin(), row.end());
        row.erase(std::unique(row.begin(), row.end()), row.end());
        pattern_offsets_[i + 1] = pattern_offsets_[i] + row.size();
    }
    pattern_cols_.reserve(pattern_offsets_.back());
    for (const auto& row : rows) {
        pattern_cols_.insert(pattern_cols_.end(), row.begin(), row.end());
    }
    pattern_pos_.assign(nc * npc_ * npc_, -1);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto& cell = m.cell(c);
        for (int a = 0; a < npc_; ++a) {
            const auto ia = free_index_[cell[a]];
            if (ia < 0) {
                continue;
            }
            const auto begin = pattern_cols_.begin() + static_cast<std::ptrdiff_t>(pattern_offsets_[ia]);
            const auto end = pattern_cols_.begin() + static_cast<std::ptrdiff_t>(pattern_offsets_[ia + 1]);
            for (int b = 0; b < npc_; ++b) {
                const auto ib = free_index_[cell[b]];
                if (ib < 0) {
                    continue;
                }
                const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(ib));
                pattern_pos_[(c * npc_ + a) * npc_ + b] = it - pattern_cols_.begin();
            }
        }
    }
}

Point FeSpace::qp_position(std::size_t cell, int q) const
{
    Point x = Point::Zero();
    const auto& c = mesh_->cell(cell);
    for (int a = 0; a < npc_; ++a) {
        x += shape(q, a) * mesh_->vertex(c[a]);
    }
    return x;
}

std::vector<double> FeSpace::restrict_to_free(std::span<const double> full) const
{
    if (full.size() != mesh_->num_vertices()) {
        throw FemError("vector length does not match the number of vertices");
    }
    std::vector<double> out(free_vertices_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = full[free_vertices_[i]];
    }
    return out;
}

std::vector<double> FeSpace::extend_from_free(std::span<const double> free) const
{
    if (free.size() != free_vertices_.size()) {
        throw FemError("vector length does not match the number of free dofs");
    }
    std::vector<double> out(mesh_->num_vertices(), 0.0);
    for (std::size_t i = 0; i < free.size(); ++i) {
        out[free_vertices_[i]] = free[i];
    }
    return out;
}

Eigen::Vector3d tangential_gradient(const Mesh& m, const FeFunction& f, std::size_t cell,
                                    std::array<double, 2> ref_point)
{
    if (f.size() != m.num_vertices()) {
        throw FemError("function length does not match the mesh");
    }
    if (cell >= m.num_cells()) {
        throw FemError("cell index out of range");
    }
    const int r = m.reference_dim();
    std::array<double, 4> vals{};
    std::array<std::array<double, 2>, 4> rg{};
    reference_basis(r, ref_point, vals, rg);
    const auto j = cell_jacobian(m, cell, rg);
    Eigen::VectorXd ref_grad = Eigen::VectorXd::Zero(r);
    const auto& c = m.cell(cell);
    for (int a = 0; a < m.nodes_per_cell(); ++a) {
        for (int d = 0; d < r; ++d) {
            ref_grad[d] += f.coeffs[c[a]] * rg[a][d];
        }
    }
    const Eigen::MatrixXd g = j.transpose() * j;
    return j * g.ldlt().solve(ref_grad);
}

double gamma_coefficient(double grad_norm_sq, double p, double eta)
{
    return std::exp(0.5 * (p - 2.0) * std::log(eta * eta + grad_norm_sq));
}

double gamma_coefficient(const Eigen::Vector3d& grad, double p, double eta)
{
    return gamma_coefficient(grad.squaredNorm(), p, eta);
}

double abs_pow(double u, double e)
{
    if (e == 0.0) {
        return 1.0;
    }
    const double a = std::abs(u);
    if (a == 0.0) {
        return 0.0;
    }
    const double v = std::exp(e * std::log(a));
    return v < std::numeric_limits<double>::min() ? 0.0 : v;
}

namespace {

void check_function(const FeSpace& space, const FeFunction& u)
{
    if (u.size() != space.mesh().num_vertices()) {
        throw FemError("function length does not match the mesh");
    }
}

// Pattern values -> CSR with exact zeros removed.
CsrMatrix pruned_matrix(const FeSpace& space, const std::vector<double>& vals)
{
    const auto offs = space.pattern_offsets();
    const auto cols = space.pattern_cols();
    const auto n = space.num_free();
    std::vector<std::size_t> ro(n + 1, 0);
    std::vector<std::uint32_t> ci;
    std::vector<double> v;
    ci.reserve(vals.size());
    v.reserve(vals.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (auto k = offs[i]; k < offs[i + 1]; ++k) {
            if (vals[k] != 0.0) {
                ci.push_back(cols[k]);
                v.push_back(vals[k]);
            }
        }
        ro[i + 1] = v.size();
    }
    return CsrMatrix(n, std::move(ro), std::move(ci), std::move(v));
}

} // namespace

NewtonSystem assemble_newton_system(const FeSpace& space, const FeFunction& u, double p, double eta,
                                    double lambda)
{
    check_function(space, u);
    if (!(p >= 2.0)) {
        throw FemError("p must be at least 2");
    }
    const Mesh& m = space.mesh();
    const int npc = space.nodes_per_cell();
    const int nqp = space.num_qp();
    const auto fi = space.free_index();
    const auto nnz = space.pattern_cols().size();
    std::vector<double> kv(nnz, 0.0);
    std::vector<double> mv(nnz, 0.0);
    std::vector<double> b(space.num_free(), 0.0);

    std::array<double, 4> ua{};
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const auto& cell = m.cell(c);
        for (int a = 0; a < npc; ++a) {
            ua[a] = u.coeffs[cell[a]];
        }
        for (int q = 0; q < nqp; ++q) {
            const double w = space.jxw(c, q);
            double uq = 0.0;
            Eigen::Vector3d g = Eigen::Vector3d::Zero();
            for (int a = 0; a < npc; ++a) {
                uq += space.shape(q, a) * ua[a];
                g += ua[a] * space.grad(c, q, a);
            }
            const double s = eta * eta + g.squaredNorm();
            const double gam = gamma_coefficient(g.squaredNorm(), p, eta);
            const double aniso = (p - 2.0) / s;
            const double wu = abs_pow(uq, p - 2.0);
            std::array<double, 4> gdot{};
            for (int a = 0; a < npc; ++a) {
                gdot[a] = g.dot(space.grad(c, q, a));
            }
            for (int a = 0; a < npc; ++a) {
                const auto ia = fi[cell[a]];
                if (ia < 0) {
                    continue;
                }
                const double na = space.shape(q, a);
                b[ia] += w * (lambda * wu * uq * na - gam * gdot[a]);
                for (int bb = 0; bb < npc; ++bb) {
                    const auto pos = space.pattern_pos(c, a, bb);
                    if (pos < 0) {
                        continue;
                    }
                    const double gg = space.grad(c, q, a).dot(space.grad(c, q, bb));
                    kv[pos] += w * gam * (gg + aniso * gdot[a] * gdot[bb]);
                    mv[pos] += w * (p - 1.0) * wu * na * space.shape(q, bb);
                }
            }
        }
    }
    return {pruned_matrix(space, kv), pruned_matrix(space, mv), std::move(b)};
}

NewtonSystem assemble_linear_pencil(const FeSpace& space)
{
    const Mesh& m = space.mesh();
    const int npc = space.nodes_per_cell();
    const auto nnz = space.pattern_cols().size();
    std::vector<double> kv(nnz, 0.0);
    std::vector<double> mv(nnz, 0.0);
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        for (int q = 0; q < space.num_qp(); ++q) {
            const double w = space.jxw(c, q);
            for (int a = 0; a < npc; ++a) {
                for (int bb = 0; bb < npc; ++bb) {
                    const auto pos = space.pattern_pos(c, a, bb);
                    if (pos < 0) {
                        continue;
                    }
                    kv[pos] += w * space.grad(c, q, a).dot(space.grad(c, q, bb));
                    mv[pos] += w * space.shape(q, a) * space.shape(q, bb);
                }
            }
        }
    }
    return {pruned_matrix(space, kv), pruned_matrix(space, mv), std::vector<double>(space.num_free(), 0.0)};
}

RayleighParts rayleigh_parts(const FeSpace& space, const FeFunction& u, double p)
{
    check_function(space, u);
    const Mesh& m = space.mesh();
    const int npc = space.nodes_per_cell();
    Sum num;
    Sum den;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const auto& cell = m.cell(c);
        double cn = 0.0;
        double cd = 0.0;
        for (int q = 0; q < space.num_qp(); ++q) {
            double uq = 0.0;
            Eigen::Vector3d g = Eigen::Vector3d::Zero();
            for (int a = 0; a < npc; ++a) {
                const double ua = u.coeffs[cell[a]];
                uq += space.shape(q, a) * ua;
                g += ua * space.grad(c, q, a);
            }
            const double w = space.jxw(c, q);
            cn += w * abs_pow(g.norm(), p);
            cd += w * abs_pow(uq, p);
        }
        num.add(cn);
        den.add(cd);
    }
    return {num.value(), den.value()};
}

double rayleigh_quotient(const FeSpace& space, const FeFunction& u, double p)
{
    const auto parts = rayleigh_parts(space, u, p);
    if (!(parts.value_integral > 0.0)) {
        throw FemError("zero function in Rayleigh quotient");
    }
    return parts.quotient();
}

double rayleigh_directional_derivative(const FeSpace& space, const FeFunction& u, const FeFunction& du, double p)
{
    check_function(space, u);
    check_function(space, du);
    const Mesh& m = space.mesh();
    const int npc = space.nodes_per_cell();
    Sum num;
    Sum den;
    Sum dnum;
    Sum dden;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const auto& cell = m.cell(c);
        for (int q = 0; q < space.num_qp(); ++q) {
            double uq = 0.0;
            double dq = 0.0;
            Eigen::Vector3d g = Eigen::Vector3d::Zero();
            Eigen::Vector3d dg = Eigen::Vector3d::Zero();
            for (int a = 0; a < npc; ++a) {
                const double ua = u.coeffs[cell[a]];
                const double da = du.coeffs[cell[a]];
                uq += space.shape(q, a) * ua;
                dq += space.shape(q, a) * da;
                g += ua * space.grad(c, q, a);
                dg += da * space.grad(c, q, a);
            }
            const double w = space.jxw(c, q);
            const double gn2 = abs_pow(g.norm(), p - 2.0);
            const double un2 = abs_pow(uq, p - 2.0);
            num.add(w * gn2 * g.squaredNorm());
            den.add(w * un2 * uq * uq);
            dnum.add(w * gn2 * g.dot(dg));
            dden.add(w * un2 * uq * dq);
        }
    }
    const double d = den.value();
    if (!(d > 0.0)) {
        throw FemError("zero function in Rayleigh derivative");
    }
    const double r = num.value() / d;
    return p * (dnum.value() - r * dden.value()) / d;
}

double sup_norm(const FeFunction& u)
{
    double s = 0.0;
    for (double v : u.coeffs) {
        s = std::max(s, std::abs(v));
    }
    return s;
}

FeFunction normalize_sup(const FeFunction& u)
{
    double best = 0.0;
    for (double v : u.coeffs) {
        if (std::abs(v) > std::abs(best)) {
            best = v;
        }
    }
    if (best == 0.0 || !std::isfinite(best)) {
        throw FemError("zero function cannot be normalized");
    }
    FeFunction out(u.coeffs);
    for (double& v : out.coeffs) {
        v /= best;
    }
    return out;
}

double total_area(const FeSpace& space)
{
    Sum s;
    for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
        for (int q = 0; q < space.num_qp(); ++q) {
            s.add(space.jxw(c, q));
        }
    }
    return s.value();
}

std::vector<Point> quadrature_positions(const FeSpace& space)
{
    std::vector<Point> out;
    out.reserve(space.mesh().num_cells() * space.num_qp());
    for (std::size_t c = 0; c < space.mesh().num_cells(); ++c) {
        for (int q = 0; q < space.num_qp(); ++q) {
            out.push_back(space.qp_position(c, q));
        }
    }
    return out;
}

double l2_error_at_qps(const FeSpace& space, const FeFunction& u, std::span<const double> exact_at_qps)
{
    check_function(space, u);
    const Mesh& m = space.mesh();
    if (exact_at_qps.size() != m.num_cells() * space.num_qp()) {
        throw FemError("exact values do not match the quadrature points");
    }
    Sum s;
    for (std::size_t c = 0; c < m.num_cells(); ++c) {
        const auto& cell = m.cell(c);
        for (int q = 0; q < space.num_qp(); ++q) {
            double uq = 0.0;
            for (int a = 0; a < space.nodes_per_cell(); ++a) {
                uq += space.shape(q, a) * u.coeffs[cell[a]];
            }
            const double e = uq - exact_at_qps[c * space.num_qp() + q];
            s.add(space.jxw(c, q) * e * e);
        }
    }
    return std::sqrt(s.value());
}

double l2_distance(const FeSpace& space, const FeFunction& a, const FeFunction& b)
{
    check_function(space, a);
    check_function(space, b);
    FeFunction d(a.coeffs);
    for (std::size_t i = 0; i < d.size(); ++i) {
        d.coeffs[i] -= b.coeffs[i];
    }
    std::vector<double> zero(space.mesh().num_cells() * space.num_qp(), 0.0);
    return l2_error_at_qps(space, d, zero);
}

} // namespace peig
