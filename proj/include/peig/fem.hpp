#pragma once

#include "peig/mesh.hpp"
#include "peig/sparse.hpp"

#include <Eigen/Core>

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

namespace peig {

class FemError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nodal coefficients of a continuous piecewise (bi)linear function, one per
/// mesh vertex. The mesh is not stored: a dilated copy of the mesh shares the
/// same coefficient layout, which is what domain rescaling relies on.
struct FeFunction {
    std::vector<double> coeffs;

    FeFunction() = default;
    explicit FeFunction(std::vector<double> c) : coeffs(std::move(c)) {}
    std::size_t size() const { return coeffs.size(); }
};

/// Tensor-product Gauss-Legendre rule on [-1, 1]^dim.
struct QuadratureRule {
    int dim = 1;
    std::vector<std::array<double, 2>> points;
    std::vector<double> weights;
};

QuadratureRule gauss_rule(int dim, int points_per_axis);

/// Q1 basis on the reference cell: values and reference gradients at `ref`.
/// Segment: N0 = (1 - xi)/2, N1 = (1 + xi)/2. Quadrilateral: vertices at
/// (-1,-1), (1,-1), (1,1), (-1,1).
void reference_basis(int ref_dim, std::array<double, 2> ref, std::array<double, 4>& values,
                     std::array<std::array<double, 2>, 4>& grads);

/// Mesh together with cached per-quadrature-point geometry (area weights and
/// tangential basis gradients) and the Dirichlet-eliminated dof numbering.
class FeSpace {
public:
    FeSpace(std::shared_ptr<const Mesh> mesh, int quad_points_per_axis = 2);

    const Mesh& mesh() const { return *mesh_; }
    std::shared_ptr<const Mesh> mesh_ptr() const { return mesh_; }
    int quad_points_per_axis() const { return quad_order_; }
    int nodes_per_cell() const { return npc_; }
    int num_qp() const { return nqp_; }

    std::size_t num_free() const { return free_vertices_.size(); }
    /// Vertex -> free index, or -1 for a Dirichlet node.
    std::span<const std::int32_t> free_index() const { return free_index_; }
    std::span<const std::uint32_t> free_vertices() const { return free_vertices_; }

    double jxw(std::size_t cell, int q) const { return jxw_[cell * nqp_ + q]; }
    const Eigen::Vector3d& grad(std::size_t cell, int q, int a) const
    {
        return grads_[(cell * nqp_ + q) * npc_ + a];
    }
    double shape(int q, int a) const { return shapes_[q * npc_ + a]; }
    /// Physical position of quadrature point q in `cell`.
    Point qp_position(std::size_t cell, int q) const;

    // Sparsity pattern of free-free couplings; pattern_pos maps a local (a, b)
    // pair of a cell to the CSR slot, or -1 if either node is constrained.
    std::span<const std::size_t> pattern_offsets() const { return pattern_offsets_; }
    std::span<const std::uint32_t> pattern_cols() const { return pattern_cols_; }
    std::int64_t pattern_pos(std::size_t cell, int a, int b) const { return pattern_pos_[(cell * npc_ + a) * npc_ + b]; }

    std::vector<double> restrict_to_free(std::span<const double> full) const;
    std::vector<double> extend_from_free(std::span<const double> free) const;

private:
    std::shared_ptr<const Mesh> mesh_;
    int quad_order_;
    int npc_;
    int nqp_;
    std::vector<double> jxw_;
    std::vector<Eigen::Vector3d> grads_;
    std::vector<double> shapes_;
    std::vector<std::int32_t> free_index_;
    std::vector<std::uint32_t> free_vertices_;
    std::vector<std::size_t> pattern_offsets_;
    std::vector<std::uint32_t> pattern_cols_;
    std::vector<std::int64_t> pattern_pos_;
};

/// Tangential gradient of f at a reference point of `cell`: J (J^T J)^{-1}
/// times the reference gradient, where J is the Jacobian of the (bi)linear map.
Eigen::Vector3d tangential_gradient(const Mesh& m, const FeFunction& f, std::size_t cell,
                                    std::array<double, 2> ref_point);

/// (eta^2 + |grad|^2)^((p - 2) / 2), evaluated in exp/log form.
double gamma_coefficient(const Eigen::Vector3d& grad, double p, double eta);
double gamma_coefficient(double grad_norm_sq, double p, double eta);

/// |u|^e with underflow flushed to zero; 0^0 = 1.
double abs_pow(double u, double e);

struct NewtonSystem {
    CsrMatrix k;
    CsrMatrix m;
    std::vector<double> b;
};

/// Generalized stiffness K, weighted mass M = (p - 1) |u|^(p-2) (phi_i, phi_j)
/// and residual b on the free dofs, evaluated at the iterate (u, lambda).
NewtonSystem assemble_newton_system(const FeSpace& space, const FeFunction& u, double p, double eta,
                                    double lambda);

/// Classical stiffness and mass matrices on the free dofs (the p = 2 pencil).
NewtonSystem assemble_linear_pencil(const FeSpace& space);

/// int |grad_S u|^p / int |u|^p.
double rayleigh_quotient(const FeSpace& space, const FeFunction& u, double p);

/// Numerator and denominator of the Rayleigh quotient.
struct RayleighParts {
    double grad_integral = 0.0;
    double value_integral = 0.0;
    double quotient() const { return grad_integral / value_integral; }
};
RayleighParts rayleigh_parts(const FeSpace& space, const FeFunction& u, double p);

/// d/ds R_p(u + s du) at s = 0.
double rayleigh_directional_derivative(const FeSpace& space, const FeFunction& u, const FeFunction& du, double p);

double sup_norm(const FeFunction& u);
/// u / sup|u|, signed so the largest-magnitude nodal value is +1.
FeFunction normalize_sup(const FeFunction& u);

/// sum of quadrature weights times area elements.
double total_area(const FeSpace& space);

/// All quadrature point positions, cell-major.
std::vector<Point> quadrature_positions(const FeSpace& space);

/// L2 norm of u_h - g where g is given at the points of `quadrature_positions`.
double l2_error_at_qps(const FeSpace& space, const FeFunction& u, std::span<const double> exact_at_qps);

/// L2 norm of the difference of two functions on the same space.
double l2_distance(const FeSpace& space, const FeFunction& a, const FeFunction& b);

} // namespace peig
