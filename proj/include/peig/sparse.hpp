#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace peig {

class LinearAlgebraError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Triplet {
    std::uint32_t row;
    std::uint32_t col;
    double value;
};

/// Square matrix in compressed sparse row form. Column indices are sorted
/// within each row and no explicit zeros are stored.
class CsrMatrix {
public:
    CsrMatrix() = default;
    CsrMatrix(std::size_t n, std::vector<std::size_t> row_offsets, std::vector<std::uint32_t> col_indices,
              std::vector<double> values);

    /// Duplicates are summed; resulting zeros are dropped.
    static CsrMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets);
    static CsrMatrix identity(std::size_t n);

    std::size_t size() const { return n_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_offsets() const { return row_offsets_; }
    std::span<const std::uint32_t> col_indices() const { return col_indices_; }
    std::span<const double> values() const { return values_; }

    /// Stored value at (i, j), or 0 when (i, j) is not in the pattern.
    double at(std::size_t i, std::size_t j) const;
    std::vector<double> diagonal() const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> operator*(std::span<const double> x) const;

    /// max |A_ij - A_ji|.
    double asymmetry() const;
    double max_abs() const;

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::uint32_t> col_indices_;
    std::vector<double> values_;
};

/// alpha * A + beta * B for matrices of equal size (patterns may differ).
CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha, double beta);

enum class PreconditionerKind { none, jacobi, ssor };

struct PreconditionerSpec {
    PreconditionerKind kind = PreconditionerKind::ssor;
    double omega = 1.2;
};

/// Symmetric positive definite approximation of A^{-1}.
class Preconditioner {
public:
    Preconditioner() = default;
    void apply(std::span<const double> r, std::span<double> z) const;
    PreconditionerKind kind() const { return kind_; }

private:
    friend Preconditioner make_preconditioner(const CsrMatrix&, PreconditionerSpec);
    PreconditionerKind kind_ = PreconditionerKind::none;
    double omega_ = 1.0;
    CsrMatrix matrix_;
    std::vector<double> diag_;
    std::vector<std::size_t> diag_pos_;
};

/// Throws LinearAlgebraError naming the row of a zero or negative diagonal entry.
Preconditioner make_preconditioner(const CsrMatrix& a, PreconditionerSpec spec);

struct CgReport {
    int iterations = 0;
    double final_relative_residual = 0.0;
    bool converged = false;
};

struct CgResult {
    std::vector<double> x;
    CgReport report;
};

/// Default iteration cap, 10 sqrt(n) + 100.
int default_cg_max_iter(std::size_t n);

/// Preconditioned conjugate gradients from a zero initial guess. Stops when
/// ||b - A x|| / ||b|| <= tol. Throws LinearAlgebraError when a search
/// direction with p^T A p <= 0 is met.
CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int max_iter,
                  const Preconditioner& precond);
CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int max_iter,
                  PreconditionerSpec spec = {});

struct GeneralizedEigenpair {
    double lambda = 0.0;
    std::vector<double> vector;
    int iterations = 0;
};

/// Smallest eigenpair of K u = lambda M u by inverse power iteration. The
/// vector is scaled to sup-norm 1 with a positive maximum entry.
GeneralizedEigenpair smallest_generalized_eigenpair(const CsrMatrix& k, const CsrMatrix& m, double tol,
                                                    int max_outer = 2000, PreconditionerSpec spec = {});

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

} // namespace peig
