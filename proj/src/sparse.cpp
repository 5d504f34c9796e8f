#include "peig/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace peig {

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += a[i] * b[i];
    }
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

CsrMatrix::CsrMatrix(std::size_t n, std::vector<std::size_t> row_offsets, std::vector<std::uint32_t> col_indices,
                     std::vector<double> values)
    : n_(n), row_offsets_(std::move(row_offsets)), col_indices_(std::move(col_indices)), values_(std::move(values))
{
    if (row_offsets_.size() != n_ + 1 || row_offsets_.front() != 0 || row_offsets_.back() != values_.size() ||
        col_indices_.size() != values_.size()) {
        throw LinearAlgebraError("inconsistent CSR arrays");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        if (row_offsets_[i] > row_offsets_[i + 1]) {
            throw LinearAlgebraError("CSR row offsets must be nondecreasing");
        }
        for (auto k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (col_indices_[k] >= n_ || (k > row_offsets_[i] && col_indices_[k] <= col_indices_[k - 1])) {
                throw LinearAlgebraError("CSR column indices must be in range and strictly increasing per row");
            }
        }
    }
}

CsrMatrix CsrMatrix::from_triplets(std::size_t n, std::vector<Triplet> t)
{
    std::sort(t.begin(), t.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> offsets(n + 1, 0);
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    cols.reserve(t.size());
    vals.reserve(t.size());
    std::size_t k = 0;
    while (k < t.size()) {
        const auto r = t[k].row;
        const auto c = t[k].col;
        if (r >= n || c >= n) {
            throw LinearAlgebraError("triplet index out of range");
        }
        double v = 0.0;
        while (k < t.size() && t[k].row == r && t[k].col == c) {
            v += t[k].value;
            ++k;
        }
        if (v != 0.0) {
            cols.push_back(c);
            vals.push_back(v);
            ++offsets[r + 1];
        }
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return CsrMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

CsrMatrix CsrMatrix::identity(std::size_t n)
{
    std::vector<std::size_t> offsets(n + 1);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::vector<std::uint32_t> cols(n);
    std::iota(cols.begin(), cols.end(), std::uint32_t{0});
    return CsrMatrix(n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

double CsrMatrix::at(std::size_t i, std::size_t j) const
{
    const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(j));
    if (it == last || *it != j) {
        return 0.0;
    }
    return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

std::vector<double> CsrMatrix::diagonal() const
{
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        d[i] = at(i, i);
    }
    return d;
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const
{
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (auto k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            s += values_[k] * x[col_indices_[k]];
        }
        y[i] = s;
    }
}

std::vector<double> CsrMatrix::operator*(std::span<const double> x) const
{
    std::vector<double> y(n_);
    multiply(x, y);
    return y;
}

double CsrMatrix::asymmetry() const
{
    double worst = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        for (auto k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            worst = std::max(worst, std::abs(values_[k] - at(col_indices_[k], i)));
        }
    }
    return worst;
}

double CsrMatrix::max_abs() const
{
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double alpha, double beta)
{
    if (a.size() != b.size()) {
        throw LinearAlgebraError("matrix sizes differ");
    }
    const auto n = a.size();
    std::vector<std::size_t> offsets(n + 1, 0);
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    cols.reserve(std::max(a.nnz(), b.nnz()));
    vals.reserve(std::max(a.nnz(), b.nnz()));
    const auto ao = a.row_offsets();
    const auto bo = b.row_offsets();
    const auto ac = a.col_indices();
    const auto bc = b.col_indices();
    const auto av = a.values();
    const auto bv = b.values();
    auto emit = [&](std::uint32_t c, double v) {
        if (v != 0.0) {
            cols.push_back(c);
            vals.push_back(v);
        }
    };
    for (std::size_t i = 0; i < n; ++i) {
        auto ka = ao[i];
        auto kb = bo[i];
        while (ka < ao[i + 1] || kb < bo[i + 1]) {
            if (kb == bo[i + 1] || (ka < ao[i + 1] && ac[ka] < bc[kb])) {
                emit(ac[ka], alpha * av[ka]);
                ++ka;
            } else if (ka == ao[i + 1] || bc[kb] < ac[ka]) {
                emit(bc[kb], beta * bv[kb]);
                ++kb;
            } else {
                emit(ac[ka], alpha * av[ka] + beta * bv[kb]);
                ++ka;
                ++kb;
            }
        }
        offsets[i + 1] = vals.size();
    }
    return CsrMatrix(n, std::move(offsets), std::move(cols), std::move(vals));
}

Preconditioner make_preconditioner(const CsrMatrix& a, PreconditionerSpec spec)
{
    Preconditioner p;
    p.kind_ = spec.kind;
    if (spec.kind == PreconditionerKind::none) {
        return p;
    }
    if (spec.kind == PreconditionerKind::ssor && !(spec.omega > 0.0 && spec.omega < 2.0)) {
        throw LinearAlgebraError("SSOR relaxation factor must lie in (0, 2)");
    }
    p.omega_ = spec.omega;
    const auto n = a.size();
    p.diag_.resize(n);
    p.diag_pos_.resize(n);
    const auto offsets = a.row_offsets();
    const auto cols = a.col_indices();
    const auto vals = a.values();
    for (std::size_t i = 0; i < n; ++i) {
        const auto first = cols.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
        const auto last = cols.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
        const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(i));
        const double d = (it != last && *it == i) ? vals[static_cast<std::size_t>(it - cols.begin())] : 0.0;
        if (!(d > 0.0)) {
            throw LinearAlgebraError("non-positive diagonal entry in row " + std::to_string(i));
        }
        p.diag_[i] = d;
        p.diag_pos_[i] = static_cast<std::size_t>(it - cols.begin());
    }
    if (spec.kind == PreconditionerKind::ssor) {
        p.matrix_ = a;
    }
    return p;
}

void Preconditioner::apply(std::span<const double> r, std::span<double> z) const
{
    const auto n = r.size();
    switch (kind_) {
    case PreconditionerKind::none:
        std::copy(r.begin(), r.end(), z.begin());
        return;
    case PreconditionerKind::jacobi:
        for (std::size_t i = 0; i < n; ++i) {
            z[i] = r[i] / diag_[i];
        }
        return;
    case PreconditionerKind::ssor:
        break;
    }
    // M = (D + wL) D^{-1} (D + wU) / (w (2 - w)).
    const auto offsets = matrix_.row_offsets();
    const auto cols = matrix_.col_indices();
    const auto vals = matrix_.values();
    const double w = omega_;
    const double scale = w * (2.0 - w);
    // Forward: (D + wL) y = r.
    for (std::size_t i = 0; i < n; ++i) {
        double s = r[i];
        for (auto k = offsets[i]; k < diag_pos_[i]; ++k) {
            s -= w * vals[k] * z[cols[k]];
        }
        z[i] = s / diag_[i];
    }
    // Scale: y <- w (2 - w) D y.
    for (std::size_t i = 0; i < n; ++i) {
        z[i] *= scale * diag_[i];
    }
    // Backward: (D + wU) z = y.
    for (std::size_t i = n; i-- > 0;) {
        double s = z[i];
        for (auto k = diag_pos_[i] + 1; k < offsets[i + 1]; ++k) {
            s -= w * vals[k] * z[cols[k]];
        }
        z[i] = s / diag_[i];
    }
}

int default_cg_max_iter(std::size_t n) { return static_cast<int>(10.0 * std::sqrt(static_cast<double>(n))) + 100; }

CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int max_iter,
                  const Preconditioner& precond)
{
    const auto n = a.size();
    if (b.size() != n) {
        throw LinearAlgebraError("right-hand side size does not match the matrix");
    }
    CgResult out;
    out.x.assign(n, 0.0);
    const double bnorm = norm2(b);
    if (!std::isfinite(bnorm)) {
        throw LinearAlgebraError("right-hand side is not finite");
    }
    if (bnorm == 0.0) {
        out.report.converged = true;
        return out;
    }
    std::vector<double> r(b.begin(), b.end());
    std::vector<double> z(n);
    std::vector<double> p(n);
    std::vector<double> ap(n);
    precond.apply(r, z);
    p = z;
    double rz = dot(r, z);
    double rel = 1.0;
    int it = 0;
    while (it < max_iter) {
        a.multiply(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw LinearAlgebraError("conjugate gradients met a direction with p^T A p <= 0 at iteration " +
                                     std::to_string(it + 1));
        }
        const double step = rz / pap;
        for (std::size_t i = 0; i < n; ++i) {
            out.x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        ++it;
        rel = norm2(r) / bnorm;
        if (rel <= tol) {
            break;
        }
        precond.apply(r, z);
        const double rz_next = dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = z[i] + beta * p[i];
        }
    }
    out.report.iterations = it;
    out.report.final_relative_residual = rel;
    out.report.converged = rel <= tol;
    return out;
}

CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, double tol, int max_iter, PreconditionerSpec spec)
{
    return cg_solve(a, b, tol, max_iter, make_preconditioner(a, spec));
}

GeneralizedEigenpair smallest_generalized_eigenpair(const CsrMatrix& k, const CsrMatrix& m, double tol,
                                                    int max_outer, PreconditionerSpec spec)
{
    const auto n = k.size();
    if (m.size() != n || n == 0) {
        throw LinearAlgebraError("eigenproblem matrices must be square, nonempty and of equal size");
    }
    const auto precond = make_preconditioner(k, spec);
    const double inner_tol = std::max(1e-12, 1e-2 * tol);
    const int inner_max = 20 * default_cg_max_iter(n);

    std::vector<double> x(n, 1.0);
    std::vector<double> mx = m * x;
    {
        const double s = std::sqrt(dot(x, mx));
        for (std::size_t i = 0; i < n; ++i) {
            x[i] /= s;
            mx[i] /= s;
        }
    }
    GeneralizedEigenpair out;
    std::vector<double> prev = x;
    for (int it = 1; it <= max_outer; ++it) {
        auto solve = cg_solve(k, mx, inner_tol, inner_max, precond);
        x = std::move(solve.x);
        mx = m * x;
        const auto kx = k * x;
        const double xmx = dot(x, mx);
        if (!(xmx > 0.0)) {
            throw LinearAlgebraError("mass matrix is not positive definite on the iterate");
        }
        const double lambda = dot(x, kx) / xmx;
        double res = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = kx[i] - lambda * mx[i];
            res += d * d;
        }
        // Backward-error scaling; the plain relative residual has a floor near eps cond(K).
        res = std::sqrt(res) / (norm2(kx) + std::abs(lambda) * norm2(mx));
        const double s = std::sqrt(xmx);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] /= s;
            mx[i] /= s;
        }
        // The residual can stall above tol on fine meshes; a stationary
        // iterate is accepted as converged.
        const double sgn = dot(x, prev) < 0.0 ? -1.0 : 1.0;
        double change = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = x[i] - sgn * prev[i];
            change += d * d;
        }
        change = std::sqrt(change) / norm2(x);
        prev = x;
        if (res <= tol || change <= tol) {
            out.lambda = lambda;
            out.iterations = it;
            // Sign so that the largest-magnitude entry is positive, then sup-normalize.
            const auto imax = static_cast<std::size_t>(
                std::max_element(x.begin(), x.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }) -
                x.begin());
            const double scale = x[imax];
            for (auto& v : x) {
                v /= scale;
            }
            out.vector = std::move(x);
            return out;
        }
    }
    throw LinearAlgebraError("inverse power iteration did not converge in " + std::to_string(max_outer) +
                             " iterations");
}

} // namespace peig
