#include "nml/matrix.hpp"

#include <cmath>

#include "nml/kernels.hpp"

namespace nml {

Matrix::Matrix(index_t rows, index_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix Matrix::identity(index_t n) {
    Matrix m(n, n);
    for (index_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const index_t r = rows.size();
    const index_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    index_t i = 0;
    for (const auto& row : rows) {
        NML_REQUIRE(row.size() == c, "from_rows: ragged row ", i);
        index_t j = 0;
        for (const double v : row) m(i, j++) = v;
        ++i;
    }
    ensure_finite(m, "from_rows");
    return m;
}

void Matrix::fill(double v) {
    for (double& x : data_) x = v;
}

bool Matrix::all_finite() const {
    for (const double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

void ensure_finite(const Matrix& m, const char* what) {
    if (!m.all_finite())
        throw numeric_error(detail::msg(what, ": non-finite entry in ", m.rows(), "x", m.cols(), " result"));
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    NML_REQUIRE(a.cols() == b.rows(), "matmul: shape mismatch ", a.rows(), "x", a.cols(),
                " * ", b.rows(), "x", b.cols());
    const auto& k = kernels::active();
    Matrix out(a.rows(), b.cols());
    for (index_t i = 0; i < a.rows(); ++i) {
        double* dst = out.row(i);
        for (index_t p = 0; p < a.cols(); ++p)
            k.axpy(a(i, p), b.row(p), dst, b.cols());
    }
    ensure_finite(out, "matmul");
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols(), a.rows());
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    NML_REQUIRE(a.same_shape(b), what, ": shape mismatch ", a.rows(), "x", a.cols(),
                " vs ", b.rows(), "x", b.cols());
}

} // namespace

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out(a.rows(), a.cols());
    kernels::active().add(a.data(), b.data(), out.data(), a.size());
    ensure_finite(out, "add");
    return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "sub");
    Matrix out(a.rows(), a.cols());
    kernels::active().sub(a.data(), b.data(), out.data(), a.size());
    ensure_finite(out, "sub");
    return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "hadamard");
    Matrix out(a.rows(), a.cols());
    kernels::active().mul(a.data(), b.data(), out.data(), a.size());
    ensure_finite(out, "hadamard");
    return out;
}

Matrix scaled(const Matrix& a, double s) {
    Matrix out = a;
    kernels::active().scale(s, out.data(), out.size());
    ensure_finite(out, "scaled");
    return out;
}

Matrix add_row_broadcast(const Matrix& a, const Matrix& r) {
    NML_REQUIRE(r.rows() == 1 && r.cols() == a.cols(), "add_row_broadcast: bias must be 1x",
                a.cols(), ", got ", r.rows(), "x", r.cols());
    const auto& k = kernels::active();
    Matrix out(a.rows(), a.cols());
    for (index_t i = 0; i < a.rows(); ++i)
        k.add(a.row(i), r.row(0), out.row(i), a.cols());
    ensure_finite(out, "add_row_broadcast");
    return out;
}

Matrix col_sums(const Matrix& a) {
    const auto& k = kernels::active();
    Matrix out(1, a.cols());
    for (index_t i = 0; i < a.rows(); ++i)
        k.axpy(1.0, a.row(i), out.row(0), a.cols());
    ensure_finite(out, "col_sums");
    return out;
}

void axpy_into(Matrix& a, double s, const Matrix& b) {
    require_same_shape(a, b, "axpy_into");
    kernels::active().axpy(s, b.data(), a.data(), a.size());
    ensure_finite(a, "axpy_into");
}

} // namespace nml
