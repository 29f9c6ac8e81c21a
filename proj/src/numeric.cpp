#include "nml/numeric.hpp"

#include <cmath>

#include "nml/kernels.hpp"

namespace nml {
namespace {

void require_finite(std::span<const double> x, const char* what) {
    for (const double v : x)
        NML_REQUIRE_NUMERIC(std::isfinite(v), what, ": non-finite input");
}

} // namespace

double logsumexp(std::span<const double> x) {
    NML_REQUIRE(!x.empty(), "logsumexp: empty input");
    require_finite(x, "logsumexp");
    const double m = kernels::active().max(x.data(), x.size());
    double s = 0.0;
    for (const double v : x) s += std::exp(v - m);
    return m + std::log(s);
}

std::vector<double> log_softmax(std::span<const double> logits) {
    const double lse = logsumexp(logits);
    std::vector<double> out(logits.size());
    for (index_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

double l2_norm(std::span<const double> v) {
    return std::sqrt(kernels::active().dot(v.data(), v.data(), v.size()));
}

std::vector<double> l2_normalize(std::span<const double> v, double eps) {
    NML_REQUIRE(!v.empty(), "l2_normalize: empty input");
    std::vector<double> out(v.begin(), v.end());
    l2_normalize_inplace(out.data(), out.size(), eps);
    return out;
}

void l2_normalize_inplace(double* v, index_t n, double eps) {
    const auto& k = kernels::active();
    const double norm = std::sqrt(k.dot(v, v, n));
    k.scale(1.0 / std::max(norm, eps), v, n);
}

Matrix l2_normalize_rows(const Matrix& m, double eps) {
    Matrix out = m;
    for (index_t i = 0; i < out.rows(); ++i)
        l2_normalize_inplace(out.row(i), out.cols(), eps);
    ensure_finite(out, "l2_normalize_rows");
    return out;
}

index_t argmax_row(const Matrix& m, index_t row) {
    NML_REQUIRE(m.cols() > 0, "argmax_row: empty row");
    index_t best = 0;
    for (index_t j = 1; j < m.cols(); ++j)
        if (m(row, j) > m(row, best)) best = j;
    return best;
}

} // namespace nml
