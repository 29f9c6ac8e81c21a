// Scalar reference kernels. This translation unit is compiled with
// -ffp-contract=off so the vector lanes can match it bit-for-bit on the
// elementwise entry points.

#include "nml/kernels.hpp"

#include <cmath>

namespace nml::kernels {
namespace {

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void add_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_scalar(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_scalar(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_scalar(const double* pre, const double* up, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = pre[i] > 0.0 ? up[i] : 0.0;
}

void tanh_grad_scalar(const double* a, const double* up, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = up[i] * (1.0 - a[i] * a[i]);
}

void adam_update_scalar(double* p, const double* g, double* m, double* v,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2, double decay) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + decay * p[i]);
    }
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

double sum_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double max_scalar(const double* x, std::size_t n) {
    double best = x[0];
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] > best) best = x[i];
    return best;
}

} // namespace

const Ops& scalar_table() {
    static const Ops ops{
        axpy_scalar,  scale_scalar,     add_scalar,       sub_scalar,
        mul_scalar,   relu_scalar,      relu_grad_scalar, tanh_grad_scalar,
        adam_update_scalar, dot_scalar, sum_scalar,       max_scalar,
    };
    return ops;
}

} // namespace nml::kernels
