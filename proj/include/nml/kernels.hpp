#pragma once

#include <cstddef>
#include <string_view>

namespace nml::kernels {

// Data-parallel double-precision inner loops. Every entry point has a scalar
// reference implementation and, on x86-64 with AVX2, a vector variant. The
// active table is chosen once at startup (or forced via select()).
//
// Elementwise kernels (axpy, scale, add, sub, mul, relu*, tanh_grad,
// adam_update) produce bit-identical results across backends: no FMA
// contraction, one IEEE operation sequence per element. Reductions
// (dot, sum, max) reassociate across lanes and agree only to rounding;
// within one backend the accumulation order is fixed.
struct Ops {
    // y[i] += a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // x[i] *= a
    void (*scale)(double a, double* x, std::size_t n);
    void (*add)(const double* a, const double* b, double* out, std::size_t n);
    void (*sub)(const double* a, const double* b, double* out, std::size_t n);
    void (*mul)(const double* a, const double* b, double* out, std::size_t n);
    // out[i] = x[i] > 0 ? x[i] : 0
    void (*relu)(const double* x, double* out, std::size_t n);
    // out[i] = pre[i] > 0 ? up[i] : 0
    void (*relu_grad)(const double* pre, const double* up, double* out, std::size_t n);
    // out[i] = up[i] * (1 - a[i]*a[i]), a = tanh activations
    void (*tanh_grad)(const double* a, const double* up, double* out, std::size_t n);
    // Bias-corrected Adam with decoupled decay, all buffers updated in place:
    //   m = b1*m + (1-b1)*g;  v = b2*v + (1-b2)*g*g
    //   p -= lr * ((m/bc1) / (sqrt(v/bc2) + eps) + decay*p)
    void (*adam_update)(double* p, const double* g, double* m, double* v,
                        std::size_t n, double lr, double beta1, double beta2,
                        double eps, double bc1, double bc2, double decay);

    double (*dot)(const double* a, const double* b, std::size_t n);
    double (*sum)(const double* x, std::size_t n);
    // n must be >= 1
    double (*max)(const double* x, std::size_t n);
};

enum class Backend { scalar, avx2 };

bool supported(Backend b);
Backend detect_best();
std::string_view name(Backend b);
// Returns false (and leaves the active table unchanged) if unsupported.
bool select(Backend b);
Backend active_backend();
const Ops& active();
// Table for an explicit backend; throws contract_error if unsupported.
const Ops& table(Backend b);

} // namespace nml::kernels
