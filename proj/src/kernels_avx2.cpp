// AVX2 lane: 4 doubles per step, scalar tail. Elementwise kernels use plain
// mul/add (no FMA) so each element sees the exact operation sequence of the
// scalar reference. Reductions keep one vector accumulator, folded in lane
// order, then consume the tail left to right.

#if defined(__AVX2__)

#include "nml/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace nml::kernels {
namespace {

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    const __m256d va = _mm256_set1_pd(a);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        __m256d vx = _mm256_loadu_pd(x + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, vx));
        _mm256_storeu_pd(y + i, vy);
    }
    for (std::size_t i = n4; i < n; ++i) y[i] += a * x[i];
}

void scale_avx2(double a, double* x, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    const __m256d va = _mm256_set1_pd(a);
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    for (std::size_t i = n4; i < n; ++i) x[i] *= a;
}

void add_avx2(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (std::size_t i = n4; i < n; ++i) out[i] = a[i] + b[i];
}

void sub_avx2(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (std::size_t i = n4; i < n; ++i) out[i] = a[i] - b[i];
}

void mul_avx2(const double* a, const double* b, double* out, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    for (std::size_t i = 0; i < n4; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (std::size_t i = n4; i < n; ++i) out[i] = a[i] * b[i];
}

void relu_avx2(const double* x, double* out, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    const __m256d zero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vx = _mm256_loadu_pd(x + i);
        __m256d mask = _mm256_cmp_pd(vx, zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, vx));
    }
    for (std::size_t i = n4; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_grad_avx2(const double* pre, const double* up, double* out, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    const __m256d zero = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(pre + i), zero, _CMP_GT_OQ);
        _mm256_storeu_pd(out + i, _mm256_and_pd(mask, _mm256_loadu_pd(up + i)));
    }
    for (std::size_t i = n4; i < n; ++i) out[i] = pre[i] > 0.0 ? up[i] : 0.0;
}

void tanh_grad_avx2(const double* a, const double* up, double* out, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    const __m256d one = _mm256_set1_pd(1.0);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d va = _mm256_loadu_pd(a + i);
        __m256d s = _mm256_sub_pd(one, _mm256_mul_pd(va, va));
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(up + i), s));
    }
    for (std::size_t i = n4; i < n; ++i) out[i] = up[i] * (1.0 - a[i] * a[i]);
}

void adam_update_avx2(double* p, const double* g, double* m, double* v,
                      std::size_t n, double lr, double beta1, double beta2,
                      double eps, double bc1, double bc2, double decay) {
    const std::size_t n4 = n & ~std::size_t{3};
    const __m256d vb1 = _mm256_set1_pd(beta1);
    const __m256d vb1c = _mm256_set1_pd(1.0 - beta1);
    const __m256d vb2 = _mm256_set1_pd(beta2);
    const __m256d vb2c = _mm256_set1_pd(1.0 - beta2);
    const __m256d vbc1 = _mm256_set1_pd(bc1);
    const __m256d vbc2 = _mm256_set1_pd(bc2);
    const __m256d veps = _mm256_set1_pd(eps);
    const __m256d vlr = _mm256_set1_pd(lr);
    const __m256d vdecay = _mm256_set1_pd(decay);
    for (std::size_t i = 0; i < n4; i += 4) {
        __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)),
                                   _mm256_mul_pd(vb1c, vg));
        __m256d vv = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                   _mm256_mul_pd(vb2c, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_div_pd(vm, vbc1);
        __m256d vhat = _mm256_div_pd(vv, vbc2);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d vp = _mm256_loadu_pd(p + i);
        __m256d step = _mm256_add_pd(_mm256_div_pd(mhat, denom), _mm256_mul_pd(vdecay, vp));
        _mm256_storeu_pd(p + i, _mm256_sub_pd(vp, _mm256_mul_pd(vlr, step)));
    }
    for (std::size_t i = n4; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + decay * p[i]);
    }
}

double hsum(__m256d acc) {
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    return lanes[0] + lanes[1] + lanes[2] + lanes[3];
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    double r = hsum(acc);
    for (std::size_t i = n4; i < n; ++i) r += a[i] * b[i];
    return r;
}

double sum_avx2(const double* x, std::size_t n) {
    const std::size_t n4 = n & ~std::size_t{3};
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n4; i += 4)
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double r = hsum(acc);
    for (std::size_t i = n4; i < n; ++i) r += x[i];
    return r;
}

double max_avx2(const double* x, std::size_t n) {
    if (n < 8) {
        double best = x[0];
        for (std::size_t i = 1; i < n; ++i)
            if (x[i] > best) best = x[i];
        return best;
    }
    const std::size_t n4 = n & ~std::size_t{3};
    __m256d acc = _mm256_loadu_pd(x);
    for (std::size_t i = 4; i < n4; i += 4)
        acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double best = lanes[0];
    for (int k = 1; k < 4; ++k)
        if (lanes[k] > best) best = lanes[k];
    for (std::size_t i = n4; i < n; ++i)
        if (x[i] > best) best = x[i];
    return best;
}

} // namespace

const Ops& avx2_table() {
    static const Ops ops{
        axpy_avx2,  scale_avx2,     add_avx2,       sub_avx2,
        mul_avx2,   relu_avx2,      relu_grad_avx2, tanh_grad_avx2,
        adam_update_avx2, dot_avx2, sum_avx2,       max_avx2,
    };
    return ops;
}

} // namespace nml::kernels

#endif // __AVX2__
