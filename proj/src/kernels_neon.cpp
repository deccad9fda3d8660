// AArch64 variant; NEON is part of the base ISA there.
#include "rect2/kernels.hpp"

#include <arm_neon.h>

#include <cmath>

namespace rect2::kernels {
namespace {

double dot_n(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0), acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_n(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_n(const double* a, std::size_t n) { return dot_n(a, a, n); }

double sum_abs_n(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vaddq_f64(acc, vabsq_f64(vld1q_f64(a + i)));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += std::fabs(a[i]);
    return s;
}

double max_abs_n(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vabsq_f64(vld1q_f64(a + i)));
    double s = vmaxvq_f64(acc);
    for (; i < n; ++i) s = std::fmax(s, std::fabs(a[i]));
    return s;
}

double dist_sq_n(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double wbd_n(const double* a, const double* w, const double* t, std::size_t count, std::size_t len) {
    double s = 0.0;
    for (std::size_t k = 0; k < count; ++k) s += w[k] * dist_sq_n(a + k * len, t, len);
    return s;
}

}  // namespace

const Table* neon_table() {
    static const Table t{"neon", dot_n, axpy_n, sum_sq_n, sum_abs_n, max_abs_n, dist_sq_n, wbd_n};
    return &t;
}

}  // namespace rect2::kernels
