#include "rect2/kernels.hpp"

#include <cmath>

namespace rect2::kernels {
namespace {

double dot_s(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_s(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double sum_sq_s(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

double sum_abs_s(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::fabs(a[i]);
    return s;
}

double max_abs_s(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s = std::fmax(s, std::fabs(a[i]));
    return s;
}

double dist_sq_s(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double wbd_s(const double* a, const double* w, const double* t, std::size_t count, std::size_t len) {
    double s = 0.0;
    for (std::size_t k = 0; k < count; ++k) s += w[k] * dist_sq_s(a + k * len, t, len);
    return s;
}

}  // namespace

const Table& scalar_table() {
    static const Table t{"scalar", dot_s, axpy_s, sum_sq_s, sum_abs_s, max_abs_s, dist_sq_s, wbd_s};
    return t;
}

}  // namespace rect2::kernels
