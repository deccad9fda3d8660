#pragma once

#include <cstddef>
#include <string>

// Hot reduction loops. Each kernel has a scalar reference implementation and
// an optional SIMD variant; the variant is picked once at first use.
// Setting RECT2_FORCE_SCALAR=1 in the environment pins the scalar path.
namespace rect2::kernels {

struct Table {
    const char* name;
    double (*dot)(const double* a, const double* b, std::size_t n);
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    double (*sum_sq)(const double* a, std::size_t n);
    double (*sum_abs)(const double* a, std::size_t n);
    double (*max_abs)(const double* a, std::size_t n);
    double (*dist_sq)(const double* a, const double* b, std::size_t n);
    // sum_i w[i] * |a_i - t|^2 where a_i is block i of length len
    double (*weighted_block_dist_sq)(const double* a, const double* w, const double* t,
                                     std::size_t count, std::size_t len);
};

const Table& scalar_table();
const Table* avx2_table();  // nullptr when not compiled in
const Table* neon_table();  // nullptr when not compiled in

// Table in use for this process.
const Table& active();
// True when the CPU supports the compiled SIMD variant.
bool simd_available();

inline double dot(const double* a, const double* b, std::size_t n) { return active().dot(a, b, n); }
inline void axpy(double alpha, const double* x, double* y, std::size_t n) { active().axpy(alpha, x, y, n); }
inline double sum_sq(const double* a, std::size_t n) { return active().sum_sq(a, n); }
inline double sum_abs(const double* a, std::size_t n) { return active().sum_abs(a, n); }
inline double max_abs(const double* a, std::size_t n) { return active().max_abs(a, n); }
inline double dist_sq(const double* a, const double* b, std::size_t n) { return active().dist_sq(a, b, n); }
inline double weighted_block_dist_sq(const double* a, const double* w, const double* t,
                                     std::size_t count, std::size_t len) {
    return active().weighted_block_dist_sq(a, w, t, count, len);
}

}  // namespace rect2::kernels
