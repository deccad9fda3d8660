#include "rect2/kernels.hpp"

#include <cstdlib>
#include <cstring>

namespace rect2::kernels {

#ifndef RECT2_HAVE_AVX2
const Table* avx2_table() { return nullptr; }
#endif
#ifndef RECT2_HAVE_NEON
const Table* neon_table() { return nullptr; }
#endif

bool simd_available() {
#if defined(RECT2_HAVE_AVX2)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#elif defined(RECT2_HAVE_NEON)
    return true;
#else
    return false;
#endif
}

namespace {

const Table& choose() {
    const char* force = std::getenv("RECT2_FORCE_SCALAR");
    if (force && std::strcmp(force, "0") != 0) return scalar_table();
    if (simd_available()) {
        if (const Table* t = avx2_table()) return *t;
        if (const Table* t = neon_table()) return *t;
    }
    return scalar_table();
}

}  // namespace

const Table& active() {
    static const Table& t = choose();
    return t;
}

}  // namespace rect2::kernels
