#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "rect2/kernels.hpp"

using namespace rect2;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-2.0, 2.0);
    std::vector<double> v(n);
    for (double& x : v) x = U(rng);
    return v;
}

std::vector<const kernels::Table*> variants() {
    std::vector<const kernels::Table*> out;
    if (!kernels::simd_available()) return out;
    if (const auto* t = kernels::avx2_table()) out.push_back(t);
    if (const auto* t = kernels::neon_table()) out.push_back(t);
    return out;
}

// lengths covering empty input, sub-vector tails and several full blocks
const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 31, 64, 1000, 1003};

}  // namespace

TEST_CASE("scalar kernels match direct sums") {
    const auto& S = kernels::scalar_table();
    for (std::size_t n : kLengths) {
        const auto a = random_vec(n, 1 + n), b = random_vec(n, 100 + n);
        double dot = 0, ss = 0, sa = 0, mx = 0, d2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            dot += a[i] * b[i];
            ss += a[i] * a[i];
            sa += std::abs(a[i]);
            mx = std::max(mx, std::abs(a[i]));
            d2 += (a[i] - b[i]) * (a[i] - b[i]);
        }
        CHECK(S.dot(a.data(), b.data(), n) == doctest::Approx(dot).epsilon(1e-13));
        CHECK(S.sum_sq(a.data(), n) == doctest::Approx(ss).epsilon(1e-13));
        CHECK(S.sum_abs(a.data(), n) == doctest::Approx(sa).epsilon(1e-13));
        CHECK(S.max_abs(a.data(), n) == mx);
        CHECK(S.dist_sq(a.data(), b.data(), n) == doctest::Approx(d2).epsilon(1e-13));
        auto y = b;
        S.axpy(0.5, a.data(), y.data(), n);
        for (std::size_t i = 0; i < n; ++i) CHECK(y[i] == doctest::Approx(b[i] + 0.5 * a[i]));
    }
}

TEST_CASE("weighted block distance") {
    const auto& S = kernels::scalar_table();
    const std::size_t count = 13, len = 9;
    const auto a = random_vec(count * len, 7), t = random_vec(len, 8);
    auto w = random_vec(count, 9);
    for (double& x : w) x = std::abs(x);
    double expect = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        double d = 0.0;
        for (std::size_t j = 0; j < len; ++j) d += (a[i * len + j] - t[j]) * (a[i * len + j] - t[j]);
        expect += w[i] * d;
    }
    CHECK(S.weighted_block_dist_sq(a.data(), w.data(), t.data(), count, len) == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("simd variants agree with the scalar reference") {
    const auto& S = kernels::scalar_table();
    const auto vs = variants();
    if (vs.empty()) MESSAGE("no SIMD variant available on this machine; scalar only");
    for (const kernels::Table* V : vs) {
        CAPTURE(std::string(V->name));
        for (std::size_t n : kLengths) {
            CAPTURE(n);
            const auto a = random_vec(n, 11 + n), b = random_vec(n, 211 + n);
            const double scale = 1.0 + static_cast<double>(n);
            CHECK(std::abs(V->dot(a.data(), b.data(), n) - S.dot(a.data(), b.data(), n)) <= 1e-12 * scale);
            CHECK(std::abs(V->sum_sq(a.data(), n) - S.sum_sq(a.data(), n)) <= 1e-12 * scale);
            CHECK(std::abs(V->sum_abs(a.data(), n) - S.sum_abs(a.data(), n)) <= 1e-12 * scale);
            CHECK(V->max_abs(a.data(), n) == S.max_abs(a.data(), n));
            CHECK(std::abs(V->dist_sq(a.data(), b.data(), n) - S.dist_sq(a.data(), b.data(), n)) <= 1e-12 * scale);
            auto y1 = b, y2 = b;
            V->axpy(-1.25, a.data(), y1.data(), n);
            S.axpy(-1.25, a.data(), y2.data(), n);
            for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14);
        }
        for (std::size_t len : {1, 3, 4, 9, 16}) {
            const std::size_t count = 37;
            const auto a = random_vec(count * len, 5 * len), t = random_vec(len, 6 * len);
            auto w = random_vec(count, 7 * len);
            for (double& x : w) x = std::abs(x);
            const double r1 = V->weighted_block_dist_sq(a.data(), w.data(), t.data(), count, len);
            const double r2 = S.weighted_block_dist_sq(a.data(), w.data(), t.data(), count, len);
            CHECK(r1 == doctest::Approx(r2).epsilon(1e-12));
        }
    }
}

TEST_CASE("active table honours the scalar override") {
    const char* force = std::getenv("RECT2_FORCE_SCALAR");
    const std::string name = kernels::active().name;
    if (force && std::string(force) != "0") {
        CHECK(name == kernels::scalar_table().name);
    } else if (!variants().empty()) {
        CHECK(name != kernels::scalar_table().name);
    } else {
        CHECK(name == kernels::scalar_table().name);
    }
}
