#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "rect2/dual.hpp"
#include "rect2/grid.hpp"

using namespace rect2;

namespace {

SampledField quadratic(const GridDomain& d) {
    return SampledField::scalar(d, [](const double* x) { return 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[0] + 3.0 * x[0] * x[1]; });
}

}  // namespace

TEST_CASE("grid indexing round trip") {
    const GridDomain d(3, {-1.0, 0.0, 2.0}, {4, 5, 6}, 0.25);
    CHECK(d.size() == 120);
    CHECK(d.stride(0) == 30);
    CHECK(d.stride(2) == 1);
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        int mi[3];
        d.multi_index(idx, mi);
        CHECK(d.linear_index(mi) == idx);
        const auto x = d.coords(idx);
        CHECK(d.nearest_node(x.data()) == idx);
    }
    CHECK(d.neighbor(0, 0, -1) == GridDomain::npos);
    CHECK(d.neighbor(0, 1, 1) == d.stride(1));
    const double far[3] = {5.0, 0.0, 2.0};
    CHECK(d.nearest_node(far) == GridDomain::npos);
    CHECK_THROWS(GridDomain(2, {0.0, 0.0}, {3, 3}, -1.0));
}

TEST_CASE("from_extent and cube") {
    const GridDomain c = GridDomain::cube(2, 1.0, 0.125);
    CHECK(c.counts()[0] == 17);
    CHECK(c.origin()[1] == -1.0);
    const GridDomain e = GridDomain::from_extent({0.0, 0.0}, {1.0, 0.5}, 0.1);
    CHECK(e.counts()[0] == 11);
    CHECK(e.counts()[1] == 6);
}

TEST_CASE("lp seminorm of a constant on a disc") {
    const GridDomain d = GridDomain::cube(2, 1.0, 1.0 / 256.0);
    const SampledField one = SampledField::scalar(d, [](const double*) { return 2.0; });
    const Ball b{{0.1, -0.2}, 0.5};
    const double area = M_PI * 0.25;
    CHECK(lp_seminorm(one, 1.0, b) == doctest::Approx(2.0 * area).epsilon(5e-3));
    CHECK(lp_seminorm(one, 2.0, b) == doctest::Approx(2.0 * std::sqrt(area)).epsilon(5e-3));
    CHECK(lp_seminorm(one, 3.0, b) == doctest::Approx(2.0 * std::cbrt(area)).epsilon(5e-3));
    CHECK(lp_seminorm(one, kInf, b) == 2.0);
    const auto full = lp_seminorm_ex(one, 1.0, b);
    CHECK(full.coverage == 1.0);
    // a ball sticking out of the box loses coverage
    const auto part = lp_seminorm_ex(one, 1.0, Ball{{1.0, 0.0}, 0.5});
    CHECK(part.coverage == doctest::Approx(0.5).epsilon(0.02));
    CHECK_THROWS(lp_seminorm(one, 0.5, b));
    CHECK_THROWS(lp_seminorm(one, 1.0, Ball{{5.0, 5.0}, 0.5}));
}

TEST_CASE("weak gradient is exact on quadratics") {
    const GridDomain d = GridDomain::cube(2, 1.0, 0.05);
    const SampledField u = quadratic(d);
    const SampledField Du = weak_gradient(u, 1);
    const SampledField D2u = weak_gradient(u, 2);
    CHECK(Du.ncomp == 2);
    CHECK(D2u.ncomp == 4);
    int checked = 0;
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        if (!D2u.valid(idx)) continue;
        ++checked;
        const auto x = d.coords(idx);
        CHECK(Du.at(idx)[0] == doctest::Approx(2.0 + x[0] + 3.0 * x[1]));
        CHECK(Du.at(idx)[1] == doctest::Approx(-1.0 + 3.0 * x[0]));
        CHECK(D2u.at(idx)[0] == doctest::Approx(1.0));
        CHECK(D2u.at(idx)[1] == doctest::Approx(3.0));
        CHECK(D2u.at(idx)[2] == doctest::Approx(3.0));
        CHECK(D2u.at(idx)[3] == doctest::Approx(0.0).epsilon(1e-9));
    }
    CHECK(checked > 1000);
    // boundary nodes have no centred stencil
    CHECK_FALSE(Du.valid(0));
}

TEST_CASE("interpolation and scale_translate reproduce affine maps") {
    const GridDomain d = GridDomain::cube(2, 1.0, 0.1);
    const SampledField u = SampledField::scalar(d, [](const double* x) { return 0.5 + 2.0 * x[0] - 3.0 * x[1]; });
    const double p[2] = {0.1234, -0.4321};
    double v = 0.0;
    REQUIRE(interpolate(u, p, &v));
    CHECK(v == doctest::Approx(0.5 + 2.0 * p[0] - 3.0 * p[1]));
    const double out[2] = {3.0, 0.0};
    CHECK_FALSE(interpolate(u, out, &v));
    // r^{-1} u(a + r x): slope preserved, offset u(a)/r
    const std::vector<double> a = {0.2, 0.1};
    const double r = 0.25;
    const SampledField s = scale_translate(u, a, r);
    const double ua = 0.5 + 2.0 * a[0] - 3.0 * a[1];
    for (std::size_t idx = 0; idx < s.size(); idx += 7) {
        if (!s.valid(idx)) continue;
        const auto x = s.domain.coords(idx);
        CHECK(s.at(idx)[0] == doctest::Approx(ua / r + 2.0 * x[0] - 3.0 * x[1]));
    }
}

TEST_CASE("field io round trip") {
    const GridDomain d(2, {-0.5, 0.25}, {7, 5}, 0.125);
    SampledField f = SampledField::sample(d, 2, [](const double* x, double* o) {
        o[0] = std::sin(3 * x[0]) + 1e-17;
        o[1] = x[0] * x[1] / 3.0;
    });
    f.mask[3] = 0;
    for (bool binary : {true, false}) {
        std::stringstream ss;
        write_field(ss, f, binary);
        const SampledField g = read_field(ss);
        CHECK(g.domain.same_as(d));
        CHECK(g.ncomp == 2);
        CHECK(g.mask == f.mask);
        // masked nodes carry no payload
        for (std::size_t i = 0; i < f.values.size(); ++i)
            if (f.mask[i / 2]) CHECK(g.values[i] == f.values[i]);
    }
    std::stringstream bad("{\"not\":\"a header\"}\n");
    CHECK_THROWS(read_field(bad));
}

TEST_CASE("field arithmetic requires matching grids") {
    const GridDomain d = GridDomain::cube(2, 1.0, 0.25), e = GridDomain::cube(2, 1.0, 0.5);
    const SampledField a = quadratic(d), b = quadratic(e);
    CHECK_THROWS(a - b);
    const SampledField z = a - a;
    for (double v : z.values) CHECK(v == 0.0);
    const SampledField t = scaled(a, 2.0) - (a + a);
    for (double v : t.values) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("loglog slope") {
    CHECK(loglog_slope({1.0, 2.0, 4.0}, {3.0, 12.0, 48.0}) == doctest::Approx(2.0));
    CHECK(std::isnan(loglog_slope({1.0}, {1.0})));
}

TEST_CASE("dual norm q = 2 matches the Poisson oracle") {
    // sup int theta over theta in W^{1,2}_0(B_r), |D theta|_2 <= 1 is |D w|_2 with -Delta w = 1, i.e. sqrt(pi r^4 / 8)
    const double h = 1.0 / 128.0, r = 0.5;
    const GridDomain d = GridDomain::cube(2, 1.0, h);
    const DistributionRep T = DistributionRep::constant(d, {1.0});
    const Ball b{{0.0, 0.0}, r};
    const double oracle = std::sqrt(M_PI * std::pow(r, 4) / 8.0);
    double cov = 0.0;
    CHECK(dual_norm(T, 2.0, b, &cov) == doctest::Approx(oracle).epsilon(0.02));
    CHECK(cov == 1.0);
    // homogeneity and the zero distribution
    const DistributionRep T3 = DistributionRep::constant(d, {3.0});
    CHECK(dual_norm(T3, 2.0, b) == doctest::Approx(3.0 * dual_norm(T, 2.0, b)));
    const DistributionRep Z = T - T;
    CHECK(dual_norm(Z, 2.0, b) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("dual norm q = 1 lower bound against the cone") {
    // for q = 1 the sup over Lipschitz-1 test functions of int theta is attained by the cone r - |x|
    const double h = 1.0 / 128.0, r = 0.5;
    const GridDomain d = GridDomain::cube(2, 1.0, h);
    const DistributionRep T = DistributionRep::constant(d, {1.0});
    const DualNorm N(d, Ball{{0.0, 0.0}, r}, 1.0);
    CHECK_FALSE(N.exact());
    CHECK(N.dictionary_size() > 3);
    std::vector<double> t;
    std::vector<unsigned char> valid;
    T.nodal_load(t, valid);
    const double cone = M_PI * std::pow(r, 3) / 3.0;
    const double v = N.value_load(t, 1);
    CHECK(v <= cone * 1.01);
    CHECK(v >= cone * 0.8);
}

TEST_CASE("best constant recovers a constant density") {
    const GridDomain d = GridDomain::cube(2, 1.0, 1.0 / 64.0);
    const DistributionRep T = DistributionRep::constant(d, {0.75});
    std::vector<double> t;
    std::vector<unsigned char> valid;
    T.nodal_load(t, valid);
    for (double q : {1.0, 2.0}) {
        const DualNorm N(d, Ball{{0.1, 0.0}, 0.4}, q);
        const auto y = N.best_constant(t, 1);
        REQUIRE(y.size() == 1);
        CHECK(y[0] == doctest::Approx(0.75).epsilon(1e-3));
        CHECK(N.value_load_minus_constant(t, 1, y) <= 1e-4);
    }
}

TEST_CASE("flux and density representations agree") {
    // T = div g as a flux equals the density -div g: T(theta) = -int g . D theta = int (div g) theta
    const GridDomain d = GridDomain::cube(2, 1.0, 1.0 / 64.0);
    const SampledField g = SampledField::sample(d, 2, [](const double* x, double* o) {
        o[0] = x[0] * x[0];
        o[1] = x[0] * x[1];
    });
    const SampledField div = SampledField::scalar(d, [](const double* x) { return 3.0 * x[0]; });
    const DistributionRep Tf = DistributionRep::from_flux(g, 1);
    const DistributionRep Td = DistributionRep::from_density(div);
    const SampledField theta = SampledField::scalar(d, [](const double* x) {
        return smooth_bump(std::sqrt(x[0] * x[0] + x[1] * x[1]) / 0.6);
    });
    CHECK(Tf.action(theta) == doctest::Approx(Td.action(theta)).epsilon(1e-3));
}

TEST_CASE("transition profile") {
    double v, d1, d2;
    transition_profile(0.25, v, d1, d2);
    CHECK(v == 1.0);
    CHECK(d1 == 0.0);
    transition_profile(1.5, v, d1, d2);
    CHECK(v == 0.0);
    transition_profile(0.75, v, d1, d2);
    CHECK(v > 0.0);
    CHECK(v < 1.0);
    CHECK(d1 < 0.0);
    const double e = 1e-6;
    CHECK((transition(0.75 + e) - transition(0.75 - e)) / (2 * e) == doctest::Approx(d1).epsilon(1e-5));
    CHECK(smooth_bump(0.0) == 1.0);
    CHECK(smooth_bump(1.0) == 0.0);
}
