#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "rect2/synth.hpp"

using namespace rect2;

namespace {

double norm3(const double* v) { return std::hypot(v[0], v[1], v[2]); }

bool same_positions(const DiscreteVarifold& a, const DiscreteVarifold& b) {
    return a.size() == b.size() && a.positions() == b.positions();
}

}  // namespace

TEST_CASE("sphere ground truth") {
    const double rho = 1.5;
    const auto S = gen_special("sphere", {{"rho", rho}, {"count", 5000.0}, {"cx", 0.5}}, 1);
    CHECK(S.truth.kind == "sphere");
    CHECK(S.truth.size() == S.V.size());
    CHECK(S.V.total_mass() == doctest::Approx(4.0 * M_PI * rho * rho).epsilon(1e-6));
    for (std::size_t i = 0; i < S.V.size(); i += 97) {
        const double* z = S.V.z(i);
        const double r[3] = {z[0] - 0.5, z[1], z[2]};
        CHECK(norm3(r) == doctest::Approx(rho));
        const double* h = S.truth.h(i);
        CHECK(norm3(h) == doctest::Approx(2.0 / rho));
        // points towards the centre
        CHECK(h[0] * r[0] + h[1] * r[1] + h[2] * r[2] == doctest::Approx(-2.0));
        // tangent plane is orthogonal to the radius
        const double* T = S.truth.T(i);
        for (int a = 0; a < 3; ++a) {
            double Tr = 0.0;
            for (int b = 0; b < 3; ++b) Tr += T[a * 3 + b] * r[b];
            CHECK(std::abs(Tr) <= 1e-12);
            for (int b = 0; b < 3; ++b) CHECK(T[a * 3 + b] == doctest::Approx(S.V.P(i)[a * 3 + b]).epsilon(1e-12));
        }
        CHECK(S.truth.has_tangent[i]);
    }
}

TEST_CASE("cylinder ground truth") {
    const auto C = gen_special("cylinder", {{"rho", 0.5}}, 2);
    for (std::size_t i = 0; i < C.V.size(); i += 131) {
        const double* z = C.V.z(i);
        const double* h = C.truth.h(i);
        CHECK(std::hypot(z[0], z[1]) == doctest::Approx(0.5));
        CHECK(norm3(h) == doctest::Approx(2.0));
        CHECK(h[2] == 0.0);
        CHECK(h[0] * z[0] + h[1] * z[1] == doctest::Approx(-1.0));
    }
}

TEST_CASE("crossing planes mark the singular line") {
    const auto X = gen_special("crossing_planes", {{"spacing", 0.05}}, 3);
    std::size_t singular = 0;
    for (std::size_t i = 0; i < X.V.size(); ++i) {
        const double* z = X.V.z(i);
        const double d = std::hypot(z[1], z[2]);
        CHECK(norm3(X.truth.h(i)) == 0.0);
        if (!X.truth.has_tangent[i]) {
            ++singular;
            CHECK(d < 0.05);
        } else {
            CHECK(d >= 0.025 - 1e-12);
        }
        CHECK((X.truth.piece[i] == 0 || X.truth.piece[i] == 1));
    }
    CHECK(singular > 0);
}

TEST_CASE("tangent touch pieces") {
    const auto S = gen_special("tangent_touch", {{"spacing", 0.03}}, 4);
    std::size_t pieces[2] = {0, 0};
    for (std::size_t i = 0; i < S.V.size(); ++i) {
        const int p = S.truth.piece[i];
        REQUIRE((p == 0 || p == 1));
        ++pieces[p];
        const double* z = S.V.z(i);
        if (p == 0) {
            CHECK(z[2] == 0.0);
            CHECK(norm3(S.truth.h(i)) == 0.0);
        } else {
            CHECK(std::hypot(z[0], z[1], z[2] - 1.0) == doctest::Approx(1.0));
            CHECK(norm3(S.truth.h(i)) == doctest::Approx(2.0));
        }
    }
    CHECK(pieces[0] > 100);
    CHECK(pieces[1] > 100);
}

TEST_CASE("generators are deterministic in the seed") {
    for (const char* kind : {"sphere", "cylinder", "crossing_planes"}) {
        CAPTURE(kind);
        const auto a = gen_special(kind, {}, 11), b = gen_special(kind, {}, 11), c = gen_special(kind, {}, 12);
        CHECK(same_positions(a.V, b.V));
        CHECK_FALSE(same_positions(a.V, c.V));
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_WITH(gen_special("torus", {}), doctest::Contains("unknown kind"));
    CHECK_THROWS_WITH(gen_special("sphere", {{"radius", 1.0}}), doctest::Contains("unknown parameter"));
    CHECK_THROWS(gen_special("sphere", {{"rho", -1.0}}));
    CHECK_THROWS(special_defaults("torus"));
    CHECK(special_defaults("c1alpha_model").at("alpha") == 0.5);
}

TEST_CASE("graph function derivatives") {
    const std::vector<GraphFunction> fs = {graph_sine(2, 0.3), graph_c1alpha(0.2, 0.5), graph_plane(2)};
    const double e = 1e-6;
    for (const auto& g : fs) {
        const double x[2] = {0.37, -0.21};
        double u, Du[2], D2u[4];
        g.eval(x, &u, Du, D2u);
        for (int i = 0; i < 2; ++i) {
            double xp[2] = {x[0], x[1]}, xm[2] = {x[0], x[1]};
            xp[i] += e;
            xm[i] -= e;
            double up, um, Dp[2], Dm[2], H[4];
            g.eval(xp, &up, Dp, H);
            g.eval(xm, &um, Dm, H);
            CHECK(Du[i] == doctest::Approx((up - um) / (2 * e)).epsilon(1e-6));
            for (int j = 0; j < 2; ++j) CHECK(D2u[j * 2 + i] == doctest::Approx((Dp[j] - Dm[j]) / (2 * e)).epsilon(1e-5));
        }
    }
}

TEST_CASE("sine graph curvature") {
    // u = eps sin(x1): |h| = |u''| / (1 + u'^2)^{3/2}, pointing to the concave side
    const double eps = 0.3;
    GraphSampling gs;
    gs.lo = {-1.0, -0.2};
    gs.hi = {1.0, 0.2};
    gs.spacing = 0.05;
    const auto S = gen_graph_varifold(graph_sine(2, eps), gs);
    for (std::size_t i = 0; i < S.V.size(); i += 3) {
        const double* z = S.V.z(i);
        const double d1 = eps * std::cos(z[0]), d2 = -eps * std::sin(z[0]);
        const double k = d2 / std::pow(1.0 + d1 * d1, 1.5);
        const double* h = S.truth.h(i);
        CHECK(norm3(h) == doctest::Approx(std::abs(k)).epsilon(1e-9));
        CHECK(h[1] == doctest::Approx(0.0));
        if (std::abs(k) > 1e-3) CHECK((h[2] > 0.0) == (d2 > 0.0));
        CHECK(z[2] == doctest::Approx(eps * std::sin(z[0])));
    }
}

TEST_CASE("stacked graph sheets") {
    GraphSampling gs;
    gs.lo = {-0.5, -0.5};
    gs.hi = {0.5, 0.5};
    gs.spacing = 0.05;
    gs.Q = 2;
    gs.offset = 0.1;
    gs.noise = 0.01;
    gs.seed = 5;
    const auto S = gen_graph_varifold(graph_sine(2, 0.2), gs);
    REQUIRE(S.V.size() % 2 == 0);
    const std::size_t half = S.V.size() / 2;
    double mean = 0.0;
    for (std::size_t i = 0; i < half; ++i) {
        const double* a = S.V.z(i);
        const double* b = S.V.z(i + half);
        CHECK(a[0] == b[0]);
        CHECK(std::abs(b[2] - a[2] - 0.1) <= 0.02 + 1e-12);
        mean += 0.5 * (a[2] + b[2]) - (0.2 * std::sin(a[0]) + 0.05);
    }
    CHECK(std::abs(mean / half) <= 1e-3);
    gs.Q = 0;
    CHECK_THROWS(gen_graph_varifold(graph_sine(2, 0.2), gs));
}

TEST_CASE("polar grading") {
    PolarGrading g;
    g.s0 = 0.001;
    g.focus = 0.03;
    g.growth = 0.1;
    g.cap = 0.02;
    CHECK(g.spacing(0.01) == 0.001);
    CHECK(g.spacing(0.05) == doctest::Approx(0.003));
    CHECK(g.spacing(1.0) == 0.02);
}

TEST_CASE("ground truth round trip") {
    const auto X = gen_special("crossing_planes", {{"spacing", 0.1}}, 6);
    std::stringstream ss;
    X.truth.write(ss);
    const GroundTruth G = GroundTruth::read(ss);
    CHECK(G.kind == X.truth.kind);
    CHECK(G.seed == 6);
    CHECK(G.n == 3);
    CHECK(G.params == X.truth.params);
    CHECK(G.tangent == X.truth.tangent);
    CHECK(G.curvature == X.truth.curvature);
    CHECK(G.has_tangent == X.truth.has_tangent);
    CHECK(G.piece == X.truth.piece);
    std::string text = ss.str();
    std::stringstream cut(text.substr(0, text.rfind('\n', text.size() - 2) + 1));
    CHECK_THROWS(GroundTruth::read(cut));
}
