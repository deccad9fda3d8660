#include <doctest.h>

#include <cmath>
#include <json.hpp>
#include <sstream>
#include <vector>

#include "rect2/decay.hpp"
#include "rect2/synth.hpp"

using namespace rect2;

namespace {

const double kFlat[9] = {1, 0, 0, 0, 1, 0, 0, 0, 0};

SynthResult graded_sphere() {
    return gen_special("sphere", {{"graded", 1.0}, {"s0", 0.0015}, {"focus", 0.06}, {"growth", 0.1}, {"cap", 0.03}}, 1);
}

DiscreteVarifold plane(double half, double s) {
    GraphSampling gs;
    gs.lo = {-half, -half};
    gs.hi = {half, half};
    gs.spacing = s;
    return gen_graph_varifold(graph_plane(2), gs).V;
}

// rotate the planes of the particles within distance r of a about the x1 axis
DiscreteVarifold tilt_near(const DiscreteVarifold& V, const double* a, double r, double angle) {
    DiscreteVarifold W = V;
    const double c = std::cos(angle), s = std::sin(angle);
    const double R[9] = {1, 0, 0, 0, c, -s, 0, s, c};
    for (std::size_t i : W.in_ball(a, r)) {
        double* P = W.P_mutable(i);
        double RP[9], out[9];
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y) {
                RP[x * 3 + y] = 0.0;
                for (int k = 0; k < 3; ++k) RP[x * 3 + y] += R[x * 3 + k] * P[k * 3 + y];
            }
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y) {
                out[x * 3 + y] = 0.0;
                for (int k = 0; k < 3; ++k) out[x * 3 + y] += RP[x * 3 + k] * R[y * 3 + k];
            }
        std::copy(out, out + 9, P);
    }
    return W;
}

std::size_t south_pole(const DiscreteVarifold& V) {
    const double p[3] = {0.0, 0.0, -1.0};
    return V.nearest(p);
}

}  // namespace

TEST_CASE("theoretical decay exponent") {
    CHECK(theory_tau(1, 1.0) == 1.0);
    CHECK(theory_tau(2, 2.0) == 1.0);
    CHECK(theory_tau(2, 1.0) == 1.0);
    CHECK(theory_tau(3, 2.0) == 1.0);
    CHECK(theory_tau(3, 1.0) == doctest::Approx(0.75));
    CHECK(theory_tau(4, 1.0) == doctest::Approx(4.0 / 6.0));
    CHECK(theory_tau(4, 4.0 / 3.0) == 1.0);
    // continuous at p = 2m/(m+2)
    CHECK(theory_tau(5, 10.0 / 7.0 - 1e-9) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("flat plane has no tilt decay to fit") {
    const DiscreteVarifold V = plane(1.0, 0.005);
    const double a[3] = {0.0, 0.0, 0.0};
    const DecayReport rep = decay_scan(V, a, kFlat, 0.5);
    CHECK(rep.radii.size() == 4);
    for (std::size_t k = 0; k < rep.phi.size(); ++k) CHECK(rep.phi[k] <= 1e-12);
    CHECK_FALSE(rep.tau_defined);
    CHECK(cylinder_tilt(V, a, kFlat, 0.3) <= 1e-12);
    CHECK(rep.resolved[0]);
    CHECK(rep.resolved[1]);
    CHECK_FALSE(rep.resolved[3]);
}

TEST_CASE("coarse sampling is under-resolved") {
    const auto S = gen_special("sphere", {{"count", 200.0}}, 2);
    CHECK_THROWS_WITH_AS(decay_scan(S.V, S.V.z(0), S.truth.T(0), 0.05), doctest::Contains("under-resolved"), AnalysisError);
}

TEST_CASE("sphere tilt decays at rate one") {
    const auto S = graded_sphere();
    const std::size_t i = south_pole(S.V);
    const DecayReport rep = decay_scan(S.V, S.V.z(i), S.truth.T(i), 0.2);
    REQUIRE(rep.tau_defined);
    CHECK(rep.tau_hat == doctest::Approx(1.0).epsilon(0.1));
    CHECK(rep.tau_lo <= rep.tau_hat);
    CHECK(rep.tau_hi >= rep.tau_hat);
    CHECK(rep.theory_tau == 1.0);
    const auto js = nlohmann::json::parse(rep.to_json());
    CHECK(js["tau_hat"].get<double>() == rep.tau_hat);
    // one CSV row per radius, each with as many cells as the header
    const std::string rows = decay_csv_rows(rep, 7);
    std::istringstream is(rows);
    std::string line;
    const auto cells = [](const std::string& s) { return std::count(s.begin(), s.end(), ',') + 1; };
    std::size_t n = 0;
    while (std::getline(is, line)) {
        ++n;
        CHECK(cells(line) == cells(decay_csv_header()));
        CHECK(line.rfind("7,", 0) == 0);
    }
    CHECK(n == rep.radii.size());
}

TEST_CASE("c1alpha model decays at rate alpha") {
    const auto C = gen_special("c1alpha_model", {}, 1);
    const double a[3] = {0.0, 0.0, 0.0};
    const DecayReport rep = decay_scan(C.V, a, kFlat, 0.2);
    REQUIRE(rep.tau_defined);
    CHECK(rep.tau_hat == doctest::Approx(0.5).epsilon(0.2));
}

TEST_CASE("quarter induction on the sphere and injected excess") {
    const auto S = graded_sphere();
    const std::size_t i = south_pole(S.V);
    const double* a = S.V.z(i);
    const double* T = S.truth.T(i);
    const std::vector<double> radii = {0.2, 0.05, 0.0125};
    const InductionReport clean = quarter_induction(S.V, a, T, radii);
    CHECK(clean.closes);
    CHECK(clean.hypotheses_ok);
    REQUIRE(clean.steps.size() == 2);
    CHECK(clean.delta == doctest::Approx(1.0 / 32.0));
    CHECK(clean.Delta3_bound >= clean.Delta3);
    const auto js = nlohmann::json::parse(clean.to_json());
    CHECK(js["closes"].get<bool>());

    // calibrated on clean data, then a tilted patch inside the smallest ball
    InductionOptions opt;
    opt.Delta2 = clean.Delta2;
    opt.gamma = clean.gamma;
    const DiscreteVarifold W = tilt_near(S.V, a, 0.5 * radii.back(), 0.1);
    const InductionReport hit = quarter_induction(W, a, T, radii, opt);
    CHECK_FALSE(hit.closes);
    CHECK(hit.steps[0].pass());
    CHECK_FALSE(hit.steps[1].pass_contraction);

    CHECK_THROWS(quarter_induction(S.V, a, T, {0.2, 0.1}));
}

TEST_CASE("l2 differentiability quotient on the sphere") {
    const auto S = graded_sphere();
    const std::size_t i = south_pole(S.V);
    const L2DiffReport rep = l2_diff_check(S.V, S.V.z(i), {0.2, 0.05, 0.0125});
    REQUIRE(rep.rows.size() == 3);
    for (const auto& row : rep.rows) CHECK(row.resolved);
    CHECK(rep.inversions <= 1);
    CHECK(rep.floor > 0.0);
    CHECK(rep.final_quotient <= 5.0 * rep.floor);
    // the derivative of R on a unit sphere has size ~ 1 per tangent direction
    CHECK(rep.kappa == doctest::Approx(1.0).epsilon(0.1));
    for (int k = 0; k < 3; ++k) CHECK(rep.a[k] == S.V.z(i)[k]);
    const double off[3] = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(l2_diff_check(gen_special("sphere", {{"count", 200.0}}, 2).V, off, {0.05}), AnalysisError);
}
