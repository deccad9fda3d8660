#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <random>

#include "rect2/elliptic.hpp"

namespace rect2 {

double AprioriReport::constant(const std::string& name) const {
    for (const auto& [n, v] : constants)
        if (n == name) return v;
    throw std::out_of_range("AprioriReport: no estimate named " + name);
}

std::string AprioriReport::to_json() const {
    nlohmann::json j;
    j["spacing"] = spacing;
    auto& recs = j["records"] = nlohmann::json::array();
    for (const auto& r : records) recs.push_back({{"name", r.name}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"ratio", r.ratio()}});
    auto& cs = j["constants"] = nlohmann::json::object();
    for (const auto& [n, v] : constants) cs[n] = v;
    return j.dump();
}

namespace {

// Sum of a few random plane waves; defined in continuum coordinates so that
// the same data is sampled on every grid.
struct RandomSmooth {
    int m = 1, ncomp = 1;
    struct Wave {
        std::vector<double> freq;
        double amp, phase;
    };
    std::vector<std::vector<Wave>> comps;

    RandomSmooth(int m_, int nc, double amplitude, int waves, std::mt19937_64& rng) : m(m_), ncomp(nc) {
        std::uniform_real_distribution<double> uf(-3.0, 3.0), ua(-1.0, 1.0), up(0.0, 2.0 * M_PI);
        comps.resize(nc);
        for (auto& c : comps)
            for (int w = 0; w < waves; ++w) {
                Wave wv;
                for (int i = 0; i < m; ++i) wv.freq.push_back(uf(rng));
                wv.amp = amplitude * ua(rng) / waves;
                wv.phase = up(rng);
                c.push_back(wv);
            }
    }
    void operator()(const double* x, double* out) const {
        for (int c = 0; c < ncomp; ++c) {
            double s = 0.0;
            for (const auto& w : comps[c]) {
                double a = w.phase;
                for (int i = 0; i < m; ++i) a += w.freq[i] * x[i];
                s += w.amp * std::sin(a);
            }
            out[c] = s;
        }
    }
    SampledField sample(const GridDomain& d) const {
        return SampledField::sample(d, ncomp, [this](const double* x, double* o) { (*this)(x, o); });
    }
};

// Least squares affine fit of u over the nodes of the ball.
SampledField affine_fit(const SampledField& u, const Ball& b) {
    const GridDomain& d = u.domain;
    const int m = d.dim(), k = u.ncomp;
    std::vector<std::size_t> nodes;
    for (std::size_t idx : ball_nodes(d, b))
        if (u.valid(idx)) nodes.push_back(idx);
    Eigen::MatrixXd X(nodes.size(), m + 1);
    Eigen::MatrixXd Y(nodes.size(), k);
    std::vector<double> x(m);
    for (std::size_t r = 0; r < nodes.size(); ++r) {
        d.coords(nodes[r], x.data());
        X(r, 0) = 1.0;
        for (int i = 0; i < m; ++i) X(r, i + 1) = x[i] - b.center[i];
        for (int c = 0; c < k; ++c) Y(r, c) = u.at(nodes[r])[c];
    }
    Eigen::MatrixXd coef = X.colPivHouseholderQr().solve(Y);
    return SampledField::sample(d, k, [&](const double* p, double* o) {
        for (int c = 0; c < k; ++c) {
            double v = coef(0, c);
            for (int i = 0; i < m; ++i) v += coef(i + 1, c) * (p[i] - b.center[i]);
            o[c] = v;
        }
    });
}

SampledField gradient(const SampledField& u) { return weak_gradient(u, 1); }

}  // namespace

AprioriReport apriori_suite(const Integrand& F, const GridDomain& d, const Ball& b, const AprioriOptions& opt) {
    const int m = d.dim(), k = F.k, n = m * k;
    if (F.m != m) throw std::invalid_argument("apriori_suite: integrand dimension mismatch");
    const double r = b.r;
    const BallRegion R = BallRegion::make(d, b);
    const Ball half{b.center, 0.5 * r};
    DualNorm dual2(d, b, 2.0);
    DualNorm dual1(d, b, 1.0);
    const double eps = std::isfinite(F.epsilon) ? F.epsilon : opt.solver.ellipticity_margin;
    const double c_ell = 1.0 - eps, M_ell = 1.0 + eps;
    const double lip = std::isfinite(F.lipD2F) ? F.lipD2F : 0.0;

    AprioriReport rep;
    rep.spacing = d.spacing();
    std::mt19937_64 rng(opt.seed);
    auto push = [&](const std::string& name, double lhs, double rhs) { rep.records.push_back({name, lhs, rhs}); };
    auto dual_of = [&](const DualNorm& D, const DistributionRep& T) { return D.value(T); };

    for (int trial = 0; trial < opt.trials; ++trial) {
        // coefficient field A(x) = D2F(sigma(x)) kept within the ellipticity margin
        RandomSmooth sig(m, n, 0.6, 3, rng);
        SampledField A(d, n * n);
        double scale = 1.0;
        for (int attempt = 0; attempt < 20; ++attempt) {
            bool ok = true;
            std::vector<double> s(n), H(n * n);
            std::vector<double> x(m);
            for (std::size_t idx = 0; idx < d.size(); ++idx) {
                d.coords(idx, x.data());
                sig(x.data(), s.data());
                for (double& v : s) v *= scale;
                F.D2F(s.data(), A.at(idx));
                if (ok && R.unknown_of[idx] >= 0 && upsilon_distance(F, s.data()) > opt.solver.ellipticity_margin) ok = false;
            }
            if (ok) break;
            scale *= 0.5;
        }
        RandomSmooth dens(m, k, 2.0, 3, rng), flux(m, n, 1.0, 3, rng);
        DistributionRep T;
        T.codim = k;
        T.density = dens.sample(d);
        T.flux = flux.sample(d);
        T.validate();

        // global estimate: zero boundary values
        SampledField u0 = solve_dirichlet_linear(R, &A, T, opt.solver);
        const double T2 = dual_of(dual2, T);
        push("global", lp_seminorm(gradient(u0), 2.0, b), T2);

        // interior and second order estimates for a nonlinear solution
        RandomSmooth bnd(m, k, 0.5, 4, rng);
        std::vector<double> y(k);
        std::uniform_real_distribution<double> uy(-1.0, 1.0);
        for (double& v : y) v = uy(rng);
        SampledField g = bnd.sample(d);
        SampledField v = solve_dirichlet_nonlinear(F, g, y, R, opt.solver);
        DistributionRep Ty = DistributionRep::constant(d, y);
        const double Ty2 = dual_of(dual2, Ty);
        const double Ty_l2 = lp_seminorm(Ty.density.value(), 2.0, b);
        const double v1 = lp_seminorm(v, 1.0, b);
        push("interior", lp_seminorm(gradient(v), 2.0, half), std::pow(r, -m - 1.0 + 0.5 * m) * v1 + Ty2);
        SampledField P = affine_fit(v, b);
        push("second_order", lp_seminorm(weak_gradient(v, 2), 2.0, half),
             std::pow(r, -2.0 - m + 0.5 * m) * lp_seminorm(v - P, 1.0, b) + Ty_l2);

        // difference of two solutions of L_F = 0
        RandomSmooth bnd2(m, k, 0.1, 4, rng);
        SampledField g2 = g + bnd2.sample(d);
        SampledField w1 = solve_dirichlet_nonlinear(F, g, {}, R, opt.solver);
        SampledField w2 = solve_dirichlet_nonlinear(F, g2, {}, R, opt.solver, nullptr, &w1);
        const double diff1 = std::pow(r, -m - 1.0) * lp_seminorm(w2 - w1, 1.0, b);
        SampledField Pw = affine_fit(w1, b);
        const double dev1 = std::pow(r, -m - 1.0) * lp_seminorm(w1 - Pw, 1.0, b);
        push("affine", std::pow(r, 1.0 - 0.5 * m) * lp_seminorm(weak_gradient(w2 - w1, 2), 2.0, half),
             diff1 + dev1 * lip * diff1);

        // energy comparison: u = boundary extension g, v solves L_F(v) = y
        SampledField Pg = affine_fit(g, b);
        push("energy_comparison", lp_seminorm(gradient(v - g), 2.0, b),
             (M_ell * lp_seminorm(gradient(g - Pg), 2.0, b) + Ty2) / c_ell);

        // L1 comparison between v and the extension g, which share boundary values
        {
            auto ELv = apply_EL(F, v, false), ELg = apply_EL(F, g, false);
            DistributionRep Td = ELv.flux_form - ELg.flux_form;
            const double T1 = dual_of(dual1, Td);
            const double s = lp_seminorm(gradient(g - Pg), 2.0, b) + lp_seminorm(gradient(v - Pg), 2.0, b);
            push("l1_comparison", std::pow(r, -1.0 - m) * lp_seminorm(v - g, 1.0, b),
                 std::pow(r, -1.0 * m) * (T1 + lip * s * s));
        }

        // L1 estimate for a constant coefficient operator
        {
            std::vector<double> sc(n);
            std::vector<double> cen = b.center;
            sig(cen.data(), sc.data());
            for (double& q : sc) q *= scale;
            SampledField Ac(d, n * n);
            std::vector<double> H(n * n);
            F.D2F(sc.data(), H.data());
            for (std::size_t idx = 0; idx < d.size(); ++idx) std::copy(H.begin(), H.end(), Ac.at(idx));
            SampledField uc = solve_dirichlet_linear(R, &Ac, T, opt.solver);
            push("l1_estimate", lp_seminorm(uc, 1.0, b), r * dual_of(dual1, T));
        }
    }
    std::map<std::string, double> best;
    std::vector<std::string> order;
    for (const auto& rec : rep.records) {
        if (!best.count(rec.name)) order.push_back(rec.name);
        best[rec.name] = std::max(best[rec.name], rec.ratio());
    }
    for (const auto& nme : order) rep.constants.emplace_back(nme, best[nme]);
    return rep;
}

}  // namespace rect2
