#include "rect2/crit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "rect2/dual.hpp"
#include "rect2/parallel.hpp"

namespace rect2 {

void Jet2::eval(const double* x, double* out) const {
    for (int c = 0; c < k; ++c) {
        double v = value[c];
        for (int i = 0; i < m; ++i) {
            const double di = x[i] - a[i];
            v += gradient[c * m + i] * di;
            for (int j = 0; j < m; ++j) v += 0.5 * hessian[c * m * m + i * m + j] * di * (x[j] - a[j]);
        }
        out[c] = v;
    }
}

bool LimsupProxy::finite(const std::vector<double>& ratios) const {
    if (ratios.empty()) return false;
    for (double r : ratios)
        if (!std::isfinite(r) || r > threshold) return false;
    const std::size_t n = ratios.size();
    const std::size_t from = n >= 3 ? n - 3 : 0;
    for (std::size_t i = from; i + 1 < n; ++i)
        if (ratios[i + 1] > slack * std::max(ratios[i], 1e-12)) return false;
    return true;
}

bool VanishProxy::vanishes(const std::vector<double>& radii, const std::vector<double>& values) const {
    if (values.empty()) return false;
    const std::size_t n = values.size();
    bool below = true;
    for (std::size_t i = n >= 3 ? n - 3 : 0; i < n; ++i) below = below && values[i] <= floor;
    if (below) return true;
    const double s = loglog_slope(radii, values);
    return std::isfinite(s) && s >= min_slope;
}

std::vector<double> quarter_radii(double r0, double spacing, double min_factor) {
    std::vector<double> out;
    for (double r = r0; r >= min_factor * spacing * (1.0 - 1e-12); r *= 0.25) out.push_back(r);
    return out;
}

namespace {

// ||D f||_{p;a,r} of a field that is only needed on the ball, by centered differences
double local_grad_norm(const SampledField& f, const Ball& b, double p) {
    const GridDomain& d = f.domain;
    const int m = d.dim(), k = f.ncomp;
    const double h = d.spacing();
    std::vector<double> g(k * m);
    double acc = 0.0, mx = 0.0;
    std::size_t cnt = 0;
    for (std::size_t idx : ball_nodes(d, b)) {
        bool ok = true;
        for (int i = 0; i < m && ok; ++i) {
            const std::size_t pp = d.neighbor(idx, i, 1), qq = d.neighbor(idx, i, -1);
            if (pp == GridDomain::npos || qq == GridDomain::npos || !f.valid(pp) || !f.valid(qq)) {
                ok = false;
                break;
            }
            for (int c = 0; c < k; ++c) g[c * m + i] = (f.at(pp)[c] - f.at(qq)[c]) / (2.0 * h);
        }
        if (!ok) continue;
        double s = 0.0;
        for (double v : g) s += v * v;
        const double mag = std::sqrt(s);
        ++cnt;
        if (std::isinf(p)) mx = std::max(mx, mag);
        else acc += std::pow(mag, p);
    }
    if (!cnt) throw std::domain_error("ball outside domain");
    if (std::isinf(p)) return mx;
    return std::pow(d.cell_volume() * acc, 1.0 / p);
}

std::vector<std::vector<int>> monomials(int m, int deg) {
    std::vector<std::vector<int>> out;
    std::vector<int> e(m, 0);
    std::function<void(int, int)> rec = [&](int axis, int left) {
        if (axis == m) {
            out.push_back(e);
            return;
        }
        for (int q = 0; q <= left; ++q) {
            e[axis] = q;
            rec(axis + 1, left - q);
        }
        e[axis] = 0;
    };
    rec(0, deg);
    std::stable_sort(out.begin(), out.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
        int sa = 0, sb = 0;
        for (int v : a) sa += v;
        for (int v : b) sb += v;
        return sa < sb;
    });
    return out;
}

double lp_of_diff_with_jet(const SampledField& u, const Jet2& J, const Ball& b, double p) {
    const GridDomain& d = u.domain;
    std::vector<double> x(d.dim()), q(u.ncomp);
    double acc = 0.0, mx = 0.0;
    std::size_t cnt = 0;
    for (std::size_t idx : ball_nodes(d, b)) {
        if (!u.valid(idx)) continue;
        d.coords(idx, x.data());
        J.eval(x.data(), q.data());
        double s = 0.0;
        for (int c = 0; c < u.ncomp; ++c) s += sqr(u.at(idx)[c] - q[c]);
        const double mag = std::sqrt(s);
        ++cnt;
        if (std::isinf(p)) mx = std::max(mx, mag);
        else acc += std::pow(mag, p);
    }
    if (!cnt) throw std::domain_error("ball outside domain");
    if (std::isinf(p)) return mx;
    return std::pow(d.cell_volume() * acc, 1.0 / p);
}

}  // namespace

double harmonic_deficit(const SampledField& u, const Integrand& F, const std::vector<double>& a, double r, double p,
                        int j, const SolverOptions& opt, SampledField* competitor, const SampledField* warm) {
    if (j != 0 && j != 1) throw std::invalid_argument("harmonic_deficit: j must be 0 or 1");
    const Ball b{a, r};
    const BallRegion R = BallRegion::make(u.domain, b);
    SampledField v = solve_dirichlet_nonlinear(F, u, {}, R, opt, nullptr, warm);
    const int m = u.domain.dim();
    SampledField diff = u - v;
    double h = std::pow(r, -m / p) * lp_seminorm(diff, p, b);
    if (j == 1) h += std::pow(r, -m / p + 1.0) * local_grad_norm(diff, b, p);
    if (competitor) *competitor = std::move(v);
    return h;
}

double affine_deficit(const SampledField& u, const std::vector<double>& a, double r) {
    const GridDomain& d = u.domain;
    const int m = d.dim(), k = u.ncomp;
    std::vector<std::size_t> nodes;
    for (std::size_t idx : ball_nodes(d, Ball{a, r}))
        if (u.valid(idx)) nodes.push_back(idx);
    if (nodes.size() < static_cast<std::size_t>(m + 1)) throw std::domain_error("affine_deficit: too few nodes in ball");
    Eigen::MatrixXd X(nodes.size(), m + 1), Y(nodes.size(), k);
    std::vector<double> x(m);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        d.coords(nodes[q], x.data());
        X(q, 0) = 1.0;
        for (int i = 0; i < m; ++i) X(q, i + 1) = (x[i] - a[i]) / r;
        for (int c = 0; c < k; ++c) Y(q, c) = u.at(nodes[q])[c];
    }
    Eigen::MatrixXd res = Y - X * X.colPivHouseholderQr().solve(Y);
    double l1 = 0.0;
    for (Eigen::Index q = 0; q < res.rows(); ++q) l1 += res.row(q).norm();
    return std::pow(r, -m) * d.cell_volume() * l1;
}

Jet2 taylor_fit(const SampledField& u, const std::vector<double>& a, const std::vector<double>& radii, double p,
                std::vector<double>* decay) {
    const GridDomain& d = u.domain;
    const int m = d.dim(), k = u.ncomp;
    if (radii.empty()) throw std::invalid_argument("taylor_fit: no radii");
    Jet2 J;
    J.a = a;
    J.m = m;
    J.k = k;
    J.value.resize(k);
    J.gradient.resize(k * m);
    J.hessian.assign(k * m * m, 0.0);
    if (!interpolate(u, a.data(), J.value.data())) throw std::domain_error("taylor_fit: point outside field");
    const double h = d.spacing();
    std::vector<double> y = a, vp(k), vm(k);
    for (int i = 0; i < m; ++i) {
        y[i] = a[i] + h;
        const bool okp = interpolate(u, y.data(), vp.data());
        y[i] = a[i] - h;
        const bool okm = interpolate(u, y.data(), vm.data());
        y[i] = a[i];
        if (!okp || !okm) throw std::domain_error("taylor_fit: gradient stencil outside field");
        for (int c = 0; c < k; ++c) J.gradient[c * m + i] = (vp[c] - vm[c]) / (2.0 * h);
    }

    const double rmin = *std::min_element(radii.begin(), radii.end());
    std::vector<std::size_t> nodes;
    for (std::size_t idx : ball_nodes(d, Ball{a, rmin}))
        if (u.valid(idx)) nodes.push_back(idx);
    int deg = 4;
    std::vector<std::vector<int>> mons;
    while (deg >= 2) {
        mons = monomials(m, deg);
        if (nodes.size() >= 2 * mons.size()) break;
        --deg;
    }
    if (deg < 2 || nodes.size() < mons.size()) throw std::runtime_error("taylor_fit: rank-deficient fit");
    Eigen::MatrixXd X(nodes.size(), mons.size()), Y(nodes.size(), k);
    std::vector<double> x(m);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        d.coords(nodes[q], x.data());
        for (std::size_t c = 0; c < mons.size(); ++c) {
            double v = 1.0;
            for (int i = 0; i < m; ++i) v *= std::pow((x[i] - a[i]) / rmin, mons[c][i]);
            X(q, c) = v;
        }
        for (int c = 0; c < k; ++c) Y(q, c) = u.at(nodes[q])[c];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    if (qr.rank() < static_cast<Eigen::Index>(mons.size())) throw std::runtime_error("taylor_fit: rank-deficient fit");
    Eigen::MatrixXd coef = qr.solve(Y);
    for (std::size_t c = 0; c < mons.size(); ++c) {
        int tot = 0;
        for (int v : mons[c]) tot += v;
        if (tot != 2) continue;
        int i1 = -1, i2 = -1;
        for (int i = 0; i < m; ++i)
            for (int e = 0; e < mons[c][i]; ++e) (i1 < 0 ? i1 : i2) = i;
        for (int comp = 0; comp < k; ++comp) {
            const double v = coef(c, comp) / (rmin * rmin);
            if (i1 == i2) J.hessian[comp * m * m + i1 * m + i1] = 2.0 * v;
            else J.hessian[comp * m * m + i1 * m + i2] = J.hessian[comp * m * m + i2 * m + i1] = v;
        }
    }
    if (decay) {
        decay->clear();
        for (double r : radii) decay->push_back(std::pow(r, -2.0 - m / p) * lp_of_diff_with_jet(u, J, Ball{a, r}, p));
    }
    return J;
}

std::vector<LebesgueResult> lebesgue_scan(const DistributionRep& T, double q, const std::vector<std::vector<double>>& points,
                                          const std::vector<double>& radii, const LebesgueOptions& opt) {
    if (!(q >= 1.0)) throw std::invalid_argument("lebesgue_scan: q must be >= 1");
    const GridDomain& d = T.domain();
    const int m = d.dim(), k = T.codim;
    std::vector<double> t;
    std::vector<unsigned char> tv;
    T.nodal_load(t, tv);
    std::vector<double> rs = radii;
    std::sort(rs.begin(), rs.end(), std::greater<double>());
    std::vector<LebesgueResult> out(points.size());
    parallel_for(points.size(), [&](std::size_t pi) {
        LebesgueResult& L = out[pi];
        L.a = points[pi];
        L.radii = rs;
        std::vector<DualNorm> norms;
        for (double r : rs) {
            norms.emplace_back(d, Ball{L.a, r}, q);
            const BallRegion& R = norms.back().region();
            std::size_t good = 0;
            for (std::size_t idx : R.interior) good += tv[idx] ? 1 : 0;
            L.coverage = std::min(L.coverage, R.interior.empty() ? 0.0 : double(good) / R.interior.size());
            L.ratios.push_back(std::pow(r, -1.0 - m / q) * norms.back().value_load(t, k));
        }
        L.finite = opt.limsup.finite(L.ratios);
        if (!L.finite) return;
        std::vector<double> y = norms.back().best_constant(t, k);
        L.density = y;
        for (std::size_t i = 0; i < rs.size(); ++i) {
            const double v = norms[i].value_load_minus_constant(t, k, y);
            L.raw.push_back(v);
            L.decay.push_back(std::pow(rs[i], -1.0 - m / q) * v);
        }
        L.vanishes = opt.vanish.vanishes(rs, L.decay);
    });
    return out;
}

ClassificationReport classify_criterion(const SampledField& u, const Integrand& F,
                                        const std::vector<std::vector<double>>& points, const std::vector<double>& radii,
                                        const CriterionOptions& opt) {
    std::vector<double> rs = radii;
    std::sort(rs.begin(), rs.end(), std::greater<double>());
    ClassificationReport rep;
    rep.points.resize(points.size());
    parallel_for(points.size(), [&](std::size_t pi) {
        PointReport& P = rep.points[pi];
        P.a = points[pi];
        P.radii = rs;
        try {
            std::vector<double> ratios;
            double kk = 0.0;
            for (double r : rs) {
                const double hv = harmonic_deficit(u, F, P.a, r, opt.p, opt.j, opt.solver);
                const double hp = affine_deficit(u, P.a, r);
                P.h.push_back(hv);
                P.hprime.push_back(hp);
                ratios.push_back(hv / (r * r));
                kk = std::max({kk, hv / (r * r), hp / r});
            }
            const double kc = std::max(1.0, std::ceil(kk));
            P.k = kc <= opt.k_max ? kc : kInf;
            P.in_A = opt.limsup.finite(ratios);
            if (opt.fit_jets && P.in_A) P.jet = taylor_fit(u, P.a, rs, opt.p, &P.jet_decay);
        } catch (const std::exception& e) {
            P.error = e.what();
            P.in_A = false;
        }
    });
    return rep;
}

ClassificationReport arbi_analysis(const SampledField& u, const Integrand& F, const std::vector<std::vector<double>>& points,
                                   const std::vector<double>& radii, const CriterionOptions& opt) {
    const GridDomain& d = u.domain;
    const int m = d.dim(), k = u.ncomp;
    std::vector<double> rs = radii;
    std::sort(rs.begin(), rs.end(), std::greater<double>());
    const DistributionRep T = apply_EL(F, u, false).flux_form;
    LebesgueOptions lo{opt.limsup, opt.vanish};
    const auto leb = lebesgue_scan(T, 1.0, points, rs, lo);
    const SampledField Du = weak_gradient(u, 1);
    ClassificationReport rep;
    rep.points.resize(points.size());
    parallel_for(points.size(), [&](std::size_t pi) {
        PointReport& P = rep.points[pi];
        P.a = points[pi];
        P.radii = rs;
        P.lebesgue = leb[pi];
        P.in_A1 = leb[pi].finite;
        P.in_A2 = leb[pi].finite && leb[pi].vanishes;
        try {
            std::vector<double> ga(k * m);
            if (!interpolate(Du, P.a.data(), ga.data())) throw std::domain_error("arbi_analysis: gradient undefined at point");
            for (double r : rs) {
                double s = 0.0;
                for (std::size_t idx : ball_nodes(d, Ball{P.a, r})) {
                    if (!Du.valid(idx)) continue;
                    for (int c = 0; c < k * m; ++c) s += sqr(Du.at(idx)[c] - ga[c]);
                }
                P.b_ratios.push_back(std::pow(r, -m - 1.0) * d.cell_volume() * s);
            }
            P.in_B1 = opt.limsup.finite(P.b_ratios);
            P.in_B2 = P.in_B1 && opt.vanish.vanishes(rs, P.b_ratios);
            P.in_A = P.in_A1 && P.in_B1;
            if (opt.fit_jets && P.in_A) P.jet = taylor_fit(u, P.a, rs, 1.0, &P.jet_decay);
            if (P.jet && P.in_A2 && P.in_B2) {
                const CurvatureContraction C = c_f(F, P.jet->gradient.data());
                std::vector<double> pred(k);
                C.apply(P.jet->hessian.data(), pred.data());
                double s = 0.0;
                for (int c = 0; c < k; ++c) s += sqr((*leb[pi].density)[c] - pred[c]);
                P.identity_residual = std::sqrt(s);
            }
        } catch (const std::exception& e) {
            P.error = e.what();
        }
    });
    return rep;
}

double ClassificationReport::fraction_in_A() const {
    if (points.empty()) return 0.0;
    std::size_t c = 0;
    for (const auto& p : points) c += p.in_A ? 1 : 0;
    return static_cast<double>(c) / points.size();
}

namespace {
nlohmann::json jet_json(const Jet2& J) {
    return {{"a", J.a}, {"value", J.value}, {"gradient", J.gradient}, {"hessian", J.hessian}};
}
nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
}  // namespace

std::string ClassificationReport::to_json() const {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& P : points) {
        nlohmann::json e;
        e["a"] = P.a;
        e["radii"] = P.radii;
        e["h"] = P.h;
        e["hprime"] = P.hprime;
        e["k"] = num(P.k);
        e["in_A"] = P.in_A;
        e["in_A1"] = P.in_A1;
        e["in_A2"] = P.in_A2;
        e["in_B1"] = P.in_B1;
        e["in_B2"] = P.in_B2;
        e["b_ratios"] = P.b_ratios;
        e["jet"] = P.jet ? jet_json(*P.jet) : nlohmann::json(nullptr);
        e["jet_decay"] = P.jet_decay;
        e["identity_residual"] = num(P.identity_residual);
        if (P.lebesgue) {
            e["lebesgue"] = {{"ratios", P.lebesgue->ratios},
                             {"finite", P.lebesgue->finite},
                             {"density", P.lebesgue->density ? nlohmann::json(*P.lebesgue->density) : nlohmann::json(nullptr)},
                             {"decay", P.lebesgue->decay}};
        }
        if (!P.error.empty()) e["error"] = P.error;
        j.push_back(e);
    }
    return j.dump();
}

std::string ClassificationReport::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "point,a,r,h,hprime,k,in_A,in_A1,in_A2,in_B1,in_B2\n";
    for (std::size_t pi = 0; pi < points.size(); ++pi) {
        const auto& P = points[pi];
        std::string a;
        for (std::size_t i = 0; i < P.a.size(); ++i) a += (i ? " " : "") + std::to_string(P.a[i]);
        for (std::size_t ri = 0; ri < P.radii.size(); ++ri) {
            os << pi << "," << a << "," << P.radii[ri] << ",";
            os << (ri < P.h.size() ? P.h[ri] : std::nan("")) << ",";
            os << (ri < P.hprime.size() ? P.hprime[ri] : std::nan("")) << ",";
            os << P.k << "," << P.in_A << "," << P.in_A1 << "," << P.in_A2 << "," << P.in_B1 << "," << P.in_B2 << "\n";
        }
    }
    return os.str();
}

}  // namespace rect2
