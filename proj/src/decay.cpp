#include "rect2/decay.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <sstream>

#include "rect2/kernels.hpp"
#include "rect2/parallel.hpp"

namespace rect2 {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double normal_distance(const double* z, const double* a, const double* T, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        double t = 0.0;
        for (int j = 0; j < n; ++j) t += T[i * n + j] * (z[j] - a[j]);
        s += sqr((z[i] - a[i]) - t);
    }
    return std::sqrt(s);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size() / 2;
    return v.size() % 2 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

void check_plane(const DiscreteVarifold& V, const double* T, const char* who) {
    const int n = V.ambient();
    double tr = 0.0;
    for (int i = 0; i < n; ++i) tr += T[i * n + i];
    if (std::fabs(tr - V.dim()) > 1e-8) throw std::invalid_argument(std::string(who) + ": T must be a rank-m projection");
}

}  // namespace

double theory_tau(int m, double p) {
    if (m < 1 || !(p >= 1.0)) throw std::invalid_argument("theory_tau: need m >= 1 and p >= 1");
    if (m <= 2 || p >= 2.0 * m / (m + 2.0)) return 1.0;
    return m * p / (2.0 * (m - p));
}

std::string DecayReport::to_json() const {
    nlohmann::json j;
    j["m"] = m;
    j["a"] = a;
    j["radii"] = radii;
    j["phi"] = phi;
    j["counts"] = counts;
    std::vector<int> res(resolved.begin(), resolved.end());
    j["resolved"] = res;
    j["spacing"] = spacing;
    j["tau_defined"] = tau_defined;
    j["tau_hat"] = tau_defined ? num(tau_hat) : nlohmann::json(nullptr);
    j["tau_band"] = tau_defined ? nlohmann::json({num(tau_lo), num(tau_hi)}) : nlohmann::json(nullptr);
    j["theory_tau"] = theory_tau;
    j["p"] = p;
    return j.dump(2);
}

DecayReport decay_scan(const DiscreteVarifold& V, const double* a, const double* T, double r0, const DecayOptions& opt) {
    if (!(r0 > 0.0) || opt.K < 0) throw std::invalid_argument("decay_scan: need r0 > 0 and K >= 0");
    if (V.empty()) throw AnalysisError("under-resolved: empty varifold");
    check_plane(V, T, "decay_scan");
    const int n = V.ambient();
    DecayReport rep;
    rep.m = V.dim();
    rep.p = opt.p;
    rep.theory_tau = theory_tau(rep.m, opt.p);
    rep.a.assign(a, a + n);
    rep.T.assign(T, T + n * n);
    rep.spacing = V.local_spacing(a);
    std::vector<double> xs, ys;
    std::size_t nres = 0;
    for (int k = 0; k <= opt.K; ++k) {
        const double r = r0 * std::pow(4.0, -k);
        std::size_t cnt = 0;
        V.query_ball(a, r, [&](std::size_t, double) { ++cnt; });
        const double phi = tilt_excess(V, a, r, T);
        const bool ok = r >= opt.resolve_factor * rep.spacing && cnt >= opt.min_particles;
        rep.radii.push_back(r);
        rep.phi.push_back(phi);
        rep.counts.push_back(cnt);
        rep.resolved.push_back(ok ? 1 : 0);
        if (ok) {
            ++nres;
            if (phi > 0.0) {
                xs.push_back(std::log(r));
                ys.push_back(std::log(phi));
            }
        }
    }
    if (nres == 0) {
        std::ostringstream os;
        os << "under-resolved: no scale has r >= " << opt.resolve_factor << " x local spacing (" << rep.spacing
           << ") and at least " << opt.min_particles << " particles";
        throw AnalysisError(os.str());
    }
    if (xs.size() >= 2) {
        const double k = static_cast<double>(xs.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i] / k;
            my += ys[i] / k;
        }
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += sqr(xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        rep.tau_hat = sxy / sxx;
        double se = 0.0;
        if (xs.size() > 2) {
            double ssr = 0.0;
            for (std::size_t i = 0; i < xs.size(); ++i) ssr += sqr(ys[i] - my - rep.tau_hat * (xs[i] - mx));
            se = std::sqrt(ssr / (k - 2.0) / sxx);
        }
        rep.tau_lo = rep.tau_hat - 2.0 * se;
        rep.tau_hi = rep.tau_hat + 2.0 * se;
        rep.tau_defined = true;
    }
    return rep;
}

std::string decay_csv_header() { return "point,r,phi,resolved,tau_hat,tau_lo,tau_hi,theory_tau,induction_pass"; }

std::string decay_csv_rows(const DecayReport& rep, std::size_t point_id) {
    std::ostringstream os;
    os.precision(12);
    for (std::size_t k = 0; k < rep.radii.size(); ++k) {
        os << point_id << ',' << rep.radii[k] << ',' << rep.phi[k] << ',' << int(rep.resolved[k]) << ',';
        if (rep.tau_defined)
            os << rep.tau_hat << ',' << rep.tau_lo << ',' << rep.tau_hi;
        else
            os << ",,";
        os << ',' << rep.theory_tau << ',';
        if (k < rep.induction_pass.size()) os << int(rep.induction_pass[k]);
        os << '\n';
    }
    return os.str();
}

double cylinder_tilt(const DiscreteVarifold& V, const double* a, const double* T, double r) {
    const int n = V.ambient();
    Cylinder c{std::vector<double>(T, T + n * n), std::vector<double>(a, a + n), r, r};
    double s = 0.0;
    V.query_ball(a, std::sqrt(2.0) * r, [&](std::size_t i, double) {
        if (c.contains(V.z(i), n)) s += V.w(i) * kernels::dist_sq(V.P(i), T, n * n);
    });
    return std::sqrt(s / std::pow(r, V.dim()));
}

std::string InductionReport::to_json() const {
    nlohmann::json j;
    j["m"] = m;
    j["Q"] = Q;
    j["delta"] = delta;
    j["Delta2"] = num(Delta2);
    j["Delta3"] = num(Delta3);
    j["Delta3_bound"] = num(Delta3_bound);
    j["gamma"] = num(gamma);
    j["radii"] = radii;
    j["f"] = f;
    j["closes"] = closes;
    j["hypotheses_ok"] = hypotheses_ok;
    j["failed_hypotheses"] = failed_hypotheses;
    nlohmann::json st = nlohmann::json::array();
    for (const auto& s : steps) {
        nlohmann::json h = nlohmann::json::array();
        for (const auto& c : s.hypotheses)
            h.push_back({{"name", c.name}, {"measured", num(c.measured)}, {"bound", num(c.bound)}, {"pass", c.pass}});
        st.push_back({{"r", s.r},
                      {"f_r", s.f_r},
                      {"f_next", s.f_next},
                      {"H", s.H},
                      {"K", num(s.Kt)},
                      {"requirement", num(s.requirement)},
                      {"contraction_rhs", num(s.contraction_rhs)},
                      {"pass_contraction", s.pass_contraction},
                      {"pass_linear", s.pass_linear},
                      {"hypotheses", h}});
    }
    j["steps"] = st;
    return j.dump(2);
}

InductionReport quarter_induction(const DiscreteVarifold& V, const double* a, const double* T,
                                  const std::vector<double>& radii, const InductionOptions& opt) {
    const int n = V.ambient(), m = V.dim();
    check_plane(V, T, "quarter_induction");
    if (radii.size() < 2) throw std::invalid_argument("quarter_induction: need at least two radii");
    for (std::size_t k = 0; k + 1 < radii.size(); ++k)
        if (!(radii[k] > 0.0) || std::fabs(radii[k + 1] * 4.0 / radii[k] - 1.0) > 1e-9)
            throw std::invalid_argument("quarter_induction: radii must decrease by factor 4");
    if (!opt.Z.empty() && opt.Z.size() != V.size()) throw std::invalid_argument("quarter_induction: Z mask size");
    if (!(opt.p >= 1.0)) throw std::invalid_argument("quarter_induction: p must be >= 1");

    InductionReport rep;
    rep.m = m;
    rep.delta = opt.delta > 0.0 ? opt.delta : std::ldexp(1.0, -m - 3);
    rep.radii = radii;
    const std::vector<double> Tv(T, T + n * n), av(a, a + n);
    const double am = unit_ball_volume(m);
    const std::size_t R = radii.size();
    for (double r : radii) rep.f.push_back(cylinder_tilt(V, a, T, r));

    if (opt.Q > 0) {
        rep.Q = opt.Q;
    } else {
        const double r = radii[0];
        rep.Q = std::max(1L, std::lround(mass(V, Cylinder{Tv, av, r, 3.0 * r}) / (am * std::pow(r, m))));
    }
    const double M = std::pow(7.0, m) * rep.Q;

    // psi on B(a, 6r) from per-particle curvature (estimated on a subsample when no provider is given)
    auto psi = [&](double r) {
        const auto idx = V.in_ball(a, 6.0 * r);
        if (idx.empty()) return 0.0;
        double total = 0.0;
        for (std::size_t i : idx) total += V.w(i);
        const std::size_t S = opt.curvature ? idx.size() : std::min(idx.size(), std::max<std::size_t>(1, opt.curvature_samples));
        std::vector<double> val(S, -1.0), wt(S, 0.0);
        parallel_for(S, [&](std::size_t t) {
            const std::size_t i = idx[(t * idx.size()) / S];
            std::vector<double> h(n, 0.0);
            if (opt.curvature) {
                opt.curvature(i, h.data());
            } else {
                try {
                    const double rr = opt.curvature_radius_factor * V.local_spacing(V.z(i));
                    h = mean_curvature_estimate(V, V.z(i), rr).h;
                } catch (const AnalysisError&) {
                    return;
                }
            }
            val[t] = std::pow(std::sqrt(kernels::sum_sq(h.data(), n)), opt.p);
            wt[t] = V.w(i);
        });
        double sw = 0.0, sv = 0.0;
        for (std::size_t t = 0; t < S; ++t)
            if (val[t] >= 0.0) {
                sw += wt[t];
                sv += wt[t] * val[t];
            }
        return sw > 0.0 ? sv * total / sw : 0.0;
    };

    std::vector<double> H(R), Kt(R);
    for (std::size_t k = 0; k < R; ++k) {
        const double r = radii[k];
        Cylinder c3{Tv, av, r, 3.0 * r};
        double h = 0.0;
        V.query_ball(a, std::hypot(r, 3.0 * r), [&](std::size_t i, double) {
            if ((opt.Z.empty() || opt.Z[i]) && c3.contains(V.z(i), n)) h += V.w(i) * normal_distance(V.z(i), a, T, n);
        });
        H[k] = h / std::pow(r, m + 1);
        Kt[k] = std::pow(r, 1.0 - m / opt.p) * std::pow(psi(r), 1.0 / opt.p);
    }

    std::vector<double> req;
    for (std::size_t k = 0; k + 1 < R; ++k) {
        InductionStep s;
        s.r = radii[k];
        s.f_r = rep.f[k];
        s.f_next = rep.f[k + 1];
        s.H = H[k];
        s.Kt = Kt[k];
        const double numr = std::max(0.0, std::ldexp(s.f_next, -m) - rep.delta * s.f_r);
        const double hk = s.H + s.Kt;
        s.requirement = hk > 0.0 ? numr / hk : (numr > 0.0 ? kInf : 0.0);
        req.push_back(s.requirement);

        const double r = s.r, unit = am * std::pow(r, m);
        const double c3 = mass(V, Cylinder{Tv, av, r, 3.0 * r});
        s.hypotheses.push_back({"cylinder_lower", c3, (rep.Q - 0.5) * unit, c3 >= (rep.Q - 0.5) * unit});
        s.hypotheses.push_back({"cylinder_upper", c3, (rep.Q + 0.5) * unit, c3 <= (rep.Q + 0.5) * unit});
        const double shell = mass(V, Cylinder{Tv, av, r, 4.0 * r}) - mass(V, Cylinder{Tv, av, r, r});
        s.hypotheses.push_back({"cylinder_shell", shell, 0.5 * unit, shell <= 0.5 * unit});
        const double b6 = mass(V, Ball{av, 6.0 * r});
        s.hypotheses.push_back({"ball_6r", b6, M * unit, b6 <= M * unit});
        const double inner = mass(V, Cylinder{Tv, av, 0.5 * r, 0.5 * r});
        const double inner_bound = (rep.Q - 0.25) * am * std::pow(0.5 * r, m);
        s.hypotheses.push_back({"cylinder_half", inner, inner_bound, inner >= inner_bound});
        // smallness hypotheses with an unspecified epsilon: reported, not enforced
        double outside = 0.0;
        if (!opt.Z.empty()) {
            Cylinder cz{Tv, av, r, 3.0 * r};
            V.query_ball(a, std::hypot(r, 3.0 * r), [&](std::size_t i, double) {
                if (!opt.Z[i] && cz.contains(V.z(i), n)) outside += V.w(i);
            });
        }
        s.hypotheses.push_back({"eps_outside_Z", outside, opt.eps * unit, outside <= opt.eps * unit});
        double tilt = 0.0;
        V.query_ball(a, 6.0 * r, [&](std::size_t i, double) { tilt += V.w(i) * kernels::dist_sq(V.P(i), T, n * n); });
        tilt = std::sqrt(tilt);
        const double tb = opt.eps * std::pow(r, 0.5 * m);
        s.hypotheses.push_back({"eps_tilt", tilt, tb, tilt <= tb});
        for (std::size_t h = 0; h < 5; ++h)
            if (!s.hypotheses[h].pass) {
                rep.hypotheses_ok = false;
                std::ostringstream os;
                os << s.hypotheses[h].name << " at r=" << r;
                rep.failed_hypotheses.push_back(os.str());
            }
        rep.steps.push_back(s);
    }

    rep.Delta2 = opt.Delta2 > 0.0 ? opt.Delta2 : 2.0 * median(req);
    if (opt.gamma > 0.0) {
        rep.gamma = opt.gamma;
    } else {
        for (std::size_t k = 0; k < R; ++k) rep.gamma = std::max(rep.gamma, (H[k] + Kt[k]) / radii[k]);
    }
    rep.Delta3 = 0.0;
    for (std::size_t k = 0; k < R; ++k) rep.Delta3 = std::max(rep.Delta3, rep.f[k] / radii[k]);
    rep.Delta3_bound = std::max(std::ldexp(rep.Delta2 * rep.gamma, m + 3), std::ldexp(rep.f[0] / radii[0], m + 2));
    rep.closes = !rep.steps.empty();
    for (auto& s : rep.steps) {
        s.contraction_rhs = std::ldexp(rep.delta * s.f_r + rep.Delta2 * (s.H + s.Kt), m);
        s.pass_contraction = s.f_next <= s.contraction_rhs * (1.0 + 1e-12);
        s.pass_linear = s.f_next <= rep.Delta3_bound * (s.r / 4.0) * (1.0 + 1e-12);
        rep.closes = rep.closes && s.pass();
    }
    return rep;
}

std::string L2DiffReport::to_json() const {
    nlohmann::json j;
    j["a"] = a;
    j["spacing"] = spacing;
    j["kappa"] = kappa;
    j["floor"] = floor;
    j["inversions"] = inversions;
    j["final_quotient"] = final_quotient;
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows) rs.push_back({{"r", r.r}, {"quotient", r.quotient}, {"count", r.count}, {"resolved", r.resolved}});
    j["rows"] = rs;
    return j.dump(2);
}

L2DiffReport l2_diff_check(const DiscreteVarifold& V, const double* a, const std::vector<double>& radii,
                           double resolve_factor) {
    const int n = V.ambient(), m = V.dim(), nn = n * n;
    if (radii.empty()) throw std::invalid_argument("l2_diff_check: no radii");
    if (V.empty()) throw AnalysisError("under-resolved: empty varifold");
    L2DiffReport rep;
    // R(a) is only known at particles, so the base point snaps to the nearest one
    const std::size_t ia = V.nearest(a);
    a = V.z(ia);
    rep.a.assign(a, a + n);
    rep.spacing = V.local_spacing(a);
    std::vector<double> rs = radii;
    std::sort(rs.begin(), rs.end(), std::greater<double>());
    double r_fit = 0.0;
    for (double r : rs) {
        L2DiffRow row;
        row.r = r;
        V.query_ball(a, r, [&](std::size_t, double) { ++row.count; });
        row.resolved = r >= resolve_factor * rep.spacing && row.count >= 50;
        if (row.resolved) r_fit = r;
        rep.rows.push_back(row);
    }
    if (r_fit == 0.0) throw AnalysisError("under-resolved: no radius reaches the resolution limit");

    const double* Ra = V.P(ia);
    Mat E(m, n);
    {
        Eigen::SelfAdjointEigenSolver<Mat> es(Eigen::Map<const Mat>(Ra, n, n));
        for (int j = 0; j < m; ++j) E.row(j) = es.eigenvectors().col(n - 1 - j).transpose();
    }
    auto coords = [&](std::size_t i, Eigen::VectorXd& t) {
        Eigen::VectorXd d(n);
        for (int k = 0; k < n; ++k) d(k) = V.z(i)[k] - a[k];
        t = E * d;
        return d.norm();
    };

    Mat A = Mat::Zero(m, m);
    Mat Bm = Mat::Zero(m, nn);
    Eigen::VectorXd t;
    V.query_ball(a, r_fit, [&](std::size_t i, double) {
        const double dist = coords(i, t);
        if (dist <= 1e-14) return;
        const double w = V.w(i);
        A += w * t * t.transpose();
        for (int j = 0; j < m; ++j)
            for (int e = 0; e < nn; ++e) Bm(j, e) += w * t(j) * (V.P(i)[e] - Ra[e]);
    });
    Eigen::SelfAdjointEigenSolver<Mat> ea(A);
    const double emax = ea.eigenvalues().maxCoeff(), emin = ea.eigenvalues().minCoeff();
    if (!(emax > 0.0) || emin <= 1e-10 * emax) throw AnalysisError("l2_diff_check: regression rank deficient");
    const Mat C = A.ldlt().solve(Bm);
    rep.dR.assign(C.data(), C.data() + m * nn);
    for (int j = 0; j < m; ++j) rep.kappa = std::max(rep.kappa, C.row(j).norm() / std::sqrt(2.0));
    rep.floor = std::pow(rep.kappa, 4) * sqr(8.0 * rep.spacing) / 2.0;

    std::vector<double> resid(nn);
    for (auto& row : rep.rows) {
        double num = 0.0, den = 0.0;
        V.query_ball(a, row.r, [&](std::size_t i, double) {
            const double w = V.w(i);
            den += w;
            const double dist = coords(i, t);
            if (dist <= 1e-14) return;
            for (int e = 0; e < nn; ++e) {
                double v = V.P(i)[e] - Ra[e];
                for (int j = 0; j < m; ++j) v -= t(j) * C(j, e);
                resid[e] = v;
            }
            num += w * kernels::sum_sq(resid.data(), nn) / (dist * dist);
        });
        row.quotient = den > 0.0 ? num / den : 0.0;
    }
    double prev = -1.0;
    for (const auto& row : rep.rows) {
        if (!row.resolved) continue;
        if (prev >= 0.0 && row.quotient > prev) ++rep.inversions;
        prev = row.quotient;
        rep.final_quotient = row.quotient;
    }
    return rep;
}

}  // namespace rect2
