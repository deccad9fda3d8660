#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "rect2/elliptic.hpp"

namespace rect2 {

std::vector<double> Integrand::grad(const std::vector<double>& s) const {
    std::vector<double> g(dim());
    DF(s.data(), g.data());
    return g;
}

std::vector<double> Integrand::hess(const std::vector<double>& s) const {
    std::vector<double> H(dim() * dim());
    D2F(s.data(), H.data());
    return H;
}

Integrand dirichlet_integrand(int m, int codim) {
    if (m < 1 || codim < 1) throw std::invalid_argument("dirichlet_integrand: bad dimensions");
    Integrand I;
    I.m = m;
    I.k = codim;
    I.name = "dirichlet";
    const int n = m * codim;
    I.F = [n](const double* s) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += s[i] * s[i];
        return 0.5 * v;
    };
    I.DF = [n](const double* s, double* o) { std::copy(s, s + n, o); };
    I.D2F = [n](const double*, double* o) {
        std::fill(o, o + n * n, 0.0);
        for (int i = 0; i < n; ++i) o[i * n + i] = 1.0;
    };
    I.epsilon = 0.0;
    I.lipD2F = 0.0;
    return I;
}

namespace {

using MatX = Eigen::MatrixXd;

MatX as_matrix(const double* s, int k, int m) {
    MatX S(k, m);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < m; ++i) S(j, i) = s[j * m + i];
    return S;
}

}  // namespace

Integrand area_integrand(int m, int codim) {
    if (m < 1 || codim < 1) throw std::invalid_argument("area_integrand: bad dimensions");
    Integrand I;
    I.m = m;
    I.k = codim;
    I.name = "area";
    I.F = [m, codim](const double* s) {
        MatX S = as_matrix(s, codim, m);
        MatX G = MatX::Identity(m, m) + S.transpose() * S;
        return std::sqrt(G.determinant());
    };
    I.DF = [m, codim](const double* s, double* o) {
        MatX S = as_matrix(s, codim, m);
        MatX G = MatX::Identity(m, m) + S.transpose() * S;
        const double phi = std::sqrt(G.determinant());
        MatX M = phi * S * G.inverse();
        for (int j = 0; j < codim; ++j)
            for (int i = 0; i < m; ++i) o[j * m + i] = M(j, i);
    };
    I.D2F = [m, codim](const double* s, double* o) {
        const int n = m * codim;
        MatX S = as_matrix(s, codim, m);
        MatX G = MatX::Identity(m, m) + S.transpose() * S;
        const double phi = std::sqrt(G.determinant());
        MatX Gi = G.inverse();
        MatX M = S * Gi;
        for (int a = 0; a < n; ++a) {
            const int ja = a / m, ia = a % m;
            for (int b = a; b < n; ++b) {
                const int jb = b / m, ib = b % m;
                // tau1 = E(ja,ia), tau2 = E(jb,ib)
                double v = M(ja, ia) * M(jb, ib);
                if (ja == jb) v += Gi(ib, ia);
                // - <S Gi (tau2^T S + S^T tau2) Gi, tau1>
                MatX W = MatX::Zero(m, m);
                for (int c = 0; c < m; ++c) {
                    W(ib, c) += S(jb, c);
                    W(c, ib) += S(jb, c);
                }
                MatX Z = S * Gi * W * Gi;
                v -= Z(ja, ia);
                o[a * n + b] = o[b * n + a] = phi * v;
            }
        }
    };
    I.epsilon = kInf;
    I.lipD2F = kInf;
    return I;
}

double bilinear_norm(const double* B, int n) {
    MatX M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = 0.5 * (B[i * n + j] + B[j * n + i]);
    Eigen::SelfAdjointEigenSolver<MatX> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double upsilon_distance(const Integrand& F, const double* sigma) {
    const int n = F.dim();
    std::vector<double> H(n * n);
    F.D2F(sigma, H.data());
    for (int i = 0; i < n; ++i) H[i * n + i] -= 1.0;
    return bilinear_norm(H.data(), n);
}

Integrand cutoff_integrand(const Integrand& base, const std::vector<double>& center, double delta,
                           const CutoffOptions& opt) {
    if (!(delta > 0.0)) throw std::invalid_argument("cutoff_integrand: delta must be positive");
    const int n = base.dim();
    if (static_cast<int>(center.size()) != n) throw std::invalid_argument("cutoff_integrand: center dimension");
    struct Data {
        Integrand base;
        std::vector<double> a;
        double delta;
        double Fa;
        std::vector<double> Da, Ha;
    };
    auto d = std::make_shared<Data>();
    d->base = base;
    d->a = center;
    d->delta = delta;
    d->Fa = base.F(center.data());
    d->Da = base.grad(center);
    d->Ha = base.hess(center);

    // P = degree 2 Taylor polynomial of the base at a
    auto eval = [d, n](const double* x, double* Fv, double* DFv, double* D2Fv) {
        std::vector<double> dx(n);
        double rho2 = 0.0;
        for (int i = 0; i < n; ++i) {
            dx[i] = x[i] - d->a[i];
            rho2 += dx[i] * dx[i];
        }
        const double rho = std::sqrt(rho2);
        const double t = rho / d->delta;
        if (t <= 0.5) {
            if (Fv) *Fv = d->base.F(x);
            if (DFv) d->base.DF(x, DFv);
            if (D2Fv) d->base.D2F(x, D2Fv);
            return;
        }
        std::vector<double> Hd(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) Hd[i] += d->Ha[i * n + j] * dx[j];
        double P = d->Fa;
        for (int i = 0; i < n; ++i) P += d->Da[i] * dx[i] + 0.5 * dx[i] * Hd[i];
        std::vector<double> DP(n);
        for (int i = 0; i < n; ++i) DP[i] = d->Da[i] + Hd[i];
        if (t >= 1.0) {
            if (Fv) *Fv = P;
            if (DFv) std::copy(DP.begin(), DP.end(), DFv);
            if (D2Fv) std::copy(d->Ha.begin(), d->Ha.end(), D2Fv);
            return;
        }
        double v, v1, v2;
        transition_profile(t, v, v1, v2);
        const double Phi = d->base.F(x);
        std::vector<double> DPhi(n), H(n * n);
        d->base.DF(x, DPhi.data());
        const double E = Phi - P;
        std::vector<double> DE(n), u(n), Dw(n);
        for (int i = 0; i < n; ++i) {
            DE[i] = DPhi[i] - DP[i];
            u[i] = dx[i] / rho;
            Dw[i] = v1 / d->delta * u[i];
        }
        if (Fv) *Fv = P + v * E;
        if (DFv)
            for (int i = 0; i < n; ++i) DFv[i] = DP[i] + v * DE[i] + E * Dw[i];
        if (D2Fv) {
            d->base.D2F(x, H.data());
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    const double proj = (i == j ? 1.0 : 0.0) - u[i] * u[j];
                    const double D2w = v2 / (d->delta * d->delta) * u[i] * u[j] + v1 / (d->delta * rho) * proj;
                    D2Fv[i * n + j] = d->Ha[i * n + j] + v * (H[i * n + j] - d->Ha[i * n + j]) + Dw[i] * DE[j] +
                                      DE[i] * Dw[j] + E * D2w;
                }
        }
    };

    Integrand out;
    out.m = base.m;
    out.k = base.k;
    out.name = "cutoff(" + base.name + ")";
    out.F = [eval](const double* x) {
        double v;
        eval(x, &v, nullptr, nullptr);
        return v;
    };
    out.DF = [eval](const double* x, double* o) { eval(x, nullptr, o, nullptr); };
    out.D2F = [eval](const double* x, double* o) { eval(x, nullptr, nullptr, o); };

    // sampled diagnostics
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> ud(0.0, 1.0);
    auto random_point = [&](double radius) {
        std::vector<double> x(n);
        double nn = 0.0;
        for (double& v : x) {
            v = nd(rng);
            nn += v * v;
        }
        nn = std::sqrt(nn);
        const double r = radius * std::pow(ud(rng), 1.0 / n);
        for (int i = 0; i < n; ++i) x[i] = center[i] + r * x[i] / nn;
        return x;
    };
    std::vector<double> H(n * n), H2(n * n), Diff(n * n);
    auto dist_to = [&](const std::vector<double>& A, const std::vector<double>& B) {
        for (int i = 0; i < n * n; ++i) Diff[i] = A[i] - B[i];
        return bilinear_norm(Diff.data(), n);
    };
    double s = 0.0, sup_diff = 0.0;
    for (int it = 0; it < opt.samples; ++it) {
        auto x = random_point(delta);
        base.D2F(x.data(), H.data());
        s = std::max(s, dist_to(H, d->Ha));
        out.D2F(x.data(), H2.data());
        sup_diff = std::max(sup_diff, dist_to(H2, d->Ha));
    }
    std::vector<double> Hid(n * n, 0.0);
    for (int i = 0; i < n; ++i) Hid[i * n + i] = 1.0;
    const double base_gap = dist_to(d->Ha, Hid);
    out.cutoff_s = s;
    out.cutoff_gamma = s > 0.0 ? sup_diff / s : 0.0;
    out.cutoff_delta = delta;
    out.cutoff_center = center;
    out.epsilon = base_gap + sup_diff;

    double lip = 0.0;
    for (int it = 0; it < opt.lip_pairs; ++it) {
        auto x = random_point(delta);
        std::vector<double> y(n);
        double nn = 0.0;
        for (double& v : y) {
            v = nd(rng);
            nn += v * v;
        }
        const double eta = delta * std::pow(10.0, -4.0 * ud(rng));
        for (int i = 0; i < n; ++i) y[i] = x[i] + eta * y[i] / std::sqrt(nn);
        out.D2F(x.data(), H.data());
        out.D2F(y.data(), H2.data());
        lip = std::max(lip, dist_to(H, H2) / eta);
    }
    out.lipD2F = lip;
    return out;
}

void CurvatureContraction::apply(const double* phi, double* out) const {
    const int blk = k * m * m;
    for (int l = 0; l < k; ++l) {
        double s = 0.0;
        for (int q = 0; q < blk; ++q) s += coef[l * blk + q] * phi[q];
        out[l] = s;
    }
}

double CurvatureContraction::norm() const {
    double s = 0.0;
    for (double c : coef) s += c * c;
    return std::sqrt(s);
}

CurvatureContraction CurvatureContraction::trace(int m, int codim) {
    CurvatureContraction C;
    C.m = m;
    C.k = codim;
    C.coef.assign(codim * codim * m * m, 0.0);
    for (int l = 0; l < codim; ++l)
        for (int i = 0; i < m; ++i) C.coef[l * codim * m * m + l * m * m + i * m + i] = 1.0;
    return C;
}

CurvatureContraction c_f(const Integrand& F, const double* sigma) {
    const int m = F.m, k = F.k, n = m * k;
    std::vector<double> H(n * n);
    F.D2F(sigma, H.data());
    CurvatureContraction C;
    C.m = m;
    C.k = k;
    C.coef.assign(k * k * m * m, 0.0);
    for (int l = 0; l < k; ++l)
        for (int j = 0; j < k; ++j)
            for (int i = 0; i < m; ++i)
                for (int i2 = 0; i2 < m; ++i2) {
                    const double a = H[(j * m + i) * n + (l * m + i2)];
                    const double b = H[(j * m + i2) * n + (l * m + i)];
                    C.coef[l * k * m * m + j * m * m + i * m + i2] = 0.5 * (a + b);
                }
    return C;
}

CurvatureContraction operator-(const CurvatureContraction& a, const CurvatureContraction& b) {
    if (a.m != b.m || a.k != b.k) throw std::invalid_argument("contraction dimension mismatch");
    CurvatureContraction c = a;
    for (std::size_t i = 0; i < c.coef.size(); ++i) c.coef[i] -= b.coef[i];
    return c;
}

ELResult apply_EL(const Integrand& F, const SampledField& u, bool with_density) {
    const int m = u.domain.dim(), k = u.ncomp;
    if (m != F.m || k != F.k) throw std::invalid_argument("apply_EL: integrand/field dimension mismatch");
    SampledField Du = weak_gradient(u, 1);
    SampledField g(u.domain, m * k);
    for (std::size_t idx = 0; idx < u.size(); ++idx) {
        g.mask[idx] = Du.mask[idx];
        if (Du.valid(idx)) F.DF(Du.at(idx), g.at(idx));
    }
    ELResult res{DistributionRep::from_flux(std::move(g), k), std::nullopt};
    if (with_density) {
        SampledField D2u = weak_gradient(u, 2);
        SampledField f(u.domain, k);
        for (std::size_t idx = 0; idx < u.size(); ++idx) {
            const bool ok = Du.valid(idx) && D2u.valid(idx);
            f.mask[idx] = ok;
            if (ok) c_f(F, Du.at(idx)).apply(D2u.at(idx), f.at(idx));
        }
        res.density_form = DistributionRep::from_density(std::move(f));
    }
    return res;
}

}  // namespace rect2
