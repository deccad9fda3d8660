#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <json.hpp>

#include "rect2/elliptic.hpp"

namespace rect2 {

std::string SolveDiagnostics::to_json() const {
    nlohmann::json j;
    j["iterations"] = iterations;
    j["residual"] = residual;
    j["energy"] = energy;
    j["gradient_steps"] = gradient_steps;
    j["residual_history"] = residual_history;
    return j.dump();
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Trip = Eigen::Triplet<double>;

// Local integrand at a stencil origin: value, gradient, hessian at sigma (any may be null).
using LocalFn = std::function<void(std::size_t x, const double* sigma, double* F, double* DF, double* D2F)>;

// Energy h^m sum_x 1/2 sum_{+-} F(D^{+-} u(x)) over stencils touching interior nodes,
// with derivatives with respect to the interior unknowns (k per node).
double assemble(const BallRegion& R, int k, const std::vector<double>& u, const LocalFn& local, Eigen::VectorXd* grad,
                std::vector<Trip>* trip) {
    const GridDomain& d = R.domain;
    const int m = d.dim(), n = m * k;
    const double h = d.spacing(), w2 = 0.5 * d.cell_volume();
    std::vector<std::size_t> nodes(m + 1);
    std::vector<int> unk(m + 1);
    std::vector<double> sigma(n), DF(n), D2F(n * n);
    double energy = 0.0;
    for (std::size_t x : R.inside) {
        nodes[0] = x;
        for (int s : {-1, 1}) {
            bool touches = R.is_interior(x);
            bool ok = true;
            for (int i = 0; i < m; ++i) {
                nodes[i + 1] = d.neighbor(x, i, s);
                if (nodes[i + 1] == GridDomain::npos) {
                    ok = false;
                    break;
                }
                touches = touches || R.is_interior(nodes[i + 1]);
            }
            if (!ok || !touches) continue;
            for (int q = 0; q <= m; ++q) unk[q] = R.unknown_of[nodes[q]];
            for (int j = 0; j < k; ++j)
                for (int i = 0; i < m; ++i) sigma[j * m + i] = s * (u[nodes[i + 1] * k + j] - u[x * k + j]) / h;
            double Fv = 0.0;
            local(x, sigma.data(), &Fv, grad ? DF.data() : nullptr, trip ? D2F.data() : nullptr);
            energy += w2 * Fv;
            if (grad) {
                for (int j = 0; j < k; ++j)
                    for (int i = 0; i < m; ++i) {
                        const double c = w2 * DF[j * m + i] * s / h;
                        if (unk[i + 1] >= 0) (*grad)[unk[i + 1] * k + j] += c;
                        if (unk[0] >= 0) (*grad)[unk[0] * k + j] -= c;
                    }
            }
            if (trip) {
                const double c = w2 / (h * h);
                for (int a = 0; a < n; ++a) {
                    const int ja = a / m, ia = a % m;
                    const int pa[2] = {unk[ia + 1], unk[0]};
                    for (int b = 0; b < n; ++b) {
                        const double v = c * D2F[a * n + b];
                        if (v == 0.0) continue;
                        const int jb = b / m, ib = b % m;
                        const int pb[2] = {unk[ib + 1], unk[0]};
                        for (int ea = 0; ea < 2; ++ea) {
                            if (pa[ea] < 0) continue;
                            for (int eb = 0; eb < 2; ++eb) {
                                if (pb[eb] < 0) continue;
                                const double sg = (ea == eb) ? 1.0 : -1.0;
                                trip->emplace_back(pa[ea] * k + ja, pb[eb] * k + jb, sg * v);
                            }
                        }
                    }
                }
            }
        }
    }
    return energy;
}

LocalFn integrand_local(const Integrand& F) {
    return [&F](std::size_t, const double* s, double* Fv, double* DF, double* D2F) {
        if (Fv) *Fv = F.F(s);
        if (DF) F.DF(s, DF);
        if (D2F) F.D2F(s, D2F);
    };
}

void check_codim(const BallRegion& R, int k) {
    if (k < 1) throw std::invalid_argument("solver: codim must be positive");
    if (R.interior.empty()) throw std::domain_error("solver: ball has no interior nodes");
}

}  // namespace

SampledField solve_dirichlet_linear(const BallRegion& R, const SampledField* A, const DistributionRep& T,
                                    const SolverOptions& opt, SolveDiagnostics* diag) {
    const GridDomain& d = R.domain;
    const int m = d.dim(), k = T.codim, n = m * k;
    check_codim(R, k);
    if (!T.domain().same_as(d)) throw std::invalid_argument("solve_dirichlet_linear: distribution grid mismatch");
    if (A) {
        if (!A->domain.same_as(d) || A->ncomp != n * n)
            throw std::invalid_argument("solve_dirichlet_linear: coefficient field mismatch");
        std::vector<double> D(n * n);
        for (std::size_t x : R.inside) {
            if (!A->valid(x)) throw std::domain_error("solve_dirichlet_linear: coefficient invalid inside ball");
            const double* a = A->at(x);
            for (int i = 0; i < n * n; ++i) D[i] = a[i];
            for (int i = 0; i < n; ++i) D[i * n + i] -= 1.0;
            const double eps = bilinear_norm(D.data(), n);
            if (opt.enforce_margin && eps > opt.ellipticity_margin)
                throw std::invalid_argument("solve_dirichlet_linear: coefficient violates ellipticity margin");
        }
    }
    std::vector<double> t;
    std::vector<unsigned char> tv;
    T.nodal_load(t, tv);
    for (std::size_t x : R.interior)
        if (!tv[x]) throw std::domain_error("solve_dirichlet_linear: distribution undefined inside ball");

    const std::size_t N = R.interior.size() * k;
    LocalFn local = [A, n](std::size_t x, const double* s, double* Fv, double* DF, double* D2F) {
        std::vector<double> I;
        const double* a;
        if (A) {
            a = A->at(x);
        } else {
            I.assign(n * n, 0.0);
            for (int i = 0; i < n; ++i) I[i * n + i] = 1.0;
            a = I.data();
        }
        if (D2F)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) D2F[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
        if (DF || Fv) {
            double e = 0.0;
            for (int i = 0; i < n; ++i) {
                double r = 0.0;
                for (int j = 0; j < n; ++j) r += 0.5 * (a[i * n + j] + a[j * n + i]) * s[j];
                if (DF) DF[i] = r;
                e += 0.5 * r * s[i];
            }
            if (Fv) *Fv = e;
        }
    };
    std::vector<double> zero(d.size() * k, 0.0);
    std::vector<Trip> trip;
    assemble(R, k, zero, local, nullptr, &trip);
    SpMat K(N, N);
    K.setFromTriplets(trip.begin(), trip.end());
    Eigen::VectorXd rhs(N);
    for (std::size_t q = 0; q < R.interior.size(); ++q)
        for (int j = 0; j < k; ++j) rhs[q * k + j] = -t[R.interior[q] * k + j];
    Eigen::SimplicialLDLT<SpMat> ldlt(K);
    if (ldlt.info() != Eigen::Success) throw SolverError("solve_dirichlet_linear: factorization failed", kInf, 0);
    Eigen::VectorXd sol = ldlt.solve(rhs);
    const double res = (K * sol - rhs).lpNorm<Eigen::Infinity>() / d.cell_volume();
    if (diag) {
        diag->iterations = 1;
        diag->residual = res;
        diag->residual_history = {res};
        diag->gradient_steps = 0;
        diag->energy = 0.5 * sol.dot(K * sol) + sol.dot(-rhs);
    }
    const double scale = std::max(1.0, rhs.lpNorm<Eigen::Infinity>() / d.cell_volume());
    if (!std::isfinite(res) || res > opt.tol * scale)
        throw SolverError("solve_dirichlet_linear: residual above tolerance", res, 1);
    SampledField u(d, k);
    std::fill(u.mask.begin(), u.mask.end(), 1);
    for (std::size_t q = 0; q < R.interior.size(); ++q)
        for (int j = 0; j < k; ++j) u.at(R.interior[q])[j] = sol[q * k + j];
    return u;
}

SampledField solve_dirichlet_linear(const SampledField* A, const DistributionRep& T, const Ball& b,
                                    const SolverOptions& opt, SolveDiagnostics* diag) {
    return solve_dirichlet_linear(BallRegion::make(T.domain(), b), A, T, opt, diag);
}

double discrete_energy(const Integrand& F, const SampledField& u, const std::vector<double>& y, const BallRegion& R) {
    const int k = u.ncomp;
    double e = assemble(R, k, u.values, integrand_local(F), nullptr, nullptr);
    if (!y.empty()) {
        const double w = R.domain.cell_volume();
        for (std::size_t x : R.interior)
            for (int j = 0; j < k; ++j) e += w * y[j] * u.at(x)[j];
    }
    return e;
}

SampledField solve_dirichlet_nonlinear(const Integrand& F, const SampledField& boundary, const std::vector<double>& y,
                                       const BallRegion& R, const SolverOptions& opt, SolveDiagnostics* diag,
                                       const SampledField* initial) {
    const GridDomain& d = R.domain;
    const int k = boundary.ncomp;
    check_codim(R, k);
    if (F.m != d.dim() || F.k != k) throw std::invalid_argument("solve_dirichlet_nonlinear: integrand dimension mismatch");
    if (!boundary.domain.same_as(d)) throw std::invalid_argument("solve_dirichlet_nonlinear: boundary grid mismatch");
    if (!y.empty() && static_cast<int>(y.size()) != k) throw std::invalid_argument("solve_dirichlet_nonlinear: rhs size");
    if (opt.enforce_margin && std::isfinite(F.epsilon) && F.epsilon > opt.ellipticity_margin)
        throw std::invalid_argument("solve_dirichlet_nonlinear: integrand violates ellipticity margin");
    for (std::size_t x : R.inside)
        if (!boundary.valid(x)) throw std::domain_error("solve_dirichlet_nonlinear: boundary data undefined inside ball");
    if (initial && (!initial->domain.same_as(d) || initial->ncomp != k))
        throw std::invalid_argument("solve_dirichlet_nonlinear: initial guess mismatch");

    SampledField u = boundary;
    if (initial)
        for (std::size_t x : R.interior) std::copy(initial->at(x), initial->at(x) + k, u.at(x));
    const std::size_t N = R.interior.size() * k;
    const double w = d.cell_volume();
    LocalFn local = integrand_local(F);

    auto eval = [&](const std::vector<double>& vals, Eigen::VectorXd* g, std::vector<Trip>* trip) {
        if (g) g->setZero(N);
        double e = assemble(R, k, vals, local, g, trip);
        if (!y.empty())
            for (std::size_t q = 0; q < R.interior.size(); ++q)
                for (int j = 0; j < k; ++j) {
                    e += w * y[j] * vals[R.interior[q] * k + j];
                    if (g) (*g)[q * k + j] += w * y[j];
                }
        return e;
    };

    SolveDiagnostics dg;
    Eigen::VectorXd g(N);
    std::vector<Trip> trip;
    double E = eval(u.values, &g, nullptr);
    double res = g.lpNorm<Eigen::Infinity>() / w;
    dg.residual_history.push_back(res);
    // tol relative to the initial residual, floored at the rounding level of the
    // discrete operator applied to values of size |u|
    double umax = 0.0;
    for (std::size_t x : R.inside)
        for (int j = 0; j < k; ++j) umax = std::max(umax, std::abs(u.at(x)[j]));
    const double rounding = 16.0 * std::numeric_limits<double>::epsilon() * (1.0 + umax) * 2.0 * d.dim() /
                            (d.spacing() * d.spacing());
    const double target = std::max(opt.tol * std::max(1.0, res), rounding);
    int it = 0;
    std::vector<double> trial(u.values.size());
    while (res > target && it < opt.max_iter) {
        ++it;
        trip.clear();
        eval(u.values, nullptr, &trip);
        SpMat H(N, N);
        H.setFromTriplets(trip.begin(), trip.end());
        Eigen::VectorXd dir;
        bool newton = false;
        Eigen::SimplicialLDLT<SpMat> ldlt(H);
        if (ldlt.info() == Eigen::Success) {
            dir = ldlt.solve(-g);
            newton = ldlt.info() == Eigen::Success && dir.allFinite() && dir.dot(g) < 0.0;
        }
        if (!newton) {
            // steepest descent scaled by the inverse of the Dirichlet stiffness diagonal
            const double diagK = 2.0 * d.dim() * w / (d.spacing() * d.spacing());
            dir = -g / diagK;
            ++dg.gradient_steps;
        }
        const double slope = dir.dot(g);
        double alpha = 1.0;
        bool accepted = false;
        Eigen::VectorXd gt(N);
        for (int ls = 0; ls < 40; ++ls) {
            trial = u.values;
            for (std::size_t q = 0; q < R.interior.size(); ++q)
                for (int j = 0; j < k; ++j) trial[R.interior[q] * k + j] += alpha * dir[q * k + j];
            const double Et = eval(trial, &gt, nullptr);
            const double rt = gt.lpNorm<Eigen::Infinity>() / w;
            const bool armijo = Et <= E + 1e-4 * alpha * slope;
            const bool flat = std::abs(Et - E) <= 1e-13 * std::max(1.0, std::abs(E)) && rt < res;
            if (std::isfinite(Et) && (armijo || flat)) {
                u.values.swap(trial);
                E = Et;
                g = gt;
                res = rt;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        dg.residual_history.push_back(res);
        if (!accepted) {
            dg.iterations = it;
            dg.residual = res;
            dg.energy = E;
            if (diag) *diag = dg;
            throw SolverError("solve_dirichlet_nonlinear: line search failed", res, it);
        }
    }
    dg.iterations = it;
    dg.residual = res;
    dg.energy = E;
    if (diag) *diag = dg;
    if (res > target) throw SolverError("solve_dirichlet_nonlinear: iteration cap reached", res, it);
    return u;
}

SampledField solve_dirichlet_nonlinear(const Integrand& F, const SampledField& boundary, const std::vector<double>& y,
                                       const Ball& b, const SolverOptions& opt, SolveDiagnostics* diag,
                                       const SampledField* initial) {
    return solve_dirichlet_nonlinear(F, boundary, y, BallRegion::make(boundary.domain, b), opt, diag, initial);
}

}  // namespace rect2
