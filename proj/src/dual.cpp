#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>

#include "rect2/dual.hpp"
#include "rect2/kernels.hpp"

namespace rect2 {

void transition_profile(double t, double& v, double& d1, double& d2) {
    if (t <= 0.5) {
        v = 1.0;
        d1 = d2 = 0.0;
        return;
    }
    if (t >= 1.0) {
        v = d1 = d2 = 0.0;
        return;
    }
    // s in (0,1); v = A/(A+B), A = g(1-s), B = g(s), g(x) = exp(-1/x)
    const double s = 2.0 * t - 1.0;
    auto g = [](double x) { return std::exp(-1.0 / x); };
    auto g1 = [&](double x) { return g(x) / (x * x); };
    auto g2 = [&](double x) { return g(x) * (1.0 / (x * x * x * x) - 2.0 / (x * x * x)); };
    const double A = g(1.0 - s), B = g(s);
    const double A1 = -g1(1.0 - s), B1 = g1(s);
    const double A2 = g2(1.0 - s), B2 = g2(s);
    const double S = A + B;
    v = A / S;
    const double N = A1 * B - A * B1;
    const double N1 = A2 * B - A * B2;
    const double vs = N / (S * S);
    const double vss = N1 / (S * S) - 2.0 * N * (A1 + B1) / (S * S * S);
    d1 = 2.0 * vs;
    d2 = 4.0 * vss;
}

double smooth_bump(double t) {
    const double t2 = t * t;
    if (t2 >= 1.0) return 0.0;
    return std::exp(1.0 - 1.0 / (1.0 - t2));
}

BallRegion BallRegion::make(const GridDomain& d, const Ball& b) {
    const int m = d.dim();
    if (static_cast<int>(b.center.size()) != m) throw std::invalid_argument("ball dimension mismatch");
    if (!(b.r > 0.0)) throw std::invalid_argument("ball radius must be positive");
    const double h = d.spacing();
    for (int i = 0; i < m; ++i) {
        const double lo = d.origin()[i], hi = lo + (d.counts()[i] - 1) * h;
        if (b.center[i] - b.r - 2.0 * h < lo - 1e-12 || b.center[i] + b.r + 2.0 * h > hi + 1e-12)
            throw std::domain_error("ball outside domain");
    }
    BallRegion R;
    R.domain = d;
    R.ball = b;
    R.inside = ball_nodes(d, b);
    std::vector<unsigned char> in(d.size(), 0);
    for (std::size_t idx : R.inside) in[idx] = 1;
    R.unknown_of.assign(d.size(), -1);
    for (std::size_t idx : R.inside) {
        bool all = true;
        for (int i = 0; i < m && all; ++i)
            for (int dir : {-1, 1}) {
                const std::size_t nb = d.neighbor(idx, i, dir);
                if (nb == GridDomain::npos || !in[nb]) {
                    all = false;
                    break;
                }
            }
        if (all) {
            R.unknown_of[idx] = static_cast<int>(R.interior.size());
            R.interior.push_back(idx);
        } else {
            R.boundary.push_back(idx);
        }
    }
    return R;
}

using SpMat = Eigen::SparseMatrix<double>;

struct DualNorm::Impl {
    // exact path
    Eigen::SimplicialLDLT<SpMat> ldlt;
    Eigen::VectorXd w1;  // K^{-1} l1
    double l1_w1 = 0.0;
    // dictionary path
    struct Test {
        std::vector<std::size_t> nodes;
        std::vector<double> vals;
        double gnorm = 0.0;
        double mass = 0.0;  // h^m * sum vals
    };
    std::vector<Test> tests;
};

DualNorm::~DualNorm() = default;
DualNorm::DualNorm(DualNorm&&) noexcept = default;
DualNorm& DualNorm::operator=(DualNorm&&) noexcept = default;

double DualNorm::grad_norm(const std::vector<double>& th, double p) const {
    const GridDomain& d = region_.domain;
    const int m = d.dim();
    const double h = d.spacing();
    std::vector<double> gp(m), gm(m);
    double acc = 0.0;
    for (std::size_t x : region_.inside) {
        for (int i = 0; i < m; ++i) {
            const std::size_t a = d.neighbor(x, i, +1), b = d.neighbor(x, i, -1);
            gp[i] = (th[a] - th[x]) / h;
            gm[i] = (th[x] - th[b]) / h;
        }
        const double np = std::sqrt(kernels::sum_sq(gp.data(), m)), nm = std::sqrt(kernels::sum_sq(gm.data(), m));
        if (std::isinf(p)) acc = std::max({acc, np, nm});
        else acc += 0.5 * (std::pow(np, p) + std::pow(nm, p));
    }
    if (std::isinf(p)) return acc;
    return std::pow(d.cell_volume() * acc, 1.0 / p);
}

DualNorm::DualNorm(const GridDomain& d, const Ball& b, double q)
    : q_(q), p_(q == 1.0 ? kInf : q / (q - 1.0)), region_(BallRegion::make(d, b)), impl_(std::make_unique<Impl>()) {
    if (!(q >= 1.0) || std::isinf(q)) throw std::invalid_argument("dual_norm: q must be in [1, inf)");
    const int m = d.dim();
    const double h = d.spacing(), w = d.cell_volume();
    if (region_.interior.empty()) throw std::domain_error("dual_norm: ball has no interior nodes");
    if (exact()) {
        const int n = static_cast<int>(region_.interior.size());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(static_cast<std::size_t>(n) * (2 * m + 1));
        const double c = w / (h * h);
        for (int k = 0; k < n; ++k) {
            const std::size_t x = region_.interior[k];
            trip.emplace_back(k, k, 2.0 * m * c);
            for (int i = 0; i < m; ++i)
                for (int dir : {-1, 1}) {
                    const int j = region_.unknown_of[d.neighbor(x, i, dir)];
                    if (j >= 0) trip.emplace_back(k, j, -c);
                }
        }
        SpMat K(n, n);
        K.setFromTriplets(trip.begin(), trip.end());
        impl_->ldlt.compute(K);
        if (impl_->ldlt.info() != Eigen::Success) throw std::runtime_error("dual_norm: factorization failed");
        Eigen::VectorXd l1 = Eigen::VectorXd::Constant(n, w);
        impl_->w1 = impl_->ldlt.solve(l1);
        impl_->l1_w1 = l1.dot(impl_->w1);
        return;
    }
    // dictionary: regularized cones, mollified indicators, tensor bumps at 3 scales
    const double rho = b.r - 2.0 * h;
    if (!(rho > 0.0)) throw std::domain_error("dual_norm: ball too small for the dictionary");
    std::vector<double> scratch(d.size(), 0.0);
    std::vector<double> x(m);
    const double eps = 2.0 * h;
    auto add_test = [&](const std::vector<double>& c, double s, int kind) {
        const double reach = kind == 2 ? s * std::sqrt(static_cast<double>(m)) : s;
        Impl::Test t;
        for (std::size_t idx : ball_nodes(d, Ball{c, reach})) {
            d.coords(idx, x.data());
            double v = 0.0;
            if (kind == 0) {
                double r2 = 0.0;
                for (int i = 0; i < m; ++i) r2 += sqr(x[i] - c[i]);
                v = std::max(0.0, std::sqrt(s * s + eps * eps) - std::sqrt(r2 + eps * eps));
            } else if (kind == 1) {
                double r2 = 0.0;
                for (int i = 0; i < m; ++i) r2 += sqr(x[i] - c[i]);
                v = transition(std::sqrt(r2) / s);
            } else {
                v = 1.0;
                for (int i = 0; i < m; ++i) {
                    const double u = (x[i] - c[i]) / s;
                    v *= std::fabs(u) < 1.0 ? sqr(std::cos(0.5 * M_PI * u)) : 0.0;
                }
            }
            if (v == 0.0 || !region_.is_interior(idx)) continue;
            t.nodes.push_back(idx);
            t.vals.push_back(v);
        }
        if (t.nodes.empty()) return;
        for (std::size_t k = 0; k < t.nodes.size(); ++k) scratch[t.nodes[k]] = t.vals[k];
        t.gnorm = grad_norm(scratch, p_);
        for (std::size_t idx : t.nodes) scratch[idx] = 0.0;
        double s_sum = 0.0;
        for (double v : t.vals) s_sum += v;
        t.mass = w * s_sum;
        if (t.gnorm > 0.0) impl_->tests.push_back(std::move(t));
    };
    for (double s : {rho, 0.5 * rho, 0.25 * rho}) {
        // tests narrower than two cells are dominated by their sampling pattern
        if (s < 2.0 * h && s != rho) continue;
        const int zmax = static_cast<int>(std::floor(rho / s + 1e-9));
        std::vector<int> z(m, -zmax);
        while (true) {
            double zn = 0.0;
            for (int i = 0; i < m; ++i) zn += static_cast<double>(z[i]) * z[i];
            zn = std::sqrt(zn);
            std::vector<double> c(m);
            for (int i = 0; i < m; ++i) c[i] = b.center[i] + s * z[i];
            if (zn * s + s <= rho * (1.0 + 1e-12)) {
                add_test(c, s, 0);
                add_test(c, s, 1);
            }
            if (zn * s + s * std::sqrt(static_cast<double>(m)) <= rho * (1.0 + 1e-12)) add_test(c, s, 2);
            int ax = m - 1;
            while (ax >= 0) {
                if (++z[ax] <= zmax) break;
                z[ax] = -zmax;
                --ax;
            }
            if (ax < 0) break;
        }
    }
    if (impl_->tests.empty()) throw std::domain_error("dual_norm: empty dictionary");
}

std::size_t DualNorm::dictionary_size() const { return impl_->tests.size(); }

double DualNorm::value_load(const std::vector<double>& t, int codim) const {
    if (exact()) {
        const int n = static_cast<int>(region_.interior.size());
        double total = 0.0;
        Eigen::VectorXd rhs(n);
        for (int c = 0; c < codim; ++c) {
            for (int k = 0; k < n; ++k) rhs[k] = t[region_.interior[k] * codim + c];
            if (rhs.squaredNorm() == 0.0) continue;
            Eigen::VectorXd sol = impl_->ldlt.solve(rhs);
            total += rhs.dot(sol);
        }
        return std::sqrt(std::max(0.0, total));
    }
    double best = 0.0;
    std::vector<double> bk(codim);
    for (const auto& test : impl_->tests) {
        std::fill(bk.begin(), bk.end(), 0.0);
        for (std::size_t k = 0; k < test.nodes.size(); ++k)
            for (int c = 0; c < codim; ++c) bk[c] += test.vals[k] * t[test.nodes[k] * codim + c];
        best = std::max(best, std::sqrt(kernels::sum_sq(bk.data(), codim)) / test.gnorm);
    }
    return best;
}

double DualNorm::value_load_minus_constant(const std::vector<double>& t, int codim, const std::vector<double>& y) const {
    std::vector<double> t2 = t;
    const double w = region_.domain.cell_volume();
    for (std::size_t idx : region_.interior)
        for (int c = 0; c < codim; ++c) t2[idx * codim + c] -= w * y[c];
    return value_load(t2, codim);
}

std::vector<double> DualNorm::best_constant(const std::vector<double>& t, int codim) const {
    std::vector<double> y(codim, 0.0);
    if (exact()) {
        for (int c = 0; c < codim; ++c) {
            double s = 0.0;
            for (std::size_t k = 0; k < region_.interior.size(); ++k) s += impl_->w1[k] * t[region_.interior[k] * codim + c];
            y[c] = s / impl_->l1_w1;
        }
        return y;
    }
    const auto& tests = impl_->tests;
    std::vector<double> alpha(tests.size()), beta(tests.size());
    for (int c = 0; c < codim; ++c) {
        double lo = kInf, hi = -kInf;
        for (std::size_t k = 0; k < tests.size(); ++k) {
            double bsum = 0.0;
            for (std::size_t j = 0; j < tests[k].nodes.size(); ++j) bsum += tests[k].vals[j] * t[tests[k].nodes[j] * codim + c];
            alpha[k] = bsum / tests[k].gnorm;
            beta[k] = tests[k].mass / tests[k].gnorm;
            lo = std::min(lo, alpha[k] / beta[k]);
            hi = std::max(hi, alpha[k] / beta[k]);
        }
        // minimize the convex piecewise linear max_k |alpha_k - y beta_k| by
        // bisection on the sign of its right derivative
        auto right_slope = [&](double yy) {
            double fmax = -kInf, slope = -kInf;
            for (std::size_t k = 0; k < tests.size(); ++k) {
                const double v = yy * beta[k] - alpha[k];
                const double fv = std::fabs(v);
                const double sl = v >= 0.0 ? beta[k] : -beta[k];
                if (fv > fmax) {
                    fmax = fv;
                    slope = sl;
                } else if (fv == fmax) {
                    slope = std::max(slope, sl);
                }
            }
            return slope;
        };
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::fabs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (right_slope(mid) > 0.0) hi = mid;
            else lo = mid;
        }
        y[c] = 0.5 * (lo + hi);
    }
    return y;
}

double DualNorm::value(const DistributionRep& T, double* coverage) const {
    if (!T.domain().same_as(region_.domain)) throw std::invalid_argument("dual_norm: grid mismatch");
    std::vector<double> t;
    std::vector<unsigned char> valid;
    T.nodal_load(t, valid);
    if (coverage) {
        std::size_t ok = 0;
        for (std::size_t idx : region_.interior) ok += valid[idx];
        *coverage = static_cast<double>(ok) / static_cast<double>(region_.interior.size());
    }
    return value_load(t, T.codim);
}

double dual_norm(const DistributionRep& T, double q, const Ball& b, double* coverage) {
    DualNorm dn(T.domain(), b, q);
    return dn.value(T, coverage);
}

}  // namespace rect2
