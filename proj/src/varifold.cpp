#include "rect2/varifold.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "rect2/kernels.hpp"
#include "rect2/parallel.hpp"

namespace rect2 {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_projection(const double* P, int n, int m, std::size_t idx) {
    double sym = 0.0, idem = 0.0, tr = 0.0;
    for (int i = 0; i < n; ++i) {
        tr += P[i * n + i];
        for (int j = 0; j < n; ++j) {
            if (!std::isfinite(P[i * n + j]))
                throw std::invalid_argument("particle " + std::to_string(idx) + ": non-finite projection entry");
            sym = std::max(sym, std::fabs(P[i * n + j] - P[j * n + i]));
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += P[i * n + k] * P[k * n + j];
            idem = std::max(idem, std::fabs(s - P[i * n + j]));
        }
    }
    if (sym > 1e-10) throw std::invalid_argument("particle " + std::to_string(idx) + ": projection not symmetric");
    if (idem > 1e-10) throw std::invalid_argument("particle " + std::to_string(idx) + ": projection not idempotent");
    if (std::fabs(tr - m) > 1e-8)
        throw std::invalid_argument("particle " + std::to_string(idx) + ": projection trace differs from m");
}

// derivative of smooth_bump
double bump_deriv(double t) {
    const double t2 = t * t;
    if (t2 >= 1.0) return 0.0;
    const double q = 1.0 - t2;
    return smooth_bump(t) * (-2.0 * t / (q * q));
}

double frob_dist(const double* A, const double* B, int nn) { return std::sqrt(kernels::dist_sq(A, B, nn)); }

// Orthonormal basis of the normal space of the projection T (n - m rows of length n).
std::vector<double> normal_basis(const double* T, int n, int m) {
    Mat N = Mat::Identity(n, n) - Eigen::Map<const Mat>(T, n, n);
    Eigen::SelfAdjointEigenSolver<Mat> es(N);
    std::vector<double> out;
    for (int c = n - 1; c >= m; --c)
        for (int j = 0; j < n; ++j) out.push_back(es.eigenvectors()(j, c));
    return out;
}

}  // namespace

DiscreteVarifold::DiscreteVarifold(int n, int m) : n_(n), m_(m) {
    if (n < 1 || m < 1 || m >= n) throw std::invalid_argument("DiscreteVarifold: need 1 <= m < n");
}

DiscreteVarifold::DiscreteVarifold(const DiscreteVarifold& o) : n_(o.n_), m_(o.m_), z_(o.z_), P_(o.P_), w_(o.w_) {}

DiscreteVarifold& DiscreteVarifold::operator=(const DiscreteVarifold& o) {
    if (this == &o) return *this;
    std::lock_guard<std::mutex> lk(index_mutex_);
    n_ = o.n_;
    m_ = o.m_;
    z_ = o.z_;
    P_ = o.P_;
    w_ = o.w_;
    indices_.clear();
    extent_ = -1.0;
    return *this;
}

DiscreteVarifold::DiscreteVarifold(DiscreteVarifold&& o) noexcept
    : n_(o.n_), m_(o.m_), z_(std::move(o.z_)), P_(std::move(o.P_)), w_(std::move(o.w_)) {}

DiscreteVarifold& DiscreteVarifold::operator=(DiscreteVarifold&& o) noexcept {
    if (this == &o) return *this;
    std::lock_guard<std::mutex> lk(index_mutex_);
    n_ = o.n_;
    m_ = o.m_;
    z_ = std::move(o.z_);
    P_ = std::move(o.P_);
    w_ = std::move(o.w_);
    indices_.clear();
    extent_ = -1.0;
    return *this;
}

DiscreteVarifold::~DiscreteVarifold() = default;

void DiscreteVarifold::reserve(std::size_t count) {
    z_.reserve(count * n_);
    P_.reserve(count * n_ * n_);
    w_.reserve(count);
}

void DiscreteVarifold::add(const double* z, const double* P, double w) {
    if (n_ == 0) throw std::logic_error("DiscreteVarifold: dimensions not set");
    const std::size_t idx = w_.size();
    if (!(w > 0.0) || !std::isfinite(w))
        throw std::invalid_argument("particle " + std::to_string(idx) + ": weight must be positive");
    for (int i = 0; i < n_; ++i)
        if (!std::isfinite(z[i])) throw std::invalid_argument("particle " + std::to_string(idx) + ": non-finite position");
    check_projection(P, n_, m_, idx);
    z_.insert(z_.end(), z, z + n_);
    P_.insert(P_.end(), P, P + n_ * n_);
    w_.push_back(w);
    std::lock_guard<std::mutex> lk(index_mutex_);
    indices_.clear();
    extent_ = -1.0;
}

void DiscreteVarifold::add_basis(const double* z, const double* basis, double w) {
    Mat B = Eigen::Map<const Mat>(basis, m_, n_);
    Eigen::ColPivHouseholderQR<Mat> qr(B.transpose());
    if (qr.rank() < m_) throw std::invalid_argument("particle " + std::to_string(w_.size()) + ": basis is rank deficient");
    Mat Q = qr.householderQ() * Mat::Identity(n_, m_);
    Mat P = Q * Q.transpose();
    P = 0.5 * (P + P.transpose()).eval();
    add(z, P.data(), w);
}

double* DiscreteVarifold::P_mutable(std::size_t i) { return P_.data() + i * n_ * n_; }

double DiscreteVarifold::total_mass() const {
    double s = 0.0;
    for (double w : w_) s += w;
    return s;
}

void DiscreteVarifold::validate() const {
    for (std::size_t i = 0; i < w_.size(); ++i) {
        if (!(w_[i] > 0.0)) throw std::invalid_argument("particle " + std::to_string(i) + ": weight must be positive");
        check_projection(P(i), n_, m_, i);
    }
}

const UniformIndex& DiscreteVarifold::index_for(double r) const {
    std::lock_guard<std::mutex> lk(index_mutex_);
    if (extent_ < 0.0) {
        double lo = kInf, hi = -kInf;
        for (double v : z_) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        extent_ = std::max(hi - lo, 1e-300);
    }
    int k = static_cast<int>(std::ceil(std::log2(std::max(r, 1e-300))));
    k = std::max(k, static_cast<int>(std::ceil(std::log2(extent_))) - 19);
    auto& slot = indices_[k];
    if (!slot) slot = std::make_unique<UniformIndex>(n_, std::ldexp(1.0, k), z_.data(), w_.size());
    return *slot;
}

void DiscreteVarifold::query_ball(const double* a, double r, const std::function<void(std::size_t, double)>& f) const {
    if (w_.empty() || !(r >= 0.0)) return;
    if (n_ <= 3) {
        index_for(r).query(a, r, f);
        return;
    }
    const double r2 = r * r;
    for (std::size_t i = 0; i < w_.size(); ++i) {
        const double d2 = kernels::dist_sq(z(i), a, n_);
        if (d2 <= r2) f(i, d2);
    }
}

std::vector<std::size_t> DiscreteVarifold::in_ball(const double* a, double r) const {
    std::vector<std::size_t> out;
    query_ball(a, r, [&](std::size_t i, double) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t DiscreteVarifold::nearest(const double* a, double* dist) const {
    if (w_.empty()) return UniformIndex::npos;
    if (n_ <= 3) {
        // a cell near the typical spacing keeps the search box small
        const double cell = std::pow(std::max(w_[0], 1e-300), 1.0 / m_) * 4.0;
        return index_for(cell).nearest(a, dist);
    }
    std::size_t best = 0;
    double bd = kInf;
    for (std::size_t i = 0; i < w_.size(); ++i) {
        const double d2 = kernels::dist_sq(z(i), a, n_);
        if (d2 < bd) {
            bd = d2;
            best = i;
        }
    }
    if (dist) *dist = std::sqrt(bd);
    return best;
}

double DiscreteVarifold::local_spacing(const double* a, std::size_t k) const {
    if (w_.empty()) throw std::invalid_argument("local_spacing: empty varifold");
    k = std::max<std::size_t>(1, std::min(k, w_.size()));
    double d0 = 0.0;
    nearest(a, &d0);
    double r = std::max(d0 * 2.0, std::pow(w_[0], 1.0 / m_));
    std::vector<std::pair<double, std::size_t>> found;
    for (int it = 0; it < 64; ++it) {
        found.clear();
        query_ball(a, r, [&](std::size_t i, double d2) { found.emplace_back(d2, i); });
        if (found.size() >= k) break;
        r *= 2.0;
    }
    if (found.size() < k) throw std::logic_error("local_spacing: search did not converge");
    std::nth_element(found.begin(), found.begin() + (k - 1), found.end());
    std::vector<double> ws;
    for (std::size_t j = 0; j < k; ++j) ws.push_back(w_[found[j].second]);
    std::nth_element(ws.begin(), ws.begin() + ws.size() / 2, ws.end());
    return std::pow(ws[ws.size() / 2], 1.0 / m_);
}

void write_varifold(std::ostream& os, const DiscreteVarifold& V) {
    const int n = V.ambient();
    os << nlohmann::json{{"header", {{"n", n}, {"m", V.dim()}, {"count", V.size()}}}}.dump() << '\n';
    for (std::size_t i = 0; i < V.size(); ++i) {
        nlohmann::json j;
        j["z"] = std::vector<double>(V.z(i), V.z(i) + n);
        j["P"] = std::vector<double>(V.P(i), V.P(i) + n * n);
        j["w"] = V.w(i);
        os << j.dump() << '\n';
    }
}

DiscreteVarifold read_varifold(std::istream& is) {
    DiscreteVarifold V;
    bool have_dims = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::invalid_argument("varifold line " + std::to_string(lineno) + ": " + e.what());
        }
        if (j.contains("header")) {
            V = DiscreteVarifold(j["header"].at("n").get<int>(), j["header"].at("m").get<int>());
            have_dims = true;
            continue;
        }
        if (!j.contains("z") || !j.contains("w") || !(j.contains("P") || j.contains("basis")))
            throw std::invalid_argument("varifold line " + std::to_string(lineno) + ": need z, w and P or basis");
        const auto z = j["z"].get<std::vector<double>>();
        const int n = static_cast<int>(z.size());
        if (!have_dims) {
            int m = 0;
            if (j.contains("basis")) {
                const auto b = j["basis"].get<std::vector<double>>();
                if (n == 0 || b.size() % n) throw std::invalid_argument("varifold line " + std::to_string(lineno) + ": bad basis size");
                m = static_cast<int>(b.size() / n);
            } else {
                const auto P = j["P"].get<std::vector<double>>();
                if (P.size() != static_cast<std::size_t>(n) * n)
                    throw std::invalid_argument("varifold line " + std::to_string(lineno) + ": bad P size");
                double tr = 0.0;
                for (int i = 0; i < n; ++i) tr += P[i * n + i];
                m = static_cast<int>(std::lround(tr));
            }
            V = DiscreteVarifold(n, m);
            have_dims = true;
        }
        if (n != V.ambient()) throw std::invalid_argument("varifold line " + std::to_string(lineno) + ": dimension mismatch");
        const double w = j["w"].get<double>();
        try {
            if (j.contains("P")) {
                const auto P = j["P"].get<std::vector<double>>();
                if (P.size() != static_cast<std::size_t>(n) * n)
                    throw std::invalid_argument("bad P size");
                V.add(z.data(), P.data(), w);
            } else {
                const auto b = j["basis"].get<std::vector<double>>();
                if (b.size() != static_cast<std::size_t>(V.dim()) * n) throw std::invalid_argument("bad basis size");
                V.add_basis(z.data(), b.data(), w);
            }
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("varifold line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_dims) throw std::invalid_argument("varifold: no particles and no header");
    return V;
}

void write_varifold_file(const std::string& path, const DiscreteVarifold& V) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    write_varifold(os, V);
}

DiscreteVarifold read_varifold_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_varifold(is);
}

bool Cylinder::contains(const double* z, int n) const {
    double p2 = 0.0, q2 = 0.0;
    std::vector<double> d(n);
    for (int i = 0; i < n; ++i) d[i] = z[i] - (a.empty() ? 0.0 : a[i]);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += S[i * n + j] * d[j];
        p2 += s * s;
        q2 += (d[i] - s) * (d[i] - s);
    }
    return p2 <= r * r && q2 <= h * h;
}

double mass(const DiscreteVarifold& V, const Ball& b) {
    if (V.empty()) return 0.0;
    if (static_cast<int>(b.center.size()) != V.ambient()) throw std::invalid_argument("mass: ball dimension mismatch");
    double s = 0.0;
    V.query_ball(b.center.data(), b.r, [&](std::size_t i, double) { s += V.w(i); });
    return s;
}

double mass(const DiscreteVarifold& V, const Cylinder& c) {
    if (V.empty()) return 0.0;
    const int n = V.ambient();
    if (c.S.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("mass: cylinder plane dimension mismatch");
    std::vector<double> a = c.a.empty() ? std::vector<double>(n, 0.0) : c.a;
    double s = 0.0;
    V.query_ball(a.data(), std::hypot(c.r, c.h), [&](std::size_t i, double) {
        if (c.contains(V.z(i), n)) s += V.w(i);
    });
    return s;
}

double first_variation(const DiscreteVarifold& V, const VectorField& g, const Ball* support) {
    const int n = V.ambient();
    std::vector<double> gv(n), Dg(n * n);
    double s = 0.0;
    auto add = [&](std::size_t i) {
        g(V.z(i), gv.data(), Dg.data());
        s += V.w(i) * kernels::dot(V.P(i), Dg.data(), n * n);
    };
    if (support) {
        for (std::size_t i : V.in_ball(support->center.data(), support->r)) add(i);
    } else {
        for (std::size_t i = 0; i < V.size(); ++i) add(i);
    }
    return s;
}

MeanCurvatureResult mean_curvature_estimate(const DiscreteVarifold& V, const double* z, double r,
                                            const MeanCurvatureOptions& opt) {
    const int n = V.ambient(), m = V.dim();
    if (!(r > 0.0)) throw std::invalid_argument("mean_curvature_estimate: radius must be positive");
    if (opt.scales.empty()) throw std::invalid_argument("mean_curvature_estimate: no scales");
    std::vector<double> T = opt.tangent;
    if ((opt.slab > 0.0 || opt.normal_only) && T.empty()) {
        const std::size_t k = V.nearest(z);
        if (k == UniformIndex::npos) throw AnalysisError("insufficient test coverage");
        T.assign(V.P(k), V.P(k) + n * n);
    }
    if (!T.empty() && T.size() != static_cast<std::size_t>(n) * n)
        throw std::invalid_argument("mean_curvature_estimate: tangent has wrong size");

    std::vector<double> dirs;
    if (opt.normal_only) {
        dirs = normal_basis(T.data(), n, m);
    } else {
        dirs.assign(n * n, 0.0);
        for (int i = 0; i < n; ++i) dirs[i * n + i] = 1.0;
    }
    const int nd = static_cast<int>(dirs.size()) / n;

    const std::size_t ns = opt.scales.size();
    std::vector<double> M(ns, 0.0), delta(ns * n, 0.0);
    std::vector<double> d(n), t(n), grad(n), Pg(n);
    for (std::size_t si = 0; si < ns; ++si) {
        const double s = r * opt.scales[si];
        double* dl = delta.data() + si * n;
        V.query_ball(z, s, [&](std::size_t i, double d2) {
            const double* zi = V.z(i);
            for (int a = 0; a < n; ++a) d[a] = zi[a] - z[a];
            double phi;
            if (opt.slab > 0.0) {
                double tn = 0.0, nn = 0.0;
                for (int a = 0; a < n; ++a) {
                    t[a] = kernels::dot(T.data() + a * n, d.data(), n);
                    tn += t[a] * t[a];
                }
                for (int a = 0; a < n; ++a) nn += sqr(d[a] - t[a]);
                tn = std::sqrt(tn);
                nn = std::sqrt(nn);
                const double bt = smooth_bump(tn / s), bn = smooth_bump(nn / opt.slab);
                phi = bt * bn;
                if (phi <= 0.0) return;
                const double ct = tn > 0.0 ? bump_deriv(tn / s) / s * bn / tn : 0.0;
                const double cn = nn > 0.0 ? bt * bump_deriv(nn / opt.slab) / opt.slab / nn : 0.0;
                for (int a = 0; a < n; ++a) grad[a] = ct * t[a] + cn * (d[a] - t[a]);
            } else {
                const double rho = std::sqrt(d2);
                phi = smooth_bump(rho / s);
                if (phi <= 0.0) return;
                const double c = rho > 0.0 ? bump_deriv(rho / s) / s / rho : 0.0;
                for (int a = 0; a < n; ++a) grad[a] = c * d[a];
            }
            const double w = V.w(i);
            const double* P = V.P(i);
            for (int a = 0; a < n; ++a) dl[a] += w * kernels::dot(P + a * n, grad.data(), n);
            M[si] += w * phi;
        });
    }

    double mm = 0.0;
    for (double v : M) mm += v * v;
    if (!(mm > 0.0)) throw AnalysisError("insufficient test coverage");

    MeanCurvatureResult res;
    res.h.assign(n, 0.0);
    res.mass = M[0];
    res.tests = ns * nd;
    double rnum = 0.0, rden = 0.0;
    for (int e = 0; e < nd; ++e) {
        const double* dir = dirs.data() + e * n;
        double num = 0.0;
        std::vector<double> de(ns);
        for (std::size_t si = 0; si < ns; ++si) {
            de[si] = kernels::dot(delta.data() + si * n, dir, n);
            num += M[si] * de[si];
        }
        const double he = -num / mm;
        for (int a = 0; a < n; ++a) res.h[a] += he * dir[a];
        for (std::size_t si = 0; si < ns; ++si) {
            rnum += sqr(de[si] + M[si] * he);
            rden += sqr(de[si]);
        }
    }
    res.residual = rden > 0.0 ? std::sqrt(rnum / rden) : 0.0;
    return res;
}

double tilt_excess(const DiscreteVarifold& V, const double* a, double r, const double* T) {
    if (!(r > 0.0)) throw std::invalid_argument("tilt_excess: radius must be positive");
    const int nn = V.ambient() * V.ambient();
    std::vector<double> blocks, w;
    V.query_ball(a, r, [&](std::size_t i, double) {
        blocks.insert(blocks.end(), V.P(i), V.P(i) + nn);
        w.push_back(V.w(i));
    });
    if (w.empty()) return 0.0;
    const double s = kernels::weighted_block_dist_sq(blocks.data(), w.data(), T, w.size(), nn);
    return std::sqrt(std::max(0.0, s) / std::pow(r, V.dim()));
}

std::vector<double> mean_projection(const DiscreteVarifold& V, const double* a, double r) {
    const int nn = V.ambient() * V.ambient();
    std::vector<double> M(nn, 0.0);
    double W = 0.0;
    V.query_ball(a, r, [&](std::size_t i, double) {
        kernels::axpy(V.w(i), V.P(i), M.data(), nn);
        W += V.w(i);
    });
    if (W > 0.0)
        for (double& v : M) v /= W;
    return M;
}

std::vector<double> nearest_projection(const double* M, int n, int m) {
    Mat A = Eigen::Map<const Mat>(M, n, n);
    A = 0.5 * (A + A.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    Mat U = es.eigenvectors().rightCols(m);
    Mat P = U * U.transpose();
    P = 0.5 * (P + P.transpose()).eval();
    return std::vector<double>(P.data(), P.data() + n * n);
}

namespace {

// |(delta V(phi e_j))_j| maximized over the given radial profiles
template <class Profile>
double variation_sup(const DiscreteVarifold& V, const double* a, double t, int count, const Profile& prof) {
    const int n = V.ambient();
    std::vector<double> d(n), acc(n);
    double best = 0.0;
    for (int c = 0; c < count; ++c) {
        std::fill(acc.begin(), acc.end(), 0.0);
        V.query_ball(a, t, [&](std::size_t i, double d2) {
            const double rho = std::sqrt(d2);
            double v, dv;
            prof(c, rho, v, dv);
            if (dv == 0.0 || rho == 0.0) return;
            const double* zi = V.z(i);
            for (int k = 0; k < n; ++k) d[k] = (zi[k] - a[k]) * dv / rho;
            const double* P = V.P(i);
            for (int k = 0; k < n; ++k) acc[k] += V.w(i) * kernels::dot(P + k * n, d.data(), n);
        });
        best = std::max(best, std::sqrt(kernels::sum_sq(acc.data(), n)));
    }
    return best;
}

}  // namespace

double variation_dictionary(const DiscreteVarifold& V, const double* a, double t) {
    static const double kScale[3] = {1.0, 2.0 / 3.0, 1.0 / 3.0};
    return variation_sup(V, a, t, 3, [&](int c, double rho, double& v, double& dv) {
        const double s = t * kScale[c];
        v = smooth_bump(rho / s);
        dv = bump_deriv(rho / s) / s;
    });
}

double variation_mollified(const DiscreteVarifold& V, const double* a, double t) {
    static const double kPlateau[3] = {0.5, 0.7, 0.85};
    return variation_sup(V, a, t, 3, [&](int c, double rho, double& v, double& dv) {
        const double cc = kPlateau[c];
        const double slope = 0.5 / ((1.0 - cc) * t);
        double d2;
        transition_profile(0.5 + (rho - cc * t) * slope, v, dv, d2);
        dv *= slope;
    });
}

std::size_t GoodPointReport::count_bad() const {
    std::size_t c = 0;
    for (auto b : bad) c += b != 0;
    return c;
}

std::string GoodPointReport::to_json() const {
    nlohmann::json j;
    j["particles"] = bad.size();
    j["bad"] = count_bad();
    auto mx = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s = std::max(s, x);
        return s;
    };
    j["max_variation_ratio_dictionary"] = mx(variation_ratio);
    j["max_variation_ratio_mollified"] = mx(variation_ratio_mollified);
    j["max_tilt_ratio"] = mx(tilt_ratio);
    return j.dump(2);
}

GoodPointReport good_point_filter(const DiscreteVarifold& V, const GoodPointOptions& opt, std::size_t stride) {
    if (!(opt.delta > 0.0) || !(opt.t_max > 0.0) || opt.scales < 1)
        throw std::invalid_argument("good_point_filter: need delta > 0, t_max > 0, scales >= 1");
    stride = std::max<std::size_t>(1, stride);
    const int n = V.ambient(), m = V.dim();
    const std::size_t N = V.size();
    GoodPointReport rep;
    rep.bad.assign(N, 0);
    rep.variation_ratio.assign(N, 0.0);
    rep.variation_ratio_mollified.assign(N, 0.0);
    rep.tilt_ratio.assign(N, 0.0);
    const std::size_t count = (N + stride - 1) / stride;
    parallel_for(count, [&](std::size_t k) {
        const std::size_t i = k * stride;
        const double* z = V.z(i);
        const double* R = V.P(i);
        double vr = 0.0, vm = 0.0, tr = 0.0;
        for (int s = 0; s < opt.scales; ++s) {
            const double t = opt.t_max * std::ldexp(1.0, -s);
            double M = 0.0, tilt = 0.0;
            V.query_ball(z, t, [&](std::size_t j, double) {
                M += V.w(j);
                tilt += V.w(j) * frob_dist(V.P(j), R, n * n);
            });
            if (!(M > 0.0)) continue;
            const double norm = std::pow(M, 1.0 - 1.0 / m);
            vr = std::max(vr, variation_dictionary(V, z, t) / norm);
            vm = std::max(vm, variation_mollified(V, z, t) / norm);
            tr = std::max(tr, tilt / M);
        }
        rep.variation_ratio[i] = vr;
        rep.variation_ratio_mollified[i] = vm;
        rep.tilt_ratio[i] = tr;
        rep.bad[i] = (vr > opt.delta || tr > opt.delta) ? 1 : 0;
    });
    return rep;
}

std::vector<HypothesisCheck> check_sheet_hypotheses(const DiscreteVarifold& V, const std::vector<double>& S, double s,
                                                      int Q, const SheetHypothesisOptions& opt) {
    const int n = V.ambient(), m = V.dim();
    if (S.size() != static_cast<std::size_t>(n) * n) throw std::invalid_argument("check_sheet_hypotheses: plane size");
    if (!(s > 0.0) || Q < 1) throw std::invalid_argument("check_sheet_hypotheses: need s > 0 and Q >= 1");
    const std::vector<double> a = opt.center.empty() ? std::vector<double>(n, 0.0) : opt.center;
    const double unit = unit_ball_volume(m) * std::pow(s, m);
    std::vector<HypothesisCheck> out;

    const double mc = mass(V, Cylinder{S, a, s, s});
    out.push_back({"lower_mass", mc, (Q - 1 + opt.delta1) * unit, mc >= (Q - 1 + opt.delta1) * unit});
    out.push_back({"upper_mass", mc, (Q + 1 - opt.delta2) * unit, mc <= (Q + 1 - opt.delta2) * unit});

    const double outer = mass(V, Cylinder{S, a, s, s + opt.delta4 * s});
    const double inner = mass(V, Cylinder{S, a, s, s - 2.0 * opt.delta4 * s});
    const double shell = outer - inner;
    out.push_back({"shell_mass", shell, (1.0 - opt.delta3) * unit, shell <= (1.0 - opt.delta3) * unit});

    // U = points at distance < 2s from C(S, a, s, s)
    double mu = 0.0;
    std::vector<double> d(n);
    V.query_ball(a.data(), std::hypot(3.0 * s, 3.0 * s), [&](std::size_t i, double) {
        const double* zi = V.z(i);
        for (int k = 0; k < n; ++k) d[k] = zi[k] - a[k];
        double p2 = 0.0, q2 = 0.0;
        for (int k = 0; k < n; ++k) {
            const double t = kernels::dot(S.data() + k * n, d.data(), n);
            p2 += t * t;
            q2 += sqr(d[k] - t);
        }
        const double dist = std::hypot(std::max(0.0, std::sqrt(p2) - s), std::max(0.0, std::sqrt(q2) - s));
        if (dist < 2.0 * s) mu += V.w(i);
    });
    out.push_back({"neighbourhood_mass", mu, opt.M * unit, mu <= opt.M * unit});
    return out;
}

}  // namespace rect2
