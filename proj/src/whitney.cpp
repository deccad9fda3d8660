#include "rect2/whitney.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <random>
#include <sstream>
#include <unordered_map>

#include "rect2/dual.hpp"

namespace rect2 {

namespace {

double dist2(const double* a, const double* b, int m) {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return s;
}

int level_of(double h) { return static_cast<int>(std::floor(std::log2(h))); }

// Growable bucket grid used while centers are being selected.
struct DynamicGrid {
    int m;
    double cell;
    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets;

    std::int64_t key(const long* c) const {
        std::int64_t k = 0;
        for (int a = 0; a < m; ++a) k = k * 2097152 + (static_cast<std::int64_t>(c[a]) + 1048576);
        return k;
    }
    void insert(const double* x, std::uint32_t id) {
        long c[3];
        for (int a = 0; a < m; ++a) c[a] = static_cast<long>(std::floor(x[a] / cell));
        buckets[key(c)].push_back(id);
    }
    template <class Fn>
    bool any_within(const double* x, double r, Fn&& pred) const {
        long lo[3], hi[3], c[3];
        for (int a = 0; a < m; ++a) {
            lo[a] = static_cast<long>(std::floor((x[a] - r) / cell));
            hi[a] = static_cast<long>(std::floor((x[a] + r) / cell));
            c[a] = lo[a];
        }
        while (true) {
            auto it = buckets.find(key(c));
            if (it != buckets.end())
                for (std::uint32_t id : it->second)
                    if (pred(id)) return true;
            int a = m - 1;
            while (a >= 0 && ++c[a] > hi[a]) {
                c[a] = lo[a];
                --a;
            }
            if (a < 0) return false;
        }
    }
};

}  // namespace

std::vector<double> mask_points(const GridDomain& d, const std::vector<unsigned char>& mask) {
    if (mask.size() != d.size()) throw std::invalid_argument("mask_points: mask size mismatch");
    std::vector<double> out;
    std::vector<double> x(d.dim());
    for (std::size_t i = 0; i < d.size(); ++i)
        if (mask[i]) {
            d.coords(i, x.data());
            out.insert(out.end(), x.begin(), x.end());
        }
    return out;
}

double WhitneyCover::dist_to_A(const double* x) const {
    double dd = 0.0;
    a_index_->nearest(x, &dd);
    return dd;
}

double WhitneyCover::h(const double* x) const {
    const double d = dist_to_A(x);
    return std::max(std::min(1.0, d), std::max(0.0, delta_ - d)) / 20.0;
}

std::vector<double> WhitneyCover::xi(std::size_t s) const {
    const std::size_t i = a_index_->nearest(center(s));
    return {A_.data() + i * m_, A_.data() + (i + 1) * m_};
}

void WhitneyCover::for_near_centers(const double* x, double base, double factor,
                                    const std::function<void(std::size_t, double)>& f) const {
    for (const auto& L : levels_) {
        const double r = base + factor * L.hmax;
        L.index->query(x, r, [&](std::size_t i, double d2) { f(L.ids[i], d2); });
    }
}

double WhitneyCover::raw_bump(std::size_t s, const double* x) const {
    const double t = std::sqrt(dist2(x, center(s), m_)) / (10.0 * scale_[s]);
    return smooth_bump(t);
}

std::vector<std::pair<std::size_t, double>> WhitneyCover::weights(const double* x) const {
    std::vector<std::pair<std::size_t, double>> out;
    double total = 0.0;
    for_near_centers(x, 0.0, 10.0, [&](std::size_t s, double d2) {
        const double t = std::sqrt(d2) / (10.0 * scale_[s]);
        if (t >= 1.0) return;
        const double b = smooth_bump(t);
        if (b > 0.0) {
            out.emplace_back(s, b);
            total += b;
        }
    });
    std::sort(out.begin(), out.end());
    for (auto& p : out) p.second /= total;
    return out;
}

double WhitneyCover::partition_sum(const double* x) const {
    double s = 0.0;
    for (const auto& p : weights(x)) s += p.second;
    return s;
}

std::vector<std::size_t> WhitneyCover::interacting(const double* x) const {
    const double hx = h(x);
    std::vector<std::size_t> out;
    for_near_centers(x, 10.0 * hx, 10.0, [&](std::size_t s, double d2) {
        if (std::sqrt(d2) <= 10.0 * (hx + scale_[s])) out.push_back(s);
    });
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t WhitneyCover::overlap_count(const double* x) const { return interacting(x).size(); }

std::size_t WhitneyCover::disjointness_violations() const {
    std::size_t bad = 0;
    for (std::size_t s = 0; s < size(); ++s)
        for_near_centers(center(s), 2.0 * scale_[s], 2.0, [&](std::size_t t, double d2) {
            if (t > s && std::sqrt(d2) <= 2.0 * (scale_[s] + scale_[t])) ++bad;
        });
    return bad;
}

std::pair<double, double> WhitneyCover::derivative_bounds(std::size_t samples, std::uint64_t seed) const {
    std::mt19937_64 rng(seed);
    std::vector<std::uniform_real_distribution<double>> ud;
    for (int i = 0; i < m_; ++i) ud.emplace_back(lo_[i], hi_[i]);
    double v1 = 0.0, v2 = 0.0;
    std::vector<double> x(m_), y(m_);
    auto phi = [&](std::size_t s, const double* p) {
        for (const auto& w : weights(p))
            if (w.first == s) return w.second;
        return 0.0;
    };
    for (std::size_t it = 0; it < samples; ++it) {
        for (int i = 0; i < m_; ++i) x[i] = ud[i](rng);
        const double hx = h(x.data());
        const double eta = 1e-3 * hx;
        for (const auto& w : weights(x.data())) {
            const std::size_t s = w.first;
            Eigen::VectorXd g(m_);
            Eigen::MatrixXd H(m_, m_);
            for (int i = 0; i < m_; ++i) {
                y = x;
                y[i] += eta;
                const double fp = phi(s, y.data());
                y[i] -= 2 * eta;
                const double fm = phi(s, y.data());
                g[i] = (fp - fm) / (2 * eta);
                H(i, i) = (fp - 2 * w.second + fm) / (eta * eta);
                for (int j = i + 1; j < m_; ++j) {
                    double acc = 0.0;
                    for (int si : {-1, 1})
                        for (int sj : {-1, 1}) {
                            y = x;
                            y[i] += si * eta;
                            y[j] += sj * eta;
                            acc += si * sj * phi(s, y.data());
                        }
                    H(i, j) = H(j, i) = acc / (4 * eta * eta);
                }
            }
            v1 = std::max(v1, g.norm() * hx);
            v2 = std::max(v2, H.norm() * hx * hx);
        }
    }
    return {v1, v2};
}

std::string WhitneyCover::to_json() const {
    nlohmann::json j;
    j["m"] = m_;
    j["delta"] = delta_;
    j["box_lo"] = lo_;
    j["box_hi"] = hi_;
    j["centers"] = centers_;
    j["scales"] = scale_;
    return j.dump();
}

void WhitneyCover::build_index() {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t s = 0; s < size(); ++s) groups[level_of(scale_[s])].push_back(s);
    levels_.clear();
    for (auto& [lv, ids] : groups) {
        Level L;
        L.level = lv;
        L.hmax = 0.0;
        L.ids = ids;
        for (std::size_t s : ids) {
            L.hmax = std::max(L.hmax, scale_[s]);
            L.pts.insert(L.pts.end(), center(s), center(s) + m_);
        }
        levels_.push_back(std::move(L));
    }
    for (auto& L : levels_) L.index = std::make_unique<UniformIndex>(m_, 20.0 * L.hmax, L.pts.data(), L.ids.size());
}

WhitneyCover build_cover(const std::vector<double>& A, int m, double delta, const std::vector<double>& lo,
                         const std::vector<double>& hi, double grid_spacing) {
    if (m < 1 || m > 3) throw std::invalid_argument("build_cover: dimension must be 1..3");
    if (A.empty() || A.size() % m) throw std::invalid_argument("build_cover: A must be a nonempty point list");
    if (!(delta > 2.0 * grid_spacing)) throw std::invalid_argument("build_cover: delta too small for grid");
    if (delta > 1.0) throw std::invalid_argument("build_cover: delta must not exceed 1");
    if (static_cast<int>(lo.size()) != m || static_cast<int>(hi.size()) != m)
        throw std::invalid_argument("build_cover: box dimension mismatch");
    WhitneyCover C;
    C.m_ = m;
    C.delta_ = delta;
    C.lo_ = lo;
    C.hi_ = hi;
    // lexicographic order so that nearest-point ties resolve by coordinates
    const std::size_t na = A.size() / m;
    std::vector<std::size_t> order(na);
    for (std::size_t i = 0; i < na; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::lexicographical_compare(A.begin() + a * m, A.begin() + (a + 1) * m, A.begin() + b * m,
                                            A.begin() + (b + 1) * m);
    });
    C.A_.reserve(A.size());
    for (std::size_t i : order) C.A_.insert(C.A_.end(), A.begin() + i * m, A.begin() + (i + 1) * m);
    C.a_index_ = std::make_unique<UniformIndex>(m, std::max(4.0 * grid_spacing, delta / 4.0), C.A_.data(), na);

    // candidate points: centers of an adaptive subdivision with leaf size <= h/2
    struct Cand {
        std::vector<double> x;
        double h;
    };
    std::vector<Cand> cands;
    const double root = 1.0 / 40.0;
    std::vector<long> nroot(m);
    for (int i = 0; i < m; ++i) nroot[i] = std::max(1L, static_cast<long>(std::ceil((hi[i] - lo[i]) / root)));
    std::vector<long> idx(m, 0);
    std::function<void(std::vector<double>, double)> refine = [&](std::vector<double> c, double size) {
        const double hc = C.h(c.data());
        const double hlow = hc - size * std::sqrt(static_cast<double>(m)) / 40.0;
        if (size <= 0.5 * hlow || size < 1e-9) {
            cands.push_back({c, hc});
            return;
        }
        const int nchild = 1 << m;
        for (int k = 0; k < nchild; ++k) {
            std::vector<double> cc = c;
            for (int i = 0; i < m; ++i) cc[i] += ((k >> i) & 1 ? 0.25 : -0.25) * size;
            refine(cc, 0.5 * size);
        }
    };
    while (true) {
        std::vector<double> c(m);
        double size = 0.0;
        for (int i = 0; i < m; ++i) {
            const double w = (hi[i] - lo[i]) / nroot[i];
            size = std::max(size, w);
            c[i] = lo[i] + (idx[i] + 0.5) * w;
        }
        refine(c, size);
        int a = m - 1;
        while (a >= 0 && ++idx[a] >= nroot[a]) {
            idx[a] = 0;
            --a;
        }
        if (a < 0) break;
    }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.h != b.h) return a.h > b.h;
        return a.x < b.x;
    });

    // greedy selection, largest h first: |c - s| > 4 (h(c) + h(s)) for selected pairs
    std::map<int, DynamicGrid> grids;
    std::map<int, double> level_hmax;
    for (const Cand& c : cands) {
        const int lc = level_of(c.h);
        bool blocked = false;
        for (auto& [lv, G] : grids) {
            const double r = 4.0 * (c.h + level_hmax[lv]);
            blocked = G.any_within(c.x.data(), r, [&](std::uint32_t id) {
                const double d = std::sqrt(dist2(c.x.data(), C.center(id), m));
                return d <= 4.0 * (c.h + C.scale_[id]);
            });
            if (blocked) break;
        }
        if (blocked) continue;
        const std::uint32_t id = static_cast<std::uint32_t>(C.scale_.size());
        C.centers_.insert(C.centers_.end(), c.x.begin(), c.x.end());
        C.scale_.push_back(c.h);
        auto it = grids.find(lc);
        if (it == grids.end()) it = grids.emplace(lc, DynamicGrid{m, 12.0 * std::pow(2.0, lc + 1), {}}).first;
        it->second.insert(c.x.data(), id);
        level_hmax[lc] = std::max(level_hmax[lc], c.h);
    }
    C.build_index();
    return C;
}

SampledField glue(const WhitneyCover& cover, const std::map<std::size_t, SampledField>& locals, const GridDomain& d) {
    if (d.dim() != cover.dim()) throw std::invalid_argument("glue: dimension mismatch");
    int ncomp = 0;
    for (const auto& [s, f] : locals) {
        if (ncomp == 0) ncomp = f.ncomp;
        if (f.ncomp != ncomp) throw std::invalid_argument("glue: local fields differ in component count");
    }
    if (ncomp == 0) throw std::invalid_argument("glue: no local fields");
    SampledField v(d, ncomp);
    std::vector<double> x(d.dim()), val(ncomp);
    for (std::size_t idx = 0; idx < d.size(); ++idx) {
        d.coords(idx, x.data());
        const auto w = cover.weights(x.data());
        double* o = v.at(idx);
        std::fill(o, o + ncomp, 0.0);
        if (w.empty()) {
            v.mask[idx] = 0;
            continue;
        }
        for (const auto& [s, ws] : w) {
            auto it = locals.find(s);
            if (it == locals.end() || !interpolate(it->second, x.data(), val.data())) {
                std::ostringstream msg;
                msg << "glue: no local field for center " << s << " at (";
                for (int i = 0; i < d.dim(); ++i) msg << (i ? ", " : "") << cover.center(s)[i];
                msg << ")";
                throw std::out_of_range(msg.str());
            }
            for (int c = 0; c < ncomp; ++c) o[c] += ws * val[c];
        }
    }
    return v;
}

namespace {

// 1 / int smooth_bump(|x|) dx over R^m, by radial Simpson quadrature
double bump_normalizer(int m) {
    const int n = 4000;
    double s = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        s += w * std::pow(t, m - 1) * smooth_bump(t);
    }
    s *= 1.0 / (3.0 * n);
    return 1.0 / (m * unit_ball_volume(m) * s);
}

}  // namespace

double mollifier(int m, double eps, double dist) {
    static thread_local int cached_m = -1;
    static thread_local double cached_c = 0.0;
    if (m != cached_m) {
        cached_c = bump_normalizer(m);
        cached_m = m;
    }
    return cached_c * std::pow(eps, -m) * smooth_bump(dist / eps);
}

double mollifier_grad_sup(int m) {
    const double c = bump_normalizer(m);
    double best = 0.0;
    for (int i = 1; i < 20000; ++i) {
        const double t = i / 20000.0;
        const double d = smooth_bump(t) * 2.0 * t / sqr(1.0 - t * t);
        best = std::max(best, d);
    }
    return c * best;
}

MollifySplit mollify_split(const DistributionRep& T, const std::vector<double>& A, double eps, double i,
                           const std::vector<double>& check_radii, std::size_t check_points) {
    const GridDomain& d = T.domain();
    const int m = d.dim(), k = T.codim;
    if (!(eps > 0.0) || !(i > 0.0)) throw std::invalid_argument("mollify_split: eps and i must be positive");
    if (eps >= 5.0 / i) throw std::invalid_argument("mollify_split: eps must be below 5/i");
    if (A.empty() || A.size() % m) throw std::invalid_argument("mollify_split: A must be a nonempty point list");
    std::vector<double> t;
    std::vector<unsigned char> tv;
    T.nodal_load(t, tv);
    const std::size_t na = A.size() / m;

    if (!check_radii.empty()) {
        std::ostringstream bad;
        int nbad = 0;
        const std::size_t stride = std::max<std::size_t>(1, na / std::max<std::size_t>(1, check_points));
        for (double r : check_radii) {
            if (r >= 10.0 / i) throw std::invalid_argument("mollify_split: check radius must be below 10/i");
            for (std::size_t p = 0; p < na; p += stride) {
                Ball b{{A.begin() + p * m, A.begin() + (p + 1) * m}, r};
                double val;
                try {
                    DualNorm D(d, b, 1.0);
                    val = D.value_load(t, k);
                } catch (const std::domain_error&) {
                    continue;
                }
                if (val > i * std::pow(r, m + 1) * (1.0 + 1e-9)) {
                    if (nbad++ < 8) {
                        bad << " (a=(";
                        for (int q = 0; q < m; ++q) bad << (q ? "," : "") << b.center[q];
                        bad << "), r=" << r << ", |T|=" << val << ")";
                    }
                }
            }
        }
        if (nbad) throw std::invalid_argument("mollify_split: precondition violated at" + bad.str());
    }

    UniformIndex aidx(m, std::max(eps, 2.0 * d.spacing()), A.data(), na);
    // stencil offsets within the mollifier support
    const double h = d.spacing();
    const long reach = static_cast<long>(std::ceil(eps / h));
    std::vector<std::vector<long>> offs;
    std::vector<double> wts;
    {
        std::vector<long> o(m, -reach);
        while (true) {
            double r2 = 0.0;
            for (int q = 0; q < m; ++q) r2 += sqr(o[q] * h);
            const double w = mollifier(m, eps, std::sqrt(r2));
            if (w > 0.0) {
                offs.push_back(o);
                wts.push_back(w);
            }
            int a = m - 1;
            while (a >= 0 && ++o[a] > reach) {
                o[a] = -reach;
                --a;
            }
            if (a < 0) break;
        }
    }
    SampledField fS(d, k), fR(d, k);
    MollifySplit out;
    out.mollifier_lip = mollifier_grad_sup(m);
    out.bound = i * std::pow(2.0, m + 1) * out.mollifier_lip;
    std::vector<int> mi(m);
    std::vector<long> nb(m);
    std::vector<double> x(m), f(k);
    for (std::size_t y = 0; y < d.size(); ++y) {
        d.multi_index(y, mi.data());
        std::fill(f.begin(), f.end(), 0.0);
        bool ok = true;
        for (std::size_t q = 0; q < offs.size() && ok; ++q) {
            for (int a = 0; a < m; ++a) nb[a] = mi[a] + offs[q][a];
            if (!d.in_range(nb.data())) {
                ok = false;
                break;
            }
            std::vector<int> ni(nb.begin(), nb.end());
            const std::size_t xi = d.linear_index(ni.data());
            if (!tv[xi]) {
                ok = false;
                break;
            }
            for (int c = 0; c < k; ++c) f[c] += wts[q] * t[xi * k + c];
        }
        if (!ok) {
            fS.mask[y] = fR.mask[y] = 0;
            continue;
        }
        d.coords(y, x.data());
        double dA = 0.0;
        aidx.nearest(x.data(), &dA);
        const bool near = dA <= eps;
        double mag = 0.0;
        for (int c = 0; c < k; ++c) {
            fS.at(y)[c] = near ? f[c] : 0.0;
            fR.at(y)[c] = near ? 0.0 : f[c];
            mag += f[c] * f[c];
        }
        if (near) out.max_density_near_A = std::max(out.max_density_near_A, std::sqrt(mag));
    }
    out.S = DistributionRep::from_density(std::move(fS));
    out.R = DistributionRep::from_density(std::move(fR));
    return out;
}

}  // namespace rect2
