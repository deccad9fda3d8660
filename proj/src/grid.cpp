#include <algorithm>
#include <cmath>
#include <numeric>

#include "rect2/grid.hpp"
#include "rect2/kernels.hpp"

namespace rect2 {

GridDomain::GridDomain(int m, std::vector<double> origin, std::vector<int> counts, double spacing)
    : m_(m), origin_(std::move(origin)), counts_(std::move(counts)), h_(spacing) {
    if (m_ < 1) throw std::invalid_argument("GridDomain: dimension must be positive");
    if (static_cast<int>(origin_.size()) != m_ || static_cast<int>(counts_.size()) != m_)
        throw std::invalid_argument("GridDomain: origin/counts size mismatch");
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw std::invalid_argument("GridDomain: spacing must be positive");
    for (int c : counts_)
        if (c < 3) throw std::invalid_argument("GridDomain: need at least 3 nodes per axis");
    strides_.assign(m_, 1);
    for (int i = m_ - 2; i >= 0; --i) strides_[i] = strides_[i + 1] * static_cast<std::size_t>(counts_[i + 1]);
    size_ = strides_[0] * static_cast<std::size_t>(counts_[0]);
}

GridDomain GridDomain::from_extent(std::vector<double> origin, const std::vector<double>& extent, double spacing) {
    if (!(spacing > 0.0)) throw std::invalid_argument("GridDomain: spacing must be positive");
    std::vector<int> counts;
    for (double e : extent) counts.push_back(static_cast<int>(std::llround(e / spacing)) + 1);
    const int m = static_cast<int>(origin.size());
    return GridDomain(m, std::move(origin), std::move(counts), spacing);
}

GridDomain GridDomain::cube(int m, double half, double spacing) {
    return from_extent(std::vector<double>(m, -half), std::vector<double>(m, 2.0 * half), spacing);
}

std::vector<double> GridDomain::extent() const {
    std::vector<double> e(m_);
    for (int i = 0; i < m_; ++i) e[i] = (counts_[i] - 1) * h_;
    return e;
}

void GridDomain::multi_index(std::size_t idx, int* out) const {
    for (int i = 0; i < m_; ++i) {
        out[i] = static_cast<int>(idx / strides_[i]);
        idx -= static_cast<std::size_t>(out[i]) * strides_[i];
    }
}

std::size_t GridDomain::linear_index(const int* mi) const {
    std::size_t idx = 0;
    for (int i = 0; i < m_; ++i) idx += static_cast<std::size_t>(mi[i]) * strides_[i];
    return idx;
}

double GridDomain::coord(std::size_t idx, int axis) const {
    const std::size_t k = (idx / strides_[axis]) % static_cast<std::size_t>(counts_[axis]);
    return origin_[axis] + static_cast<double>(k) * h_;
}

void GridDomain::coords(std::size_t idx, double* out) const {
    for (int i = 0; i < m_; ++i) out[i] = coord(idx, i);
}

std::vector<double> GridDomain::coords(std::size_t idx) const {
    std::vector<double> x(m_);
    coords(idx, x.data());
    return x;
}

bool GridDomain::in_range(const long* mi) const {
    for (int i = 0; i < m_; ++i)
        if (mi[i] < 0 || mi[i] >= counts_[i]) return false;
    return true;
}

std::size_t GridDomain::neighbor(std::size_t idx, int axis, int dir) const {
    const std::size_t k = (idx / strides_[axis]) % static_cast<std::size_t>(counts_[axis]);
    if (dir > 0) {
        if (k + 1 >= static_cast<std::size_t>(counts_[axis])) return npos;
        return idx + strides_[axis];
    }
    if (k == 0) return npos;
    return idx - strides_[axis];
}

std::size_t GridDomain::nearest_node(const double* x) const {
    std::size_t idx = 0;
    for (int i = 0; i < m_; ++i) {
        const double t = (x[i] - origin_[i]) / h_;
        long k = std::lround(t);
        if (t < -0.5 || t > counts_[i] - 0.5) return npos;
        k = std::clamp<long>(k, 0, counts_[i] - 1);
        idx += static_cast<std::size_t>(k) * strides_[i];
    }
    return idx;
}

bool GridDomain::same_as(const GridDomain& o) const {
    return m_ == o.m_ && counts_ == o.counts_ && h_ == o.h_ && origin_ == o.origin_;
}

SampledField::SampledField(GridDomain d, int nc)
    : domain(std::move(d)), ncomp(nc), values(domain.size() * nc, 0.0), mask(domain.size(), 1) {
    if (nc < 1) throw std::invalid_argument("SampledField: ncomp must be positive");
}

double SampledField::norm_at(std::size_t idx) const {
    return std::sqrt(kernels::sum_sq(at(idx), ncomp));
}

SampledField SampledField::sample(const GridDomain& d, int ncomp, const Fn& f) {
    SampledField out(d, ncomp);
    std::vector<double> x(d.dim());
    for (std::size_t i = 0; i < d.size(); ++i) {
        d.coords(i, x.data());
        f(x.data(), out.at(i));
        for (int c = 0; c < ncomp; ++c)
            if (!std::isfinite(out.at(i)[c])) out.mask[i] = 0;
    }
    return out;
}

SampledField SampledField::scalar(const GridDomain& d, const std::function<double(const double*)>& f) {
    return sample(d, 1, [&](const double* x, double* o) { o[0] = f(x); });
}

namespace {
void check_compatible(const SampledField& a, const SampledField& b) {
    if (!a.domain.same_as(b.domain) || a.ncomp != b.ncomp)
        throw std::invalid_argument("field arithmetic: incompatible fields");
}
}  // namespace

SampledField operator-(const SampledField& a, const SampledField& b) {
    check_compatible(a, b);
    SampledField out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
    for (std::size_t i = 0; i < out.mask.size(); ++i) out.mask[i] = a.mask[i] && b.mask[i];
    return out;
}

SampledField operator+(const SampledField& a, const SampledField& b) {
    check_compatible(a, b);
    SampledField out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    for (std::size_t i = 0; i < out.mask.size(); ++i) out.mask[i] = a.mask[i] && b.mask[i];
    return out;
}

SampledField scaled(const SampledField& a, double s) {
    SampledField out = a;
    for (double& v : out.values) v *= s;
    return out;
}

namespace {

// Visit integer lattice points (possibly outside the grid) of the open ball.
template <class F>
void for_ball_lattice(const GridDomain& d, const Ball& b, F&& fn) {
    const int m = d.dim();
    if (static_cast<int>(b.center.size()) != m) throw std::invalid_argument("ball dimension mismatch");
    if (!(b.r > 0.0)) throw std::invalid_argument("ball radius must be positive");
    const double h = d.spacing();
    std::vector<long> lo(m), hi(m), k(m);
    for (int i = 0; i < m; ++i) {
        lo[i] = static_cast<long>(std::ceil((b.center[i] - b.r - d.origin()[i]) / h - 1e-12));
        hi[i] = static_cast<long>(std::floor((b.center[i] + b.r - d.origin()[i]) / h + 1e-12));
    }
    if (m == 0) return;
    for (int i = 0; i < m; ++i) {
        if (lo[i] > hi[i]) return;
        k[i] = lo[i];
    }
    const double r2 = b.r * b.r;
    while (true) {
        double s = 0.0;
        for (int i = 0; i < m; ++i) s += sqr(d.axis_coord(i, k[i]) - b.center[i]);
        if (s < r2) fn(k.data());
        int ax = m - 1;
        while (ax >= 0) {
            if (++k[ax] <= hi[ax]) break;
            k[ax] = lo[ax];
            --ax;
        }
        if (ax < 0) break;
    }
}

}  // namespace

std::vector<std::size_t> ball_nodes(const GridDomain& d, const Ball& b) {
    std::vector<std::size_t> out;
    std::vector<int> mi(d.dim());
    for_ball_lattice(d, b, [&](const long* k) {
        if (!d.in_range(k)) return;
        for (int i = 0; i < d.dim(); ++i) mi[i] = static_cast<int>(k[i]);
        out.push_back(d.linear_index(mi.data()));
    });
    return out;
}

std::size_t ball_lattice_count(const GridDomain& d, const Ball& b) {
    std::size_t n = 0;
    for_ball_lattice(d, b, [&](const long*) { ++n; });
    return n;
}

LpResult lp_seminorm_ex(const SampledField& f, double p, const Ball& b) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_seminorm: exponent must be >= 1");
    const auto nodes = ball_nodes(f.domain, b);
    const std::size_t total = ball_lattice_count(f.domain, b);
    std::vector<double> mags;
    mags.reserve(nodes.size());
    for (std::size_t idx : nodes)
        if (f.valid(idx)) mags.push_back(f.norm_at(idx));
    if (mags.empty()) throw std::domain_error("ball outside domain");
    LpResult res;
    res.coverage = total ? static_cast<double>(mags.size()) / static_cast<double>(total) : 0.0;
    const double w = f.domain.cell_volume();
    if (std::isinf(p)) {
        res.value = kernels::max_abs(mags.data(), mags.size());
    } else if (p == 1.0) {
        res.value = w * kernels::sum_abs(mags.data(), mags.size());
    } else if (p == 2.0) {
        res.value = std::sqrt(w * kernels::sum_sq(mags.data(), mags.size()));
    } else {
        double s = 0.0;
        for (double v : mags) s += std::pow(v, p);
        res.value = std::pow(w * s, 1.0 / p);
    }
    return res;
}

double lp_seminorm(const SampledField& f, double p, const Ball& b) { return lp_seminorm_ex(f, p, b).value; }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(y[i])) continue;
        const double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::nan("");
    const double den = n * sxx - sx * sx;
    if (std::fabs(den) < 1e-300) return std::nan("");
    return (n * sxy - sx * sy) / den;
}

}  // namespace rect2
