#include "rect2/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rect2 {

UniformIndex::UniformIndex(int d, double cell, const double* pts, std::size_t count)
    : d_(d), cell_(cell), pts_(pts), count_(count) {
    if (d < 1 || d > 3) throw std::invalid_argument("UniformIndex: dimension must be 1..3");
    if (!(cell > 0.0)) throw std::invalid_argument("UniformIndex: cell size must be positive");
    long c[3] = {0, 0, 0};
    for (int a = 0; a < d_; ++a) {
        lo_[a] = std::numeric_limits<long>::max();
        hi_[a] = std::numeric_limits<long>::min();
    }
    for (std::size_t i = 0; i < count; ++i) {
        cell_of(pts + i * d, c);
        for (int a = 0; a < d_; ++a) {
            lo_[a] = std::min(lo_[a], c[a]);
            hi_[a] = std::max(hi_[a], c[a]);
        }
        buckets_[key(c)].push_back(static_cast<std::uint32_t>(i));
    }
}

std::int64_t UniformIndex::key(const long* c) const {
    std::int64_t k = 0;
    for (int a = 0; a < d_; ++a) k = k * 2097152 + (static_cast<std::int64_t>(c[a]) + 1048576);
    return k;
}

void UniformIndex::cell_of(const double* x, long* c) const {
    for (int a = 0; a < d_; ++a) c[a] = static_cast<long>(std::floor(x[a] / cell_));
}

void UniformIndex::query(const double* x, double r, const std::function<void(std::size_t, double)>& f) const {
    if (count_ == 0) return;
    long lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0}, c[3] = {0, 0, 0};
    for (int a = 0; a < d_; ++a) {
        lo[a] = std::max(lo_[a], static_cast<long>(std::floor((x[a] - r) / cell_)));
        hi[a] = std::min(hi_[a], static_cast<long>(std::floor((x[a] + r) / cell_)));
        if (lo[a] > hi[a]) return;
        c[a] = lo[a];
    }
    const double r2 = r * r;
    while (true) {
        auto it = buckets_.find(key(c));
        if (it != buckets_.end())
            for (std::uint32_t i : it->second) {
                const double* p = pts_ + static_cast<std::size_t>(i) * d_;
                double s = 0.0;
                for (int a = 0; a < d_; ++a) s += (p[a] - x[a]) * (p[a] - x[a]);
                if (s <= r2) f(i, s);
            }
        int a = d_ - 1;
        while (a >= 0 && ++c[a] > hi[a]) {
            c[a] = lo[a];
            --a;
        }
        if (a < 0) break;
    }
}

std::vector<std::size_t> UniformIndex::within(const double* x, double r) const {
    std::vector<std::size_t> out;
    query(x, r, [&](std::size_t i, double) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
}

std::size_t UniformIndex::nearest(const double* x, double* dist) const {
    if (count_ == 0) return npos;
    long c[3] = {0, 0, 0};
    cell_of(x, c);
    // grow the search box until it certainly contains the nearest point
    long reach = 0;
    for (int a = 0; a < d_; ++a) reach = std::max({reach, std::labs(c[a] - lo_[a]), std::labs(hi_[a] - c[a])});
    std::size_t best = npos;
    double best2 = std::numeric_limits<double>::infinity();
    for (long k = 0;; k = std::max(1L, 2 * k)) {
        const double r = (k + 1) * cell_;
        query(x, r, [&](std::size_t i, double s) {
            if (s < best2 || (s == best2 && i < best)) {
                best2 = s;
                best = i;
            }
        });
        if (best != npos && std::sqrt(best2) <= r) break;
        if (k > reach + 1) break;
    }
    if (best == npos) {
        for (std::size_t i = 0; i < count_; ++i) {
            double s = 0.0;
            for (int a = 0; a < d_; ++a) s += (pts_[i * d_ + a] - x[a]) * (pts_[i * d_ + a] - x[a]);
            if (s < best2) {
                best2 = s;
                best = i;
            }
        }
    }
    if (dist) *dist = std::sqrt(best2);
    return best;
}

}  // namespace rect2
