#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

namespace rect2 {

// Uniform bucket grid over points in R^d (d <= 3). Points are stored by
// reference to an external coordinate array laid out as [i*d + axis].
class UniformIndex {
public:
    UniformIndex() = default;
    UniformIndex(int d, double cell, const double* pts, std::size_t count);

    int dim() const { return d_; }
    double cell() const { return cell_; }
    std::size_t size() const { return count_; }

    // Calls f(i, dist^2) for every point with |p_i - x| <= r.
    void query(const double* x, double r, const std::function<void(std::size_t, double)>& f) const;
    std::vector<std::size_t> within(const double* x, double r) const;
    // Nearest point; ties broken by smaller index. Returns npos when empty.
    std::size_t nearest(const double* x, double* dist = nullptr) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::int64_t key(const long* c) const;
    void cell_of(const double* x, long* c) const;

    int d_ = 0;
    double cell_ = 1.0;
    const double* pts_ = nullptr;
    std::size_t count_ = 0;
    long lo_[3] = {0, 0, 0}, hi_[3] = {0, 0, 0};
    std::unordered_map<std::int64_t, std::vector<std::uint32_t>> buckets_;
};

}  // namespace rect2
