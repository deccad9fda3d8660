#pragma once

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "rect2/grid.hpp"
#include "rect2/spatial.hpp"

namespace rect2 {

// Cover of a box by balls B(s, 10 h(s)) with h(x) = (1/20) max(min(1, d), max(0, delta - d)),
// d = dist(x, A), and a smooth partition of unity subordinate to it.
class WhitneyCover {
public:
    WhitneyCover() = default;
    WhitneyCover(const WhitneyCover&) = delete;
    WhitneyCover& operator=(const WhitneyCover&) = delete;
    WhitneyCover(WhitneyCover&&) = default;
    WhitneyCover& operator=(WhitneyCover&&) = default;

    int dim() const { return m_; }
    double delta() const { return delta_; }
    std::size_t size() const { return scale_.size(); }
    const double* center(std::size_t s) const { return centers_.data() + s * m_; }
    std::vector<double> center_vec(std::size_t s) const { return {center(s), center(s) + m_}; }
    double scale(std::size_t s) const { return scale_[s]; }
    // nearest point of A to the center (lexicographic tie break)
    std::vector<double> xi(std::size_t s) const;
    const std::vector<double>& box_lo() const { return lo_; }
    const std::vector<double>& box_hi() const { return hi_; }

    double dist_to_A(const double* x) const;
    double h(const double* x) const;

    // Centers whose bump is nonzero at x, with the normalized weights phi_s(x).
    std::vector<std::pair<std::size_t, double>> weights(const double* x) const;
    double partition_sum(const double* x) const;
    // Number of centers s with B(x, 10 h(x)) meeting B(s, 10 h(s)).
    std::size_t overlap_count(const double* x) const;
    // Centers s with |x - s| <= 10 (h(x) + h(s)).
    std::vector<std::size_t> interacting(const double* x) const;
    // Pairwise disjointness of the closed balls B(s, 2 h(s)); returns the number of violating pairs.
    std::size_t disjointness_violations() const;

    // Measured max over samples of |D^i phi_s(x)| h(x)^i for i = 1, 2 (finite differences).
    std::pair<double, double> derivative_bounds(std::size_t samples, std::uint64_t seed) const;

    std::string to_json() const;

    friend WhitneyCover build_cover(const std::vector<double>& A, int m, double delta, const std::vector<double>& lo,
                                    const std::vector<double>& hi, double grid_spacing);

private:
    double raw_bump(std::size_t s, const double* x) const;
    void build_index();

    int m_ = 0;
    double delta_ = 0.0;
    std::vector<double> lo_, hi_;
    std::vector<double> A_;        // sorted lexicographically
    std::vector<double> centers_;  // size() * m
    std::vector<double> scale_;
    std::unique_ptr<UniformIndex> a_index_;
    // centers grouped by level floor(log2 h)
    struct Level {
        int level;
        double hmax;
        std::vector<double> pts;
        std::vector<std::size_t> ids;
        std::unique_ptr<UniformIndex> index;
    };
    std::vector<Level> levels_;
    void for_near_centers(const double* x, double base, double factor,
                          const std::function<void(std::size_t, double)>& f) const;
};

// A: points of the closed set (count * m coordinates), delta in (2 h_grid, 1],
// target box [lo, hi].
WhitneyCover build_cover(const std::vector<double>& A, int m, double delta, const std::vector<double>& lo,
                         const std::vector<double>& hi, double grid_spacing);
// Node set of a mask as a point list.
std::vector<double> mask_points(const GridDomain& d, const std::vector<unsigned char>& mask);

// v(x) = sum_s phi_s(x) v_s(x) on the nodes of d. Local fields are read by
// multilinear interpolation; a center with nonzero weight and no field is an error.
SampledField glue(const WhitneyCover& cover, const std::map<std::size_t, SampledField>& locals, const GridDomain& d);

struct MollifySplit {
    DistributionRep S, R;      // density distributions on the input grid
    double bound = 0.0;        // i 2^{m+1} ||D Phi||_inf
    double max_density_near_A = 0.0;
    double mollifier_lip = 0.0;  // ||D Phi||_inf of the unit mollifier
};

// Mollifier Phi(x) = c * smooth_bump(|x|) with unit integral, scaled to radius eps.
double mollifier(int m, double eps, double dist);
double mollifier_grad_sup(int m);

// Precondition: |T|_{1;a,r} <= i r^{m+1} for a in A and r in check_radii (each < 10/i).
// Violations are reported in the error message.
MollifySplit mollify_split(const DistributionRep& T, const std::vector<double>& A, double eps, double i,
                           const std::vector<double>& check_radii = {}, std::size_t check_points = 16);

}  // namespace rect2
