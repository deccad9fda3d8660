#pragma once

#include <memory>
#include <vector>

#include "rect2/grid.hpp"

namespace rect2 {

// Discretized open ball: nodes inside, interior nodes (all 2m axis neighbors
// inside) and boundary nodes (inside with at least one neighbor outside).
struct BallRegion {
    GridDomain domain;
    Ball ball;
    std::vector<std::size_t> inside;
    std::vector<std::size_t> interior;
    std::vector<std::size_t> boundary;
    std::vector<int> unknown_of;  // per grid node: position in `interior` or -1

    static BallRegion make(const GridDomain& d, const Ball& b);
    bool is_interior(std::size_t idx) const { return unknown_of[idx] >= 0; }
};

// Sup of T(theta) over theta supported in U(a,r) with ||D theta||_p <= 1,
// 1/p + 1/q = 1. q = 2 is solved exactly (discrete Poisson problem); other q
// use a fixed dictionary of test functions, which gives a lower bound.
class DualNorm {
public:
    DualNorm(const GridDomain& d, const Ball& b, double q);
    ~DualNorm();
    DualNorm(DualNorm&&) noexcept;
    DualNorm& operator=(DualNorm&&) noexcept;

    double q() const { return q_; }
    double p() const { return p_; }
    bool exact() const { return q_ == 2.0; }
    const BallRegion& region() const { return region_; }
    std::size_t dictionary_size() const;

    // t: nodal load (codim entries per node, as from DistributionRep::nodal_load)
    double value_load(const std::vector<double>& t, int codim) const;
    // |T - T_y| where T_y is the constant density y
    double value_load_minus_constant(const std::vector<double>& t, int codim, const std::vector<double>& y) const;
    // constant density minimizing |T - T_y| on this ball
    std::vector<double> best_constant(const std::vector<double>& t, int codim) const;

    double value(const DistributionRep& T, double* coverage = nullptr) const;

    // discrete ||D theta||_p of a scalar test function given on interior nodes (zero elsewhere)
    double grad_norm(const std::vector<double>& theta_full, double p) const;

private:
    struct Impl;
    double q_, p_;
    BallRegion region_;
    std::unique_ptr<Impl> impl_;
};

double dual_norm(const DistributionRep& T, double q, const Ball& b, double* coverage = nullptr);

// Fixed transition profile: 1 on (-inf, 1/2], 0 on [1, inf), smooth in between,
// built from t -> exp(-1/t). Returns value and first two derivatives.
void transition_profile(double t, double& v, double& d1, double& d2);
inline double transition(double t) {
    double v, a, b;
    transition_profile(t, v, a, b);
    return v;
}
// exp(1 - 1/(1-t^2)) for |t| < 1, else 0 (value 1 at t = 0)
double smooth_bump(double t);

}  // namespace rect2
