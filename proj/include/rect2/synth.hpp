#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rect2/varifold.hpp"

namespace rect2 {

// Exact data attached to each generated particle. Mean curvature follows
// delta V(g) = -int h . g d||V||, so h points towards the centre of a sphere.
struct GroundTruth {
    int n = 0;
    std::string kind;
    std::uint64_t seed = 0;
    std::map<std::string, double> params;
    std::vector<double> tangent;             // n x n per particle
    std::vector<double> curvature;           // n per particle
    std::vector<unsigned char> has_tangent;  // 0 on singular sets (e.g. the crossing line)
    std::vector<int> piece;                  // component label

    std::size_t size() const { return has_tangent.size(); }
    const double* T(std::size_t i) const { return tangent.data() + i * n * n; }
    const double* h(std::size_t i) const { return curvature.data() + i * n; }
    // JSON lines: header with kind/seed/params, then {"T":..,"h":..,"has_tangent":..,"piece":..}
    void write(std::ostream& os) const;
    void write_file(const std::string& path) const;
    static GroundTruth read(std::istream& is);
    static GroundTruth read_file(const std::string& path);
};

struct SynthResult {
    DiscreteVarifold V;
    GroundTruth truth;
};

// Ring spacing t -> min(cap, s0 + growth (t - focus)_+) for polar lattices
// (cap <= 0 means no cap; growth = 0 gives a uniform polar lattice).
struct PolarGrading {
    double s0 = 0.01;
    double focus = 0.0;
    double growth = 0.0;
    double cap = 0.0;
    double spacing(double t) const;
};

// u : R^m -> R^k with Du[c*m + i] = d_i u_c and D2u[c*m*m + i*m + j] = d_i d_j u_c.
struct GraphFunction {
    int m = 2, k = 1;
    std::function<void(const double* x, double* u, double* Du, double* D2u)> eval;
};

struct GraphSampling {
    // Cartesian lattice over [lo, hi] with a seeded random shift
    std::vector<double> lo, hi;
    double spacing = 0.02;
    // polar lattice (m = 2) of the given radius around center, graded away from it
    bool polar = false;
    std::vector<double> center;
    double radius = 0.0;
    PolarGrading grading;
    // Q stacked copies offset by `offset` along the first normal axis
    int Q = 1;
    double offset = 0.0;
    // uniform height perturbation in [-noise, noise] per normal coordinate
    double noise = 0.0;
    std::uint64_t seed = 1;
};

SynthResult gen_graph_varifold(const GraphFunction& u, const GraphSampling& s);

// kind: sphere | cylinder | crossing_planes | tangent_touch | c1alpha_model.
// Unknown params are rejected; missing params take documented defaults.
SynthResult gen_special(const std::string& kind, const std::map<std::string, double>& params, std::uint64_t seed = 1);

// Parameter names accepted by gen_special for a kind, with defaults.
std::map<std::string, double> special_defaults(const std::string& kind);

// Closed-form graph functions used by the generators and tests.
GraphFunction graph_plane(int m);
// a |x_1|^(1+alpha) (C^{1,alpha} at x_1 = 0)
GraphFunction graph_c1alpha(double amplitude, double alpha);
// eps sin(x_1) (m = 1 or 2)
GraphFunction graph_sine(int m, double eps);

}  // namespace rect2
