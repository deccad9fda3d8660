#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rect2/common.hpp"

namespace rect2 {

// Uniform grid over a box in R^m. Node k along axis i sits at origin[i] + k*spacing.
// Linear node index is row-major with axis 0 slowest.
class GridDomain {
public:
    GridDomain() = default;
    GridDomain(int m, std::vector<double> origin, std::vector<int> counts, double spacing);
    // counts derived as round(extent/spacing)+1
    static GridDomain from_extent(std::vector<double> origin, const std::vector<double>& extent, double spacing);
    // cube [-half, half]^m
    static GridDomain cube(int m, double half, double spacing);

    int dim() const { return m_; }
    double spacing() const { return h_; }
    const std::vector<double>& origin() const { return origin_; }
    const std::vector<int>& counts() const { return counts_; }
    std::vector<double> extent() const;
    std::size_t size() const { return size_; }
    std::size_t stride(int axis) const { return strides_[axis]; }
    double cell_volume() const { return std::pow(h_, m_); }

    void multi_index(std::size_t idx, int* out) const;
    std::size_t linear_index(const int* mi) const;
    double coord(std::size_t idx, int axis) const;
    void coords(std::size_t idx, double* out) const;
    std::vector<double> coords(std::size_t idx) const;
    // node coordinate along one axis from an integer index (may be outside range)
    double axis_coord(int axis, long k) const { return origin_[axis] + static_cast<double>(k) * h_; }
    bool in_range(const long* mi) const;
    // Index of the neighbor shifted by +/-1 along axis, or npos when outside.
    std::size_t neighbor(std::size_t idx, int axis, int dir) const;
    // nearest node to a point (clamped); returns npos if the point lies outside the box by more than h/2
    std::size_t nearest_node(const double* x) const;
    bool same_as(const GridDomain& o) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    int m_ = 0;
    std::vector<double> origin_;
    std::vector<int> counts_;
    std::vector<std::size_t> strides_;
    double h_ = 0.0;
    std::size_t size_ = 0;
};

struct Ball {
    std::vector<double> center;
    double r = 0.0;
};

// Vector-valued samples on a grid with a validity mask.
struct SampledField {
    GridDomain domain;
    int ncomp = 1;
    std::vector<double> values;     // size() * ncomp
    std::vector<unsigned char> mask;  // size()

    SampledField() = default;
    SampledField(GridDomain d, int nc);

    std::size_t size() const { return domain.size(); }
    double* at(std::size_t idx) { return values.data() + idx * ncomp; }
    const double* at(std::size_t idx) const { return values.data() + idx * ncomp; }
    bool valid(std::size_t idx) const { return mask[idx] != 0; }
    double norm_at(std::size_t idx) const;

    using Fn = std::function<void(const double* x, double* out)>;
    static SampledField sample(const GridDomain& d, int ncomp, const Fn& f);
    static SampledField scalar(const GridDomain& d, const std::function<double(const double*)>& f);
};

SampledField operator-(const SampledField& a, const SampledField& b);
SampledField operator+(const SampledField& a, const SampledField& b);
SampledField scaled(const SampledField& a, double s);

// Nodes strictly inside the open ball, in increasing index order.
std::vector<std::size_t> ball_nodes(const GridDomain& d, const Ball& b);
// Count of lattice points in the open ball including those outside the grid box.
std::size_t ball_lattice_count(const GridDomain& d, const Ball& b);

struct LpResult {
    double value = 0.0;
    double coverage = 0.0;  // fraction of lattice points of the ball that are valid grid nodes
};

LpResult lp_seminorm_ex(const SampledField& f, double p, const Ball& b);
double lp_seminorm(const SampledField& f, double p, const Ball& b);

// Centered second-order differences. order 1: ncomp*m components laid out as
// [c*m + i] = d_i u_c. order 2: ncomp*m*m components [c*m*m + i*m + j].
SampledField weak_gradient(const SampledField& f, int order);

// Distribution T(theta) = int f.theta - int g.D theta. The density has codim
// components; the flux has codim*m components (same layout as a gradient).
struct DistributionRep {
    int codim = 1;
    std::optional<SampledField> density;
    std::optional<SampledField> flux;

    const GridDomain& domain() const;
    void validate() const;
    // Nodal load t with T(theta) = sum_x theta(x).t(x); t carries the cell volume.
    // Nodes whose stencil is not valid get zero and valid[x] = 0.
    void nodal_load(std::vector<double>& t, std::vector<unsigned char>& valid) const;
    double action(const SampledField& theta) const;

    static DistributionRep from_density(SampledField f);
    static DistributionRep from_flux(SampledField g, int codim);
    // constant density y over the whole grid
    static DistributionRep constant(const GridDomain& d, const std::vector<double>& y);
};

DistributionRep operator-(const DistributionRep& a, const DistributionRep& b);

// x -> r^{-1} u(a + r x) on a grid over [-1,1]^m with the given spacing
// (default spacing/r of the input). Multilinear interpolation.
SampledField scale_translate(const SampledField& f, const std::vector<double>& a, double r,
                             double out_spacing = 0.0);

// Multilinear interpolation at a point; returns false when the stencil is invalid.
bool interpolate(const SampledField& f, const double* x, double* out);

// Field file: first line JSON header, then payload (binary float64 little endian, or CSV).
void write_field(std::ostream& os, const SampledField& f, bool binary = true);
SampledField read_field(std::istream& is);
void write_field_file(const std::string& path, const SampledField& f, bool binary = true);
SampledField read_field_file(const std::string& path);

}  // namespace rect2
