#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rect2/dual.hpp"
#include "rect2/grid.hpp"
#include "rect2/spatial.hpp"

namespace rect2 {

// Analysis could not be carried out at the available resolution or the data
// does not meet an analysis precondition (maps to exit status 2 in the CLI).
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Weighted particles (z, P, w) with P the orthogonal projection onto an
// m-plane: V ~ sum_i w_i delta_(z_i, im P_i).
class DiscreteVarifold {
public:
    DiscreteVarifold() = default;
    DiscreteVarifold(int n, int m);
    DiscreteVarifold(const DiscreteVarifold& o);
    DiscreteVarifold& operator=(const DiscreteVarifold& o);
    DiscreteVarifold(DiscreteVarifold&&) noexcept;
    DiscreteVarifold& operator=(DiscreteVarifold&&) noexcept;
    ~DiscreteVarifold();

    int ambient() const { return n_; }
    int dim() const { return m_; }
    std::size_t size() const { return w_.size(); }
    bool empty() const { return w_.empty(); }

    // P is n x n row-major; validated against the projection invariants.
    void add(const double* z, const double* P, double w);
    // basis: m x n row-major, rows spanning the plane (need not be orthonormal)
    void add_basis(const double* z, const double* basis, double w);
    void reserve(std::size_t count);

    const double* z(std::size_t i) const { return z_.data() + i * n_; }
    const double* P(std::size_t i) const { return P_.data() + i * n_ * n_; }
    double w(std::size_t i) const { return w_[i]; }
    double* P_mutable(std::size_t i);
    const std::vector<double>& positions() const { return z_; }

    double total_mass() const;
    // Throws std::invalid_argument naming the first violating particle.
    void validate() const;

    // Calls f(i, |z_i - a|^2) for particles with |z_i - a| <= r. The index
    // cell is picked from r; indices are built once per cell size.
    void query_ball(const double* a, double r, const std::function<void(std::size_t, double)>& f) const;
    std::vector<std::size_t> in_ball(const double* a, double r) const;
    std::size_t nearest(const double* a, double* dist = nullptr) const;
    // (median particle weight over the k nearest particles)^(1/m)
    double local_spacing(const double* a, std::size_t k = 32) const;

private:
    const UniformIndex& index_for(double r) const;

    int n_ = 0, m_ = 0;
    std::vector<double> z_, P_, w_;
    mutable std::mutex index_mutex_;
    mutable std::map<int, std::unique_ptr<UniformIndex>> indices_;
    mutable double extent_ = -1.0;  // coordinate extent, computed with the first index
};

// JSON-lines: {"z":[...], "P":[...] or "basis":[...], "w":...} per particle.
// An optional first line {"header":{"n":..,"m":..}} fixes the dimensions.
void write_varifold(std::ostream& os, const DiscreteVarifold& V);
DiscreteVarifold read_varifold(std::istream& is);
void write_varifold_file(const std::string& path, const DiscreteVarifold& V);
DiscreteVarifold read_varifold_file(const std::string& path);

// C(S, a, r, h) = {z : |S(z - a)| <= r, |z - a - S(z - a)| <= h}, S an n x n projection.
struct Cylinder {
    std::vector<double> S;
    std::vector<double> a;
    double r = 0.0, h = 0.0;
    bool contains(const double* z, int n) const;
};

double mass(const DiscreteVarifold& V, const Ball& b);
double mass(const DiscreteVarifold& V, const Cylinder& c);

// Smooth vector field with derivative: g(z) in R^n and Dg(z)[i*n + j] = d_j g_i.
using VectorField = std::function<void(const double* z, double* g, double* Dg)>;

// delta V(g) = sum_i w_i trace(P_i Dg(z_i)). `support` restricts the sum to a
// ball containing the support of g (all particles when omitted).
double first_variation(const DiscreteVarifold& V, const VectorField& g, const Ball* support = nullptr);

struct MeanCurvatureOptions {
    // scales of the localized test fields relative to r
    std::vector<double> scales = {1.0, 0.75, 0.5};
    // > 0: test fields are also cut off at this distance from the tangent
    // plane through z (separates nearby sheets); 0: ball localization only
    double slab = 0.0;
    // tangent projection used for the slab and for normal_only (nearest particle when empty)
    std::vector<double> tangent;
    // only test fields in the normal space of the tangent plane
    bool normal_only = false;
};

struct MeanCurvatureResult {
    std::vector<double> h;
    double residual = 0.0;  // |residual vector| / |(delta V(g_t))_t|
    double mass = 0.0;      // sum of test-field mass weights at the largest scale
    std::size_t tests = 0;
};

// Least squares constant h with delta V(g_t) + h . int g_t d||V|| ~ 0 over the test fields g_t.
MeanCurvatureResult mean_curvature_estimate(const DiscreteVarifold& V, const double* z, double r,
                                            const MeanCurvatureOptions& opt = {});

// (r^{-m} sum_{z_i in B(a,r)} w_i |P_i - T|^2)^{1/2}
double tilt_excess(const DiscreteVarifold& V, const double* a, double r, const double* T);
// weighted mean of P_i over B(a, r) (minimizer of the tilt excess over all matrices)
std::vector<double> mean_projection(const DiscreteVarifold& V, const double* a, double r);
// orthogonal projection onto the span of the top m eigenvectors of a symmetric matrix
std::vector<double> nearest_projection(const double* M, int n, int m);

struct GoodPointOptions {
    double delta = 0.1;
    double t_max = 0.25;
    int scales = 4;  // t = t_max 2^{-k}
};

struct GoodPointReport {
    std::vector<unsigned char> bad;          // per particle: set B
    std::vector<double> variation_ratio;     // max_t |delta V|_dict(B(z,t)) / ||V||(B(z,t))^{1-1/m}
    std::vector<double> variation_ratio_mollified;
    std::vector<double> tilt_ratio;          // max_t int |R - S| dV / ||V||(B(z,t))
    std::size_t count_bad() const;
    std::string to_json() const;
};

// Good/bad classification of particles by first variation and tilt (subsampled by `stride`; skipped particles are not flagged).
GoodPointReport good_point_filter(const DiscreteVarifold& V, const GoodPointOptions& opt = {}, std::size_t stride = 1);

// sup of |delta V(g)| over unit sup-norm test fields supported in B(a,t):
// three radial bumps times each coordinate direction
double variation_dictionary(const DiscreteVarifold& V, const double* a, double t);
// same with mollified indicator fields (flatter profile, larger value)
double variation_mollified(const DiscreteVarifold& V, const double* a, double t);

struct HypothesisCheck {
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct SheetHypothesisOptions {
    double delta1 = 0.5, delta2 = 0.5, delta3 = 0.5, delta4 = 0.25;
    double M = 20.0;  // bound on the neighbourhood mass in units of the unit-ball mass; a flat Q-sheet has 3^m Q
    std::vector<double> center;  // defaults to the origin
};

// Mass bounds for Q sheets near the plane S (projection) at scale s with multiplicity Q.
std::vector<HypothesisCheck> check_sheet_hypotheses(const DiscreteVarifold& V, const std::vector<double>& S, double s,
                                                      int Q, const SheetHypothesisOptions& opt = {});

struct GraphFrame {
    int m = 0, n = 0;
    std::vector<double> pi1;  // m x n, orthonormal rows
    std::vector<double> pi2;  // (n-m) x n, orthonormal rows
    static GraphFrame standard(int m, int n);
    // frame with pi1 spanning the plane of the projection S
    static GraphFrame from_plane(const std::vector<double>& S, int m);
    void validate() const;
    void project1(const double* z, double* x) const;
    void project2(const double* z, double* y) const;
    // G(x) = pi1^* x + pi2^* y
    void lift(const double* x, const double* y, double* z) const;
};

struct GraphExtractOptions {
    double spacing = 0.0;        // base grid spacing (default 2 x median particle spacing)
    double L = 1.0;              // Lipschitz bound on K (vector); the inf-convolution uses L / sqrt(n - m)
    int Q_hint = 0;              // 0: mode of the per-node multiplicity
    double gap = 0.0;            // sheet separation (default 4 x median particle spacing)
    double theta_tol = 0.2;      // tolerance on integrality of the sheet densities
    double max_ambiguous = 0.2;  // fraction of ambiguous occupied nodes tolerated
};

struct GraphExtraction {
    GraphFrame frame;
    SampledField g;                     // on the base grid
    std::vector<unsigned char> K;       // base nodes where the graph is well defined
    std::vector<double> theta;          // per node: total density (sum of sheet densities)
    std::vector<int> sheets;            // per node: number of sheets
    std::vector<double> spread;         // per node: largest distance of a sheet height from g
    int Q = 0;
    DistributionRep T;                  // area Euler-Lagrange of g
    double coverage = 0.0;              // |K| / occupied interior nodes
    double ambiguous_fraction = 0.0;
    double max_lip_on_K = 0.0;
    double max_tangent_angle_deg = 0.0;  // im DG vs particle planes over K
    std::string to_json() const;
};

// box: lo/hi in base coordinates; defaults to the bounding box of pi1 z.
GraphExtraction graph_extract(const DiscreteVarifold& V, const GraphFrame& frame, const GraphExtractOptions& opt = {},
                              const std::vector<double>& lo = {}, const std::vector<double>& hi = {});

struct TiltGraphRow {
    std::vector<double> x;
    double s = 0.0;
    double lhs = 0.0, rhs = 0.0;
    double ratio() const { return rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 0.0); }
};
struct TiltGraphReport {
    std::vector<TiltGraphRow> rows;
    double max_ratio = 0.0;
};

// s^{-beta-m/r} ||Dg - Dg(x)||_{r;x,s} against 2 m^{1/2} s^{-beta-m/r} (int_C |S - R|^r dV)^{1/r}
// with R = im DG(x) and C the cylinder over B(x, s) of height s + spread(x) around g(x); for
// coincident sheets this is B(G(x), s) up to the ball/cylinder difference. Only nodes whose
// difference stencil lies in K enter the left side.
TiltGraphReport tilt_vs_graph_check(const DiscreteVarifold& V, const GraphExtraction& ex,
                                    const std::vector<std::vector<double>>& points, const std::vector<double>& radii,
                                    double beta = 0.5, double r_exp = 2.0);

}  // namespace rect2
