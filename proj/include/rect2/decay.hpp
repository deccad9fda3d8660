#pragma once

#include <functional>
#include <string>
#include <vector>

#include "rect2/varifold.hpp"

namespace rect2 {

// Exponent tau with limsup r^{-tau} phi(a, r, T) controlled for curvature in L^p:
// 1 on the branch m = 1, m = 2 with p > 1, m > 2 with p >= 2m/(m+2); otherwise
// m p / (2 (m - p)) for sup{2, p} < m, and 1 (as a supremum of admissible tau < 1) for m = 2, p <= 1.
double theory_tau(int m, double p);

struct DecayOptions {
    int K = 3;                       // radii r0 4^{-k}, k = 0..K
    double resolve_factor = 8.0;     // resolved when r >= resolve_factor * local spacing
    std::size_t min_particles = 50;  // and the ball holds at least this many particles
    double p = 2.0;                  // curvature integrability exponent for the theoretical rate
};

struct DecayReport {
    int m = 0;
    std::vector<double> a, T;
    std::vector<double> radii, phi;
    std::vector<std::size_t> counts;
    std::vector<unsigned char> resolved;
    double spacing = 0.0;       // local inter-particle spacing at a
    bool tau_defined = false;   // false when fewer than two resolved scales carry phi > 0
    double tau_hat = 0.0, tau_lo = 0.0, tau_hi = 0.0;  // fit and +-2 standard errors
    double theory_tau = 1.0;
    double p = 2.0;
    std::vector<unsigned char> induction_pass;  // filled by callers running quarter_induction
    std::string to_json() const;
};

// phi(a, r, T) at r0 4^{-k} with a log-log least squares exponent over the resolved scales.
// Throws AnalysisError("under-resolved ...") when no scale is resolved.
DecayReport decay_scan(const DiscreteVarifold& V, const double* a, const double* T, double r0,
                       const DecayOptions& opt = {});

// CSV: point,r,phi,resolved,tau_hat,tau_lo,tau_hi,theory_tau,induction_pass
std::string decay_csv_header();
std::string decay_csv_rows(const DecayReport& rep, std::size_t point_id);

// per particle mean curvature vector (n entries); used for the psi measure
using CurvatureProvider = std::function<void(std::size_t particle, double* h)>;

struct InductionOptions {
    double delta = 0.0;        // 0: 2^{-m-3}
    double Delta2 = 0.0;       // 0: estimated as 2 x median of the per-scale requirement
    double gamma = 0.0;        // 0: sup over scales of (H + K) / r
    double p = 2.0;            // psi = ||delta V|| for p = 1, |h|^p ||V|| for p > 1
    int Q = 0;                 // 0: rounded density ratio at the largest radius
    double eps = 0.5;          // reported epsilon for the two smallness hypotheses
    std::vector<unsigned char> Z;  // per particle mask (empty: all particles)
    CurvatureProvider curvature;   // default: mean_curvature_estimate on a particle subsample
    std::size_t curvature_samples = 48;
    double curvature_radius_factor = 10.0;  // estimate radius = factor x local spacing
};

struct InductionStep {
    double r = 0.0, f_r = 0.0, f_next = 0.0;  // f(r) and f(r/4)
    double H = 0.0, Kt = 0.0;                 // height and curvature terms at r
    double requirement = 0.0;                 // (2^{-m} f(r/4) - delta f(r))_+ / (H + K)
    double contraction_rhs = 0.0;             // 2^m (delta f(r) + Delta2 (H + K))
    bool pass_contraction = false, pass_linear = false;
    bool pass() const { return pass_contraction && pass_linear; }
    std::vector<HypothesisCheck> hypotheses;
};

struct InductionReport {
    int m = 0, Q = 0;
    double delta = 0.0, Delta2 = 0.0, Delta3 = 0.0, gamma = 0.0;
    double Delta3_bound = 0.0;  // max(2^{m+3} Delta2 gamma, 2^{m+2} f(R) / R)
    std::vector<double> radii, f;
    std::vector<InductionStep> steps;  // step k goes from radii[k] to radii[k+1]
    bool closes = false;
    bool hypotheses_ok = true;
    std::vector<std::string> failed_hypotheses;
    std::string to_json() const;
};

// f(r) = (r^{-m} int_{C(T,a,r,r)} |S - T|^2 dV)^{1/2}
double cylinder_tilt(const DiscreteVarifold& V, const double* a, const double* T, double r);

// radii: strictly decreasing by factor 4.
InductionReport quarter_induction(const DiscreteVarifold& V, const double* a, const double* T,
                                  const std::vector<double>& radii, const InductionOptions& opt = {});

struct L2DiffRow {
    double r = 0.0, quotient = 0.0;
    std::size_t count = 0;
    bool resolved = false;
};

struct L2DiffReport {
    std::vector<double> a;   // snapped base point
    std::vector<double> dR;  // m blocks of n x n: derivative of R along the tangent coordinates
    std::vector<L2DiffRow> rows;
    double spacing = 0.0;
    double kappa = 0.0;   // max_j |d_j R| / sqrt(2), a curvature scale
    double floor = 0.0;   // kappa^4 (8 spacing)^2 / 2: quotient of a C^2 surface at the resolution limit
    int inversions = 0;   // increases between consecutive resolved radii
    double final_quotient = 0.0;
    std::string to_json() const;
};

// Mean of (|R(z) - R(a) - <R(a)(z - a), ap DR(a)>| / |z - a|)^2 over B(a, r) for each radius.
// a snaps to the nearest particle. ap DR(a) is fitted by weighted least squares over the smallest
// resolved radius.
L2DiffReport l2_diff_check(const DiscreteVarifold& V, const double* a, const std::vector<double>& radii,
                           double resolve_factor = 8.0);

}  // namespace rect2
