#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rect2/elliptic.hpp"

namespace rect2 {

// Q_a(x) = value + <x - a, gradient> + 1/2 <(x - a, x - a), hessian>
struct Jet2 {
    std::vector<double> a;
    std::vector<double> value;     // k
    std::vector<double> gradient;  // k*m, [c*m + i]
    std::vector<double> hessian;   // k*m*m, [c*m*m + i*m + j], symmetric
    int m = 0, k = 0;
    void eval(const double* x, double* out) const;
};

// "limsup finite" surrogate: max ratio within threshold and no growth beyond
// slack over the last three scales (radii ordered from large to small).
struct LimsupProxy {
    double threshold = 1e3;
    double slack = 2.0;
    bool finite(const std::vector<double>& ratios) const;
};

// "lim = 0" surrogate: log-log slope against r at least min_slope, or all of
// the last three values below floor.
struct VanishProxy {
    double min_slope = 0.5;
    double floor = 1e-8;
    bool vanishes(const std::vector<double>& radii, const std::vector<double>& values) const;
};

// r_k = r0 4^{-k} while r_k >= min_factor * spacing
std::vector<double> quarter_radii(double r0, double spacing, double min_factor = 8.0);

// sum_{i<=j} r^{-m/p+i} ||D^i(u - v)||_{p;a,r} with v the Dirichlet competitor (L_F(v) = 0, v = u off the ball interior)
double harmonic_deficit(const SampledField& u, const Integrand& F, const std::vector<double>& a, double r, double p,
                        int j, const SolverOptions& opt = {}, SampledField* competitor = nullptr,
                        const SampledField* warm = nullptr);
// r^{-m} inf_W ||u - W||_{1;a,r} over affine W (least squares fit, L1 evaluation)
double affine_deficit(const SampledField& u, const std::vector<double>& a, double r);

// Jet with value and gradient from u at a (interpolated, centered differences)
// and hessian from a least-squares polynomial fit over the smallest ball.
// decay (optional): r^{-2-m/p} ||u - Q_a||_{p;a,r} for each radius.
Jet2 taylor_fit(const SampledField& u, const std::vector<double>& a, const std::vector<double>& radii, double p,
                std::vector<double>* decay = nullptr);

struct LebesgueResult {
    std::vector<double> a;
    std::vector<double> radii;
    std::vector<double> ratios;  // r^{-1-m/q} |T|_{q;a,r}
    bool finite = false;
    std::optional<std::vector<double>> density;  // T_a
    std::vector<double> decay;   // r^{-1-m/q} |T - T_a|_{q;a,r}
    std::vector<double> raw;     // |T - T_a|_{q;a,r}
    bool vanishes = false;
    double coverage = 1.0;       // min coverage of the dual norm over radii
};

struct LebesgueOptions {
    LimsupProxy limsup;
    VanishProxy vanish;
};

std::vector<LebesgueResult> lebesgue_scan(const DistributionRep& T, double q, const std::vector<std::vector<double>>& points,
                                          const std::vector<double>& radii, const LebesgueOptions& opt = {});

struct PointReport {
    std::vector<double> a;
    std::vector<double> radii;
    std::vector<double> h, hprime;
    double k = kInf;  // smallest k with h <= k r^2 and h' <= k r on all scanned radii (inf above k_max)
    bool in_A = false;
    std::optional<Jet2> jet;
    std::vector<double> jet_decay;
    // structure of L_F(u) at a: sets A1, A2, B1, B2
    bool in_A1 = false, in_A2 = false, in_B1 = false, in_B2 = false;
    std::vector<double> b_ratios;  // r^{-m-1} int_{B(a,r)} |Du - Du(a)|^2
    std::optional<LebesgueResult> lebesgue;
    double identity_residual = std::nan("");
    std::string error;
};

struct ClassificationReport {
    std::vector<PointReport> points;
    double fraction_in_A() const;
    std::string to_json() const;
    std::string to_csv() const;
};

struct CriterionOptions {
    double p = 1.0;
    int j = 0;
    double k_max = 1e3;
    LimsupProxy limsup;
    VanishProxy vanish;
    SolverOptions solver;
    bool fit_jets = true;
};

ClassificationReport classify_criterion(const SampledField& u, const Integrand& F,
                                        const std::vector<std::vector<double>>& points, const std::vector<double>& radii,
                                        const CriterionOptions& opt = {});

ClassificationReport arbi_analysis(const SampledField& u, const Integrand& F, const std::vector<std::vector<double>>& points,
                                   const std::vector<double>& radii, const CriterionOptions& opt = {});

}  // namespace rect2
