#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rect2/dual.hpp"
#include "rect2/grid.hpp"

namespace rect2 {

// Integrand on Hom(R^m, R^k), k = n - m. A point sigma is a k x m matrix
// stored row-major: sigma[j*m + i] = sigma(e_i)_j, the same layout as a gradient.
// D2F is (k m) x (k m) row-major.
struct Integrand {
    int m = 1, k = 1;
    std::string name;
    std::function<double(const double*)> F;
    std::function<void(const double*, double*)> DF;
    std::function<void(const double*, double*)> D2F;
    double epsilon = 0.0;  // certified bound for ||D2F - Upsilon||; kInf when not close
    double lipD2F = 0.0;   // kInf allowed
    // cutoff diagnostics (NaN unless produced by cutoff_integrand)
    double cutoff_s = std::nan("");
    double cutoff_gamma = std::nan("");
    double cutoff_delta = std::nan("");
    std::vector<double> cutoff_center;

    int dim() const { return m * k; }
    double value(const std::vector<double>& s) const { return F(s.data()); }
    std::vector<double> grad(const std::vector<double>& s) const;
    std::vector<double> hess(const std::vector<double>& s) const;
};

Integrand dirichlet_integrand(int m, int codim);
Integrand area_integrand(int m, int codim);

struct CutoffOptions {
    int samples = 4000;          // sampled points for s and Gamma-hat
    int lip_pairs = 10000;       // random pairs for Lip D2F
    std::uint64_t seed = 12345;
};
Integrand cutoff_integrand(const Integrand& base, const std::vector<double>& center, double delta,
                           const CutoffOptions& opt = {});

// Operator norm of a symmetric bilinear form given as an n x n matrix.
double bilinear_norm(const double* B, int n);
// ||D2F(sigma) - Upsilon||
double upsilon_distance(const Integrand& F, const double* sigma);
inline double kappa_constant(int m, int codim) { return std::sqrt(2.0) * m * codim; }

// Linear map from symmetric forms phi in Sym^2(R^m, R^k) to R^k.
// coef[l*(k*m*m) + j*m*m + i*m + i2] is the weight of phi_j(e_i, e_i2) in component l.
struct CurvatureContraction {
    int m = 1, k = 1;
    std::vector<double> coef;
    void apply(const double* phi, double* out) const;
    double norm() const;  // Hilbert-Schmidt norm of the symmetric coefficient array
    static CurvatureContraction trace(int m, int codim);
};

CurvatureContraction c_f(const Integrand& F, const double* sigma);
CurvatureContraction operator-(const CurvatureContraction& a, const CurvatureContraction& b);

struct ELResult {
    DistributionRep flux_form;                   // g = DF(Du)
    std::optional<DistributionRep> density_form;  // f = <D2u, C_F(Du)>
};
ELResult apply_EL(const Integrand& F, const SampledField& u, bool with_density = true);

struct SolverOptions {
    double tol = 1e-10;           // on the nodal residual's infinity norm
    int max_iter = 500;
    double ellipticity_margin = 0.2;
    bool enforce_margin = true;
};

struct SolveDiagnostics {
    int iterations = 0;
    double residual = 0.0;
    double energy = 0.0;
    int gradient_steps = 0;
    std::vector<double> residual_history;
    std::string to_json() const;
};

// -int <D theta (.) Du, A> = T(theta) with u = 0 off the interior nodes of the ball.
// A: optional field with (k m)^2 components per node; identity (Upsilon) when null.
SampledField solve_dirichlet_linear(const BallRegion& region, const SampledField* A, const DistributionRep& T,
                                    const SolverOptions& opt = {}, SolveDiagnostics* diag = nullptr);
SampledField solve_dirichlet_linear(const SampledField* A, const DistributionRep& T, const Ball& b,
                                    const SolverOptions& opt = {}, SolveDiagnostics* diag = nullptr);

// Minimizes int F(Du) + int u.y over fields equal to `boundary` off the interior
// nodes; the minimizer satisfies L_F(v)(theta) = int theta.y.
SampledField solve_dirichlet_nonlinear(const Integrand& F, const SampledField& boundary, const std::vector<double>& y,
                                       const BallRegion& region, const SolverOptions& opt = {},
                                       SolveDiagnostics* diag = nullptr, const SampledField* initial = nullptr);
SampledField solve_dirichlet_nonlinear(const Integrand& F, const SampledField& boundary, const std::vector<double>& y,
                                       const Ball& b, const SolverOptions& opt = {}, SolveDiagnostics* diag = nullptr,
                                       const SampledField* initial = nullptr);

// Discrete energy used by the nonlinear solver (terms touching interior nodes only).
double discrete_energy(const Integrand& F, const SampledField& u, const std::vector<double>& y, const BallRegion& region);

struct EstimateRecord {
    std::string name;
    double lhs = 0.0, rhs = 0.0;
    double ratio() const { return rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? kInf : 0.0); }
};

struct AprioriReport {
    double spacing = 0.0;
    std::vector<EstimateRecord> records;
    // empirical constant per estimate name (max ratio over trials)
    std::vector<std::pair<std::string, double>> constants;
    double constant(const std::string& name) const;
    std::string to_json() const;
};

struct AprioriOptions {
    int trials = 3;
    std::uint64_t seed = 7;
    double radius = 0.5;
    SolverOptions solver;
};

// Evaluates the a priori estimates (global, interior, second order, affine,
// energy comparison, L1 comparison, L1 estimate) on random admissible data.
AprioriReport apriori_suite(const Integrand& F, const GridDomain& d, const Ball& b, const AprioriOptions& opt = {});

}  // namespace rect2
