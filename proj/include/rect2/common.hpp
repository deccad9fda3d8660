#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace rect2 {

inline constexpr const char* kVersion = "0.3.0";
inline constexpr int kSchemaVersion = 1;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Lebesgue measure of the unit ball in R^m.
inline double unit_ball_volume(int m) {
    if (m < 0) throw std::invalid_argument("unit_ball_volume: negative dimension");
    return std::pow(M_PI, 0.5 * m) / std::tgamma(0.5 * m + 1.0);
}

inline double sqr(double x) { return x * x; }

// Solver did not reach its tolerance; carries the last residual.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

// Least squares slope of log(y) against log(x); entries with y <= 0 are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rect2
