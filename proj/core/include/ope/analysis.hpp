#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "ope/mdp.hpp"

namespace ope::analysis {

/// Root of the sample-size balance equation
/// 2*m*x^2 + 2*ln(m)*ln(x) - ln(m) = 0, which separates the
/// truncation-dominated from the sample-dominated error regime.
struct RegimeRoot {
    std::int64_t m = 0;
    double root = 0.0;      // in (0, 1)
    double residual = 0.0;  // defining equation evaluated at root
};

/// Bisection on (0, 1); the map is strictly increasing there, negative near
/// zero and positive at one for m >= 2. Runs to full double precision; the
/// residual comes out below 1e-12 across m up to 1e7.
RegimeRoot solve_regime_root(std::int64_t m);

enum class BoundRegime { SmallH, LargeH };

inline std::string to_string(BoundRegime regime) {
    return regime == BoundRegime::SmallH ? "SMALL_H" : "LARGE_H";
}

/// SMALL_H when M0 * exp(-lambda0 * H) exceeds the regime root for m,
/// LARGE_H otherwise. Annotates reports with the active error-bound regime.
BoundRegime regime_classify(std::int64_t m, std::int64_t truncation, double lambda0, double m0);

/// Tail-probability bound min(1, mse / epsilon^2) for the estimate straying
/// farther than epsilon from the target.
double markov_bound(double mse_estimate, double epsilon);

/// Largest lambda on the grid {0.01, 0.02, ..., 0.50} for which the
/// absorption-time moment generating function converges, together with its
/// value; nullopt when even the smallest grid point diverges.
struct ExponentialMoment {
    double lambda0 = 0.0;
    double m0 = 0.0;
};
std::optional<ExponentialMoment> estimate_exponential_moment(const TabularMdp& mdp,
                                                             const Policy& policy);

}  // namespace ope::analysis
