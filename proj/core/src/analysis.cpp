#include "ope/analysis.hpp"

#include <cmath>
#include <stdexcept>

#include "ope/exact.hpp"

namespace ope::analysis {

RegimeRoot solve_regime_root(std::int64_t m) {
    if (m < 2) throw std::invalid_argument("solve_regime_root: m must be >= 2");
    const double md = static_cast<double>(m);
    const double log_m = std::log(md);
    auto f = [&](double x) { return 2.0 * md * x * x + 2.0 * log_m * std::log(x) - log_m; };

    double lo = 0.0, hi = 1.0;
    // bisect until the interval collapses to adjacent doubles
    while (true) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    RegimeRoot result;
    result.m = m;
    result.root = std::abs(f(lo)) <= std::abs(f(hi)) ? lo : hi;
    result.residual = f(result.root);
    return result;
}

BoundRegime regime_classify(std::int64_t m, std::int64_t truncation, double lambda0, double m0) {
    const double threshold = solve_regime_root(m).root;
    const double truncation_mass = m0 * std::exp(-lambda0 * static_cast<double>(truncation));
    return truncation_mass > threshold ? BoundRegime::SmallH : BoundRegime::LargeH;
}

double markov_bound(double mse_estimate, double epsilon) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("markov_bound: epsilon must be > 0");
    if (!(mse_estimate >= 0.0))
        throw std::invalid_argument("markov_bound: mse_estimate must be nonnegative");
    return std::min(1.0, mse_estimate / (epsilon * epsilon));
}

std::optional<ExponentialMoment> estimate_exponential_moment(const TabularMdp& mdp,
                                                             const Policy& policy) {
    std::optional<ExponentialMoment> best;
    for (int i = 1; i <= 50; ++i) {
        const double lambda = 0.01 * i;
        const auto mgf = absorption_time_mgf(mdp, policy, lambda);
        if (!mgf.has_value()) break;
        best = ExponentialMoment{lambda, *mgf};
    }
    return best;
}

}  // namespace ope::analysis
