#include "ppde/payoffs.hpp"

#include <cmath>
#include <stdexcept>

#include "ppde/errors.hpp"

namespace ppde {

double lookback_payoff(const double* path, int n_times, int d) {
    if (n_times < 1 || d < 1) throw std::invalid_argument("lookback_payoff: empty path");
    double running_max = -1e300;
    double terminal = 0.0;
    for (int t = 0; t < n_times; ++t) {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += path[t * d + i];
        if (s > running_max) running_max = s;
        if (t == n_times - 1) terminal = s;
    }
    double v = running_max - terminal;
    return v > 0.0 ? v : 0.0;
}

double lookback_payoff(const Mat& path) {
    return lookback_payoff(path.a.data(), path.rows, path.cols);
}

double autocallable_payoff(const double* path, int n_times, const AutocallSpec& spec) {
    if (n_times < 1) throw std::invalid_argument("autocallable_payoff: empty path");
    if (spec.observation_indices.size() != spec.premature_payoffs.size())
        throw config_error("autocallable: observation dates and payoffs must match in length");
    double s0 = path[0];
    if (s0 <= 0.0) throw std::invalid_argument("autocallable_payoff: nonpositive initial value");
    int prev = -1;
    for (std::size_t j = 0; j < spec.observation_indices.size(); ++j) {
        int idx = spec.observation_indices[j];
        if (idx <= prev || idx >= n_times)
            throw config_error("autocallable: observation indices must be increasing and inside the grid");
        prev = idx;
        if (path[idx] / s0 >= spec.barrier) return spec.premature_payoffs[j];
    }
    double st = path[n_times - 1];
    return spec.redemption_a * st + spec.redemption_b;
}

double autocallable_payoff(const Mat& path, const AutocallSpec& spec) {
    if (path.cols != 1) throw config_error("autocallable: payoff is defined for a single asset");
    return autocallable_payoff(path.a.data(), path.rows, spec);
}

double discount(double value, double r, double from_t, double to_t) {
    return value * std::exp(-r * (to_t - from_t));
}

AutocallablePayoff::AutocallablePayoff(AutocallSpec spec) : spec_(std::move(spec)) {
    if (spec_.observation_indices.empty())
        throw config_error("autocallable: at least one observation date is required");
}

double AutocallablePayoff::operator()(const double* path, int n_times, int d) const {
    if (d != 1) throw config_error("autocallable: payoff is defined for a single asset");
    return autocallable_payoff(path, n_times, spec_);
}

} // namespace ppde
