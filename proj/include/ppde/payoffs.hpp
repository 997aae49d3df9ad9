#pragma once

#include <memory>
#include <vector>

#include "ppde/matrix.hpp"

namespace ppde {

struct AutocallSpec {
    double barrier = 0.0;                  // compared against S_t / S_0
    std::vector<int> observation_indices;  // strictly increasing fine-grid indices
    std::vector<double> premature_payoffs; // Q_j, one per observation
    double redemption_a = 0.0;             // q(s) = a*s + b
    double redemption_b = 0.0;
};

// Positive part of (running max of the asset sum over the fine grid minus the
// terminal sum). path is [n_times x d].
double lookback_payoff(const Mat& path);
double lookback_payoff(const double* path, int n_times, int d);

// First observation j with S_{t_j}/S_0 >= barrier pays Q_j; if none knocks,
// pays the redemption q(S_T). path is [n_times x 1].
double autocallable_payoff(const Mat& path, const AutocallSpec& spec);
double autocallable_payoff(const double* path, int n_times, const AutocallSpec& spec);

double discount(double value, double r, double from_t, double to_t);

// Polymorphic payoff over a fine path (price channels only).
class Payoff {
public:
    virtual ~Payoff() = default;
    virtual double operator()(const double* path, int n_times, int d) const = 0;
};

class LookbackPayoff final : public Payoff {
public:
    double operator()(const double* path, int n_times, int d) const override {
        return lookback_payoff(path, n_times, d);
    }
};

class AutocallablePayoff final : public Payoff {
public:
    explicit AutocallablePayoff(AutocallSpec spec);
    double operator()(const double* path, int n_times, int d) const override;
    const AutocallSpec& spec() const { return spec_; }

private:
    AutocallSpec spec_;
};

} // namespace ppde
