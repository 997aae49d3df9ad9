#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ppde/encoding.hpp"
#include "ppde/market_models.hpp"
#include "ppde/payoffs.hpp"
#include "ppde/training.hpp"

namespace ppde {

// A single path's state up to a conditioning time: rows 0..i_t of `path` (and
// `aux` for models with latent state) are meaningful, later rows are
// overwritten by continuations.
struct PathHistory {
    TimeGrid grid;
    int i_t = 0;  // fine index of the conditioning time
    double beta = 0.0;
    Mat path;  // [N_f+1 x d]
    Mat aux;   // [N_f+1 x n_aux], empty when the model has none
};

PathHistory history_from_batch(const PathBatch& pb, int path_index, int i_t);

struct PriceEstimate {
    double estimate = 0.0;
    double std = 0.0;  // empirical standard deviation of the per-path values
    double lo = 0.0;
    double hi = 0.0;
    long n = 0;
    double alpha = 0.05;
    std::uint64_t seed = 0;
};

// mean +/- z_{alpha/2} std / sqrt(n).
std::array<double, 2> confidence_interval(double mean, double std_dev, long n, double alpha);

// Plain Monte Carlo: N_MC continuations from (t, x_t), discounted payoff mean
// with a CLT interval.
PriceEstimate mc_price(const PathHistory& h, const MarketModel& model, const Payoff& payoff,
                       long n_mc, double alpha, std::uint64_t seed);

struct VerticalDerivative {
    std::vector<double> value;    // one entry per asset
    std::vector<double> std_err;  // CLT standard error per entry
    long n = 0;
};

// Central finite difference of the conditional price under a bump of the
// time-t value held to maturity, with common random numbers across branches.
VerticalDerivative mc_vertical_derivative(const PathHistory& h, const MarketModel& model,
                                          const Payoff& payoff, long n_mc, double bump_h,
                                          std::uint64_t seed);

// De-biased control-variate estimator: per continuation,
// M = e^{-rT} g - sum_{m >= k_t} e^{-r t_m} R_phi(t_m) . sigma(t_m) dW_m,
// reported as e^{r t} times the sample mean with a CLT interval. t must lie on
// the coarse grid.
PriceEstimate cv_price(const PathHistory& h, const MarketModel& model, const Payoff& payoff,
                       SequenceModel& hedge, const EncodingSpec& encoding, long n_mc, double alpha,
                       std::uint64_t seed);

} // namespace ppde
