#pragma once

#include <cstdint>
#include <string>

#include "ppde/encoding.hpp"
#include "ppde/market_models.hpp"
#include "ppde/payoffs.hpp"
#include "ppde/pricing.hpp"
#include "ppde/training.hpp"

namespace ppde {

struct EvalOptions {
    long oracle_n_mc = 100000;
    double bump_rel = 1e-3;   // relative bump for the hedge oracle
    std::string cache_dir;    // empty disables the on-disk oracle cache
    std::uint64_t config_hash = 0;
};

// Conditional-price oracle F^MC(t_k, path_b) for k = 0..N_c-1, shape
// [batch x N_c]. Values are cached on disk keyed by the test paths, the
// sample count and the config hash; the oracle dominates evaluation runtime
// and is identical across methods.
Mat oracle_prices(const MarketModel& model, const Payoff& payoff, const PathBatch& test,
                  const EvalOptions& opt);

// Vertical-derivative oracle, shape [batch x N_c*d].
Mat oracle_hedges(const MarketModel& model, const Payoff& payoff, const PathBatch& test,
                  const EvalOptions& opt);

// Mean over test paths of sum_k (t_{k+1}-t_k) |F^MC(t_k) - R_theta(t_k)|.
double integral_error_price(SequenceModel& theta, const MarketModel& model, const Payoff& payoff,
                            const PathBatch& test, const EncodingSpec& encoding,
                            const EvalOptions& opt);

// Same weights with the l1 distance across assets between the
// vertical-derivative oracle and R_phi.
double integral_error_hedge(SequenceModel& phi, const MarketModel& model, const Payoff& payoff,
                            const PathBatch& test, const EncodingSpec& encoding,
                            const EvalOptions& opt);

// Pearson correlation between e^{-rT} g and the hedge's discrete stochastic
// integral over a fresh path set started at t = 0.
double cv_correlation(SequenceModel& phi, const MarketModel& model, const Payoff& payoff,
                      const TimeGrid& grid, int n_paths, const EncodingSpec& encoding,
                      std::uint64_t seed);

} // namespace ppde
