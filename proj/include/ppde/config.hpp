#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppde/encoding.hpp"
#include "ppde/market_models.hpp"
#include "ppde/payoffs.hpp"
#include "ppde/time_grid.hpp"
#include "ppde/training.hpp"

namespace ppde {

// Fully resolved run configuration. Parsing applies defaults and rejects
// unknown keys; the effective form is what gets hashed and echoed to disk.
struct RunConfig {
    std::uint64_t seed = 1;

    std::string model_type;  // "black_scholes" | "heston" (required)
    BlackScholesParams bs;
    HestonParams heston;

    double maturity = 0.5;
    int n_fine = 100;
    int n_coarse = 10;

    std::string payoff_type = "lookback";  // | "autocallable"
    double ac_barrier = 1.02;
    std::vector<double> ac_obs_times = {1.0 / 6.0, 1.0 / 3.0};
    std::vector<double> ac_payoffs = {1.1, 1.2};
    double ac_redemption_a = 0.9;
    double ac_redemption_b = 0.0;

    EncodingSpec encoding;
    NetworkConfig network;
    TrainingConfig training;

    long price_n_mc = 100000;
    double alpha = 0.05;
    double bump_rel = 1e-3;

    long oracle_n_mc = 100000;
    int test_paths = 256;
    bool hedge_metrics = true;
    std::vector<double> metric_betas;  // evaluation rows; empty = the model's own beta
    int cv_corr_paths = 4096;
};

RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config_file(const std::string& path);

// Canonical JSON with every default materialized; re-parsing it reproduces the
// same RunConfig. Key order is alphabetical, so the dump is byte-stable.
nlohmann::json effective_config(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

TimeGrid make_grid(const RunConfig& cfg);
std::unique_ptr<MarketModel> make_model(const RunConfig& cfg);
// Same model with the designated parameter pinned to `beta` (per-row metric
// evaluation of a parametric family).
std::unique_ptr<MarketModel> make_model_with_beta(const RunConfig& cfg, double beta);
std::unique_ptr<Payoff> make_payoff(const RunConfig& cfg, const TimeGrid& grid);

} // namespace ppde
