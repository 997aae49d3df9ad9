#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ppde/market_models.hpp"
#include "ppde/matrix.hpp"
#include "ppde/pricing.hpp"
#include "ppde/training.hpp"

namespace ppde {

// On-disk artifacts. Every CSV starts with a comment line carrying the config
// hash and seed so any table can be traced back to the run that produced it;
// all numbers are written in shortest round-trip form for byte-stable reruns.

void write_loss_history_csv(const std::string& path, const std::vector<LossRecord>& records,
                            std::uint64_t config_hash, std::uint64_t seed);

// Price channels get asset_index 0..d-1; auxiliary state (Heston variance)
// continues at d..d+n_aux-1.
void write_paths_csv(const std::string& path, const PathBatch& pb, std::uint64_t config_hash);

// Flattened per-window signatures, sigs is [batch x n_windows*block].
void write_sig_csv(const std::string& path, const Mat& sigs, int n_windows, int block,
                   std::uint64_t config_hash, std::uint64_t seed);

void write_history_csv(const std::string& path, const Mat& values, std::uint64_t config_hash,
                       std::uint64_t seed);

// Reads a price history covering fine indices 0..i_t; every (time, asset)
// cell must appear exactly once or the file is rejected.
Mat read_history_csv(const std::string& path, int d);

void write_price_json(const std::string& path, const PriceEstimate& est, std::uint64_t config_hash);
std::string price_json_string(const PriceEstimate& est, std::uint64_t config_hash);

// One evaluation table row; absent fields print as empty CSV cells (the
// orthogonal method trains no hedge network, Heston rows have no sigma).
struct MetricsRow {
    std::string method;
    std::string net_type;
    std::string net_input;
    std::optional<double> sigma;
    double e_integral = 0.0;
    std::optional<double> e_hedging;
    std::optional<double> rho;
};

void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                       std::uint64_t config_hash, std::uint64_t seed);

} // namespace ppde
