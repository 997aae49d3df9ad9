#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ppde/matrix.hpp"
#include "ppde/rng.hpp"
#include "ppde/time_grid.hpp"

namespace ppde {

struct InitialLaw {
    enum class Kind { fixed, lognormal } kind = Kind::fixed;
    std::vector<double> values;  // fixed: one entry per asset
    double mu = 0.0;             // lognormal parameters
    double sigma_law = 0.0;
    double tau = 0.0;
};

// Designated model parameter fed to the networks. For Black-Scholes this is
// the (shared) volatility; a uniform law gives the parametric family.
struct BetaLaw {
    enum class Kind { fixed, uniform } kind = Kind::fixed;
    double lo = 0.0;
    double hi = 0.0;
};

struct BlackScholesParams {
    int d = 1;
    double rate = 0.0;
    std::vector<double> sigma;  // per-asset volatilities (overridden per path when beta is uniform)
    Mat covariance;             // d x d instantaneous correlation of the driving Brownians
    InitialLaw x0;
    BetaLaw beta;
};

struct HestonParams {
    double rate = 0.0;
    double kappa = 0.0;
    double mu_bar = 0.0;
    double eta = 0.0;
    double rho = 0.0;
    double v0 = 0.0;
    double s0 = 0.0;
};

// Simulated batch on the fine grid. paths holds the price channels; models
// with extra state (Heston variance) carry it in aux.
struct PathBatch {
    TimeGrid grid;
    int batch = 0;
    int d = 0;      // price channels
    int d_w = 0;    // Brownian channels
    int n_aux = 0;  // auxiliary state channels
    Mat paths;      // [batch x (N_f+1)*d]
    Mat aux;        // [batch x (N_f+1)*n_aux]
    Mat brownian;   // [batch x N_f*d_w], fine increments
    std::vector<double> beta;  // per-path model parameter
    std::uint64_t seed = 0;
};

// Lower-triangular Cholesky factor C with C C^T = covariance.
Mat cholesky(const Mat& covariance);

std::vector<double> sample_initial_values(const InitialLaw& law, int count, Xoshiro256pp& rng);
std::vector<double> sample_beta(const BetaLaw& range, int count, Xoshiro256pp& rng);

// Exact subsample of the price channels at coarse indices: [batch x (N_c+1)*d].
Mat restrict_to_coarse(const PathBatch& pb);

// Brownian increments summed over each coarse interval: [batch x N_c*d_w].
Mat coarse_brownian_increments(const PathBatch& pb);

// Uniform interface over the two models for training, pricing and evaluation.
class MarketModel {
public:
    virtual ~MarketModel() = default;

    virtual int dim() const = 0;
    virtual int brownian_dim() const = 0;
    virtual int aux_dim() const = 0;
    virtual double rate() const = 0;

    virtual PathBatch simulate(const TimeGrid& grid, int batch, std::uint64_t seed) const = 0;

    // Continue a single path from fine index i0 (row i0 of `path` must hold the
    // current state). Fills rows i0+1..N_f; when dw_coarse is non-null the
    // coarse Brownian sums for intervals starting at or after i0 are recorded.
    virtual void continue_path(const TimeGrid& grid, int i0, double beta, Mat& path, Mat* aux, Mat* dw_coarse,
                               Xoshiro256pp& rng) const = 0;

    // Diffusion coefficient sigma(t, x; beta) as a [d x d_w] row-major block.
    virtual void diffusion_at(std::span<const double> x, std::span<const double> aux, double beta,
                              std::span<double> out) const = 0;

    // Representative beta when the law is degenerate (used for histories
    // loaded from file); throws for a non-degenerate law.
    virtual double fixed_beta() const = 0;

    // Auxiliary state at t=0 (empty for models without extra state). Lets a
    // price history that only records asset values be continued from time 0.
    virtual std::vector<double> initial_aux() const { return {}; }
};

class BlackScholesModel final : public MarketModel {
public:
    explicit BlackScholesModel(BlackScholesParams params);

    int dim() const override { return params_.d; }
    int brownian_dim() const override { return params_.d; }
    int aux_dim() const override { return 0; }
    double rate() const override { return params_.rate; }
    const BlackScholesParams& params() const { return params_; }
    const Mat& chol() const { return chol_; }

    PathBatch simulate(const TimeGrid& grid, int batch, std::uint64_t seed) const override;
    void continue_path(const TimeGrid& grid, int i0, double beta, Mat& path, Mat* aux, Mat* dw_coarse,
                       Xoshiro256pp& rng) const override;
    void diffusion_at(std::span<const double> x, std::span<const double> aux, double beta,
                      std::span<double> out) const override;
    double fixed_beta() const override;

    // Effective per-asset volatilities for one path.
    void sigma_for(double beta, std::span<double> out) const;

private:
    BlackScholesParams params_;
    Mat chol_;
};

class HestonModel final : public MarketModel {
public:
    explicit HestonModel(HestonParams params);

    int dim() const override { return 1; }
    int brownian_dim() const override { return 2; }
    int aux_dim() const override { return 1; }
    double rate() const override { return params_.rate; }
    const HestonParams& params() const { return params_; }

    PathBatch simulate(const TimeGrid& grid, int batch, std::uint64_t seed) const override;
    void continue_path(const TimeGrid& grid, int i0, double beta, Mat& path, Mat* aux, Mat* dw_coarse,
                       Xoshiro256pp& rng) const override;
    void diffusion_at(std::span<const double> x, std::span<const double> aux, double beta,
                      std::span<double> out) const override;
    double fixed_beta() const override { return params_.v0; }
    std::vector<double> initial_aux() const override { return {params_.v0}; }

private:
    HestonParams params_;
};

} // namespace ppde
