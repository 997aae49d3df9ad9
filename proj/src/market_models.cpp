#include "ppde/market_models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ppde/errors.hpp"

namespace ppde {

Mat cholesky(const Mat& covariance) {
    const int d = covariance.rows;
    if (covariance.cols != d) throw std::invalid_argument("cholesky: matrix must be square");
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < i; ++j)
            if (std::abs(covariance.at(i, j) - covariance.at(j, i)) > 1e-12)
                throw std::invalid_argument("cholesky: matrix not symmetric at (" + std::to_string(i) + "," +
                                            std::to_string(j) + ")");
    Mat c(d, d, 0.0);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = covariance.at(i, j);
            for (int k = 0; k < j; ++k) s -= c.at(i, k) * c.at(j, k);
            if (i == j) {
                if (s <= 0.0)
                    throw std::invalid_argument("cholesky: matrix not positive definite at pivot " +
                                                std::to_string(i) + " (value " + std::to_string(s) + ")");
                c.at(i, i) = std::sqrt(s);
            } else {
                c.at(i, j) = s / c.at(j, j);
            }
        }
    }
    return c;
}

std::vector<double> sample_initial_values(const InitialLaw& law, int count, Xoshiro256pp& rng) {
    if (count < 1) throw std::invalid_argument("sample_initial_values: count must be >= 1, got " + std::to_string(count));
    std::vector<double> out(count);
    if (law.kind == InitialLaw::Kind::fixed) {
        if (law.values.empty()) throw std::invalid_argument("sample_initial_values: fixed law has no values");
        for (int i = 0; i < count; ++i) out[i] = law.values[i % law.values.size()];
        return out;
    }
    if (!(law.tau > 0.0)) throw std::invalid_argument("sample_initial_values: tau must be positive, got " + std::to_string(law.tau));
    std::normal_distribution<double> normal;
    const double drift = (law.mu - 0.5 * law.sigma_law * law.sigma_law) * law.tau;
    const double vol = law.sigma_law * std::sqrt(law.tau);
    for (int i = 0; i < count; ++i) out[i] = std::exp(drift + vol * normal(rng));
    return out;
}

std::vector<double> sample_beta(const BetaLaw& range, int count, Xoshiro256pp& rng) {
    if (range.lo > range.hi)
        throw std::invalid_argument("sample_beta: inverted range [" + std::to_string(range.lo) + ", " +
                                    std::to_string(range.hi) + "]");
    std::vector<double> out(count);
    if (range.kind == BetaLaw::Kind::fixed || range.lo == range.hi) {
        std::fill(out.begin(), out.end(), range.lo);
        return out;
    }
    std::uniform_real_distribution<double> uni(range.lo, range.hi);
    for (int i = 0; i < count; ++i) out[i] = uni(rng);
    return out;
}

Mat restrict_to_coarse(const PathBatch& pb) {
    const int nc = pb.grid.n_coarse();
    const int ratio = pb.grid.ratio();
    Mat out(pb.batch, (nc + 1) * pb.d);
    for (int b = 0; b < pb.batch; ++b) {
        const double* src = pb.paths.row(b);
        double* dst = out.row(b);
        for (int k = 0; k <= nc; ++k)
            for (int i = 0; i < pb.d; ++i) dst[k * pb.d + i] = src[(k * ratio) * pb.d + i];
    }
    return out;
}

Mat coarse_brownian_increments(const PathBatch& pb) {
    const int nc = pb.grid.n_coarse();
    const int ratio = pb.grid.ratio();
    Mat out(pb.batch, nc * pb.d_w, 0.0);
    for (int b = 0; b < pb.batch; ++b) {
        const double* src = pb.brownian.row(b);
        double* dst = out.row(b);
        for (int m = 0; m < nc; ++m)
            for (int j = 0; j < ratio; ++j)
                for (int l = 0; l < pb.d_w; ++l) dst[m * pb.d_w + l] += src[(m * ratio + j) * pb.d_w + l];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Black-Scholes

BlackScholesModel::BlackScholesModel(BlackScholesParams params) : params_(std::move(params)) {
    if (params_.d < 1) throw config_error("model: d must be >= 1");
    if (params_.d > 16) throw config_error("model: d > 16 is not supported");
    if (static_cast<int>(params_.sigma.size()) != params_.d)
        throw config_error("model.sigma: expected " + std::to_string(params_.d) + " entries, got " +
                           std::to_string(params_.sigma.size()));
    for (double s : params_.sigma)
        if (s < 0.0) throw config_error("model.sigma: volatilities must be non-negative");
    if (params_.covariance.rows == 0) {
        // default to independent drivers
        params_.covariance = Mat(params_.d, params_.d, 0.0);
        for (int i = 0; i < params_.d; ++i) params_.covariance.at(i, i) = 1.0;
    }
    if (params_.covariance.rows != params_.d || params_.covariance.cols != params_.d)
        throw config_error("model.covariance: expected a " + std::to_string(params_.d) + "x" +
                           std::to_string(params_.d) + " matrix");
    chol_ = cholesky(params_.covariance);
    if (params_.beta.kind == BetaLaw::Kind::fixed) {
        params_.beta.lo = params_.beta.hi = params_.sigma[0];
    }
}

void BlackScholesModel::sigma_for(double beta, std::span<double> out) const {
    for (int i = 0; i < params_.d; ++i)
        out[i] = params_.beta.kind == BetaLaw::Kind::uniform ? beta : params_.sigma[i];
}

double BlackScholesModel::fixed_beta() const {
    if (params_.beta.kind == BetaLaw::Kind::uniform && params_.beta.lo != params_.beta.hi)
        throw config_error("model.beta: a fixed beta is required here but the law is uniform [" +
                           std::to_string(params_.beta.lo) + ", " + std::to_string(params_.beta.hi) + ")");
    return params_.beta.lo;
}

PathBatch BlackScholesModel::simulate(const TimeGrid& grid, int batch, std::uint64_t seed) const {
    if (batch < 1) throw std::invalid_argument("simulate: batch must be >= 1, got " + std::to_string(batch));
    const int d = params_.d;
    const int nf = grid.n_fine();
    PathBatch pb;
    pb.grid = grid;
    pb.batch = batch;
    pb.d = d;
    pb.d_w = d;
    pb.n_aux = 0;
    pb.paths = Mat(batch, (nf + 1) * d);
    pb.brownian = Mat(batch, nf * d);
    pb.beta.resize(batch);
    pb.seed = seed;

    const double dt = grid.dt_fine();
    const double sqdt = std::sqrt(dt);
    std::vector<double> sig(d), dw(d);

    for (int b = 0; b < batch; ++b) {
        auto rng_x0 = path_rng(seed, StreamTag::initial_values, b);
        auto rng_beta = path_rng(seed, StreamTag::beta, b);
        auto rng_w = path_rng(seed, StreamTag::simulation, b);

        const std::vector<double> x0 = sample_initial_values(params_.x0, d, rng_x0);
        pb.beta[b] = sample_beta(params_.beta, 1, rng_beta)[0];
        sigma_for(pb.beta[b], sig);

        double* path = pb.paths.row(b);
        double* incr = pb.brownian.row(b);
        for (int i = 0; i < d; ++i) path[i] = x0[i];

        std::normal_distribution<double> normal;
        for (int j = 0; j < nf; ++j) {
            double* w = incr + j * d;
            for (int l = 0; l < d; ++l) w[l] = sqdt * normal(rng_w);
            const double* prev = path + j * d;
            double* next = path + (j + 1) * d;
            for (int i = 0; i < d; ++i) {
                double corr = 0.0;
                for (int l = 0; l <= i; ++l) corr += chol_.at(i, l) * w[l];
                next[i] = prev[i] + params_.rate * prev[i] * dt + sig[i] * prev[i] * corr;
            }
        }
    }
    return pb;
}

void BlackScholesModel::continue_path(const TimeGrid& grid, int i0, double beta, Mat& path, Mat* /*aux*/,
                                      Mat* dw_coarse, Xoshiro256pp& rng) const {
    const int d = params_.d;
    const int nf = grid.n_fine();
    const int ratio = grid.ratio();
    const double dt = grid.dt_fine();
    const double sqdt = std::sqrt(dt);
    double sig[16], w[16];
    sigma_for(beta, std::span<double>(sig, d));

    std::normal_distribution<double> normal;
    for (int j = i0; j < nf; ++j) {
        for (int l = 0; l < d; ++l) w[l] = sqdt * normal(rng);
        if (dw_coarse) {
            double* acc = dw_coarse->row(j / ratio);
            for (int l = 0; l < d; ++l) acc[l] += w[l];
        }
        const double* prev = path.row(j);
        double* next = path.row(j + 1);
        for (int i = 0; i < d; ++i) {
            double corr = 0.0;
            for (int l = 0; l <= i; ++l) corr += chol_.at(i, l) * w[l];
            next[i] = prev[i] + params_.rate * prev[i] * dt + sig[i] * prev[i] * corr;
        }
    }
}

void BlackScholesModel::diffusion_at(std::span<const double> x, std::span<const double> /*aux*/, double beta,
                                     std::span<double> out) const {
    const int d = params_.d;
    double sig[16];
    sigma_for(beta, std::span<double>(sig, d));
    for (int i = 0; i < d; ++i)
        for (int l = 0; l < d; ++l) out[i * d + l] = sig[i] * x[i] * chol_.at(i, l);
}

// ---------------------------------------------------------------------------
// Heston, full-truncation Euler

HestonModel::HestonModel(HestonParams params) : params_(params) {
    if (std::abs(params_.rho) > 1.0)
        throw config_error("model.rho: correlation must lie in [-1, 1], got " + std::to_string(params_.rho));
    if (params_.kappa < 0.0 || params_.eta < 0.0)
        throw config_error("model: kappa and eta must be non-negative");
    if (params_.v0 < 0.0) throw config_error("model.v0: initial variance must be non-negative");
    if (params_.s0 <= 0.0) throw config_error("model.s0: initial price must be positive");
}

PathBatch HestonModel::simulate(const TimeGrid& grid, int batch, std::uint64_t seed) const {
    if (batch < 1) throw std::invalid_argument("simulate: batch must be >= 1, got " + std::to_string(batch));
    const int nf = grid.n_fine();
    PathBatch pb;
    pb.grid = grid;
    pb.batch = batch;
    pb.d = 1;
    pb.d_w = 2;
    pb.n_aux = 1;
    pb.paths = Mat(batch, nf + 1);
    pb.aux = Mat(batch, nf + 1);
    pb.brownian = Mat(batch, 2 * nf);
    pb.beta.assign(batch, params_.v0);
    pb.seed = seed;

    for (int b = 0; b < batch; ++b) {
        auto rng_w = path_rng(seed, StreamTag::simulation, b);
        double* s = pb.paths.row(b);
        double* v = pb.aux.row(b);
        s[0] = params_.s0;
        v[0] = params_.v0;
        const double dt = grid.dt_fine();
        const double sqdt = std::sqrt(dt);
        const double rho_c = std::sqrt(1.0 - params_.rho * params_.rho);
        std::normal_distribution<double> normal;
        double* incr = pb.brownian.row(b);
        for (int j = 0; j < nf; ++j) {
            const double dws = sqdt * normal(rng_w);
            const double dwp = sqdt * normal(rng_w);
            incr[2 * j] = dws;
            incr[2 * j + 1] = dwp;
            const double dwv = params_.rho * dws + rho_c * dwp;
            const double vp = v[j] > 0.0 ? v[j] : 0.0;
            const double sq = std::sqrt(vp);
            v[j + 1] = v[j] + params_.kappa * (params_.mu_bar - vp) * dt + params_.eta * sq * dwv;
            s[j + 1] = s[j] + params_.rate * s[j] * dt + sq * s[j] * dws;
        }
    }
    return pb;
}

void HestonModel::continue_path(const TimeGrid& grid, int i0, double /*beta*/, Mat& path, Mat* aux, Mat* dw_coarse,
                                Xoshiro256pp& rng) const {
    if (aux == nullptr)
        throw std::invalid_argument("continue_path: Heston requires the variance history in aux");
    const int nf = grid.n_fine();
    const int ratio = grid.ratio();
    const double dt = grid.dt_fine();
    const double sqdt = std::sqrt(dt);
    const double rho_c = std::sqrt(1.0 - params_.rho * params_.rho);
    std::normal_distribution<double> normal;
    for (int j = i0; j < nf; ++j) {
        const double dws = sqdt * normal(rng);
        const double dwp = sqdt * normal(rng);
        if (dw_coarse) {
            double* acc = dw_coarse->row(j / ratio);
            acc[0] += dws;
            acc[1] += dwp;
        }
        const double dwv = params_.rho * dws + rho_c * dwp;
        const double vj = aux->at(j, 0);
        const double vp = vj > 0.0 ? vj : 0.0;
        const double sq = std::sqrt(vp);
        aux->at(j + 1, 0) = vj + params_.kappa * (params_.mu_bar - vp) * dt + params_.eta * sq * dwv;
        path.at(j + 1, 0) = path.at(j, 0) + params_.rate * path.at(j, 0) * dt + sq * path.at(j, 0) * dws;
    }
}

void HestonModel::diffusion_at(std::span<const double> x, std::span<const double> aux, double /*beta*/,
                               std::span<double> out) const {
    if (aux.empty()) throw std::invalid_argument("diffusion_at: Heston requires the variance value");
    const double vp = aux[0] > 0.0 ? aux[0] : 0.0;
    out[0] = std::sqrt(vp) * x[0]; // loading on W^S
    out[1] = 0.0;                  // price does not load on the orthogonal driver
}

} // namespace ppde
