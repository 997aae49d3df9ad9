#include "ppde/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ppde/errors.hpp"
#include "ppde/numerics.hpp"

namespace ppde {

namespace {

void check_history(const PathHistory& h, const MarketModel& model, const char* where) {
    const int nf = h.grid.n_fine();
    if (h.i_t < 0 || h.i_t > nf)
        throw config_error(std::string(where) + ": conditioning index outside the fine grid");
    if (h.path.rows != nf + 1 || h.path.cols != model.dim())
        throw config_error(std::string(where) + ": history shape does not match grid/model");
    if (model.aux_dim() > 0 && (h.aux.rows != nf + 1 || h.aux.cols != model.aux_dim()))
        throw config_error(std::string(where) +
                           ": model carries auxiliary state but the history has none");
}

void check_alpha(double alpha, const char* where) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw config_error(std::string(where) + ": alpha must lie in (0, 1)");
}

} // namespace

PathHistory history_from_batch(const PathBatch& pb, int path_index, int i_t) {
    if (path_index < 0 || path_index >= pb.batch)
        throw std::out_of_range("history_from_batch: path index out of range");
    PathHistory h;
    h.grid = pb.grid;
    h.i_t = i_t;
    h.beta = pb.beta[path_index];
    h.path = Mat(pb.grid.n_fine() + 1, pb.d);
    std::copy(pb.paths.row(path_index), pb.paths.row(path_index) + h.path.a.size(),
              h.path.a.begin());
    if (pb.n_aux > 0) {
        h.aux = Mat(pb.grid.n_fine() + 1, pb.n_aux);
        std::copy(pb.aux.row(path_index), pb.aux.row(path_index) + h.aux.a.size(),
                  h.aux.a.begin());
    }
    return h;
}

std::array<double, 2> confidence_interval(double mean, double std_dev, long n, double alpha) {
    check_alpha(alpha, "confidence_interval");
    if (n < 2) throw config_error("confidence_interval: need at least two samples");
    if (std_dev < 0.0) throw config_error("confidence_interval: negative standard deviation");
    const double z = inverse_normal_cdf(1.0 - alpha / 2.0);
    const double half = z * std_dev / std::sqrt(static_cast<double>(n));
    return {mean - half, mean + half};
}

PriceEstimate mc_price(const PathHistory& h, const MarketModel& model, const Payoff& payoff,
                       long n_mc, double alpha, std::uint64_t seed) {
    if (n_mc < 2) throw config_error("mc_price: N_MC must be >= 2 (variance undefined otherwise)");
    check_alpha(alpha, "mc_price");
    check_history(h, model, "mc_price");
    const int nf = h.grid.n_fine(), d = model.dim();
    const double t = h.grid.fine_time(h.i_t);
    const double df = std::exp(-model.rate() * (h.grid.maturity() - t));

    Mat work = h.path;
    Mat aux_work = h.aux;
    Mat* aux_ptr = model.aux_dim() > 0 ? &aux_work : nullptr;
    std::vector<double> vals(static_cast<std::size_t>(n_mc));
    for (long j = 0; j < n_mc; ++j) {
        Xoshiro256pp rng = path_rng(seed, StreamTag::mc_continuation, static_cast<std::uint64_t>(j));
        model.continue_path(h.grid, h.i_t, h.beta, work, aux_ptr, nullptr, rng);
        vals[static_cast<std::size_t>(j)] = df * payoff(work.a.data(), nf + 1, d);
    }

    const MeanVar mv = mean_and_variance(vals);
    PriceEstimate est;
    est.estimate = mv.mean;
    est.std = std::sqrt(mv.var);
    est.n = n_mc;
    est.alpha = alpha;
    est.seed = seed;
    const auto ci = confidence_interval(est.estimate, est.std, n_mc, alpha);
    est.lo = ci[0];
    est.hi = ci[1];
    return est;
}

VerticalDerivative mc_vertical_derivative(const PathHistory& h, const MarketModel& model,
                                          const Payoff& payoff, long n_mc, double bump_h,
                                          std::uint64_t seed) {
    if (bump_h <= 0.0) throw config_error("mc_vertical_derivative: bump size must be positive");
    if (n_mc < 2) throw config_error("mc_vertical_derivative: N_MC must be >= 2");
    check_history(h, model, "mc_vertical_derivative");
    const int nf = h.grid.n_fine(), d = model.dim();
    const double t = h.grid.fine_time(h.i_t);
    const double df = std::exp(-model.rate() * (h.grid.maturity() - t));

    Mat work = h.path;
    Mat aux_work = h.aux;
    Mat* aux_ptr = model.aux_dim() > 0 ? &aux_work : nullptr;

    VerticalDerivative vd;
    vd.value.resize(d);
    vd.std_err.resize(d);
    vd.n = n_mc;
    std::vector<double> diffs(static_cast<std::size_t>(n_mc));
    for (int i = 0; i < d; ++i) {
        const double x_i = h.path.at(h.i_t, i);
        for (long j = 0; j < n_mc; ++j) {
            // Common random numbers: the same substream drives both branches.
            work.at(h.i_t, i) = x_i + bump_h;
            Xoshiro256pp rng_up =
                path_rng(seed, StreamTag::mc_continuation, static_cast<std::uint64_t>(j));
            model.continue_path(h.grid, h.i_t, h.beta, work, aux_ptr, nullptr, rng_up);
            const double up = df * payoff(work.a.data(), nf + 1, d);

            work.at(h.i_t, i) = x_i - bump_h;
            Xoshiro256pp rng_dn =
                path_rng(seed, StreamTag::mc_continuation, static_cast<std::uint64_t>(j));
            model.continue_path(h.grid, h.i_t, h.beta, work, aux_ptr, nullptr, rng_dn);
            const double dn = df * payoff(work.a.data(), nf + 1, d);

            diffs[static_cast<std::size_t>(j)] = (up - dn) / (2.0 * bump_h);
        }
        work.at(h.i_t, i) = x_i;
        const MeanVar mv = mean_and_variance(diffs);
        vd.value[i] = mv.mean;
        vd.std_err[i] = std::sqrt(mv.var / static_cast<double>(n_mc));
    }
    return vd;
}

PriceEstimate cv_price(const PathHistory& h, const MarketModel& model, const Payoff& payoff,
                       SequenceModel& hedge, const EncodingSpec& encoding, long n_mc, double alpha,
                       std::uint64_t seed) {
    if (n_mc < 2) throw config_error("cv_price: N_MC must be >= 2");
    check_alpha(alpha, "cv_price");
    check_history(h, model, "cv_price");
    const int d = model.dim(), d_w = model.brownian_dim(), n_aux = model.aux_dim();
    if (hedge.output_width() != d)
        throw config_error("cv_price: hedge net output width does not match the model dimension");
    const int nf = h.grid.n_fine(), nc = h.grid.n_coarse(), ratio = h.grid.ratio();
    if (h.i_t % ratio != 0)
        throw config_error("cv_price: conditioning time must lie on the coarse grid");
    const int k_t = h.i_t / ratio;
    const double t = h.grid.coarse_time(k_t);
    const double T = h.grid.maturity();
    const double r = model.rate();
    const double scale = std::exp(r * t);
    const double df_T = std::exp(-r * T);

    Mat work = h.path;
    Mat aux_work = h.aux;
    Mat* aux_ptr = n_aux > 0 ? &aux_work : nullptr;
    Mat dwc(nc, d_w);

    // Continuations are simulated and the hedge net evaluated in chunks, so
    // memory stays bounded for large N_MC while the net still runs batched.
    const long chunk_max = 256;
    PathBatch pb;
    pb.grid = h.grid;
    pb.d = d;
    pb.d_w = d_w;
    pb.n_aux = n_aux;
    pb.seed = seed;
    std::vector<Mat> Z;
    Mat dwc_rows;
    std::vector<double> g_vals;
    std::vector<double> sig(static_cast<std::size_t>(d) * d_w);
    std::vector<double> m_scaled(static_cast<std::size_t>(n_mc));

    for (long start = 0; start < n_mc; start += chunk_max) {
        const int chunk = static_cast<int>(std::min(chunk_max, n_mc - start));
        pb.batch = chunk;
        ensure_shape(pb.paths, chunk, (nf + 1) * d);
        if (n_aux > 0) ensure_shape(pb.aux, chunk, (nf + 1) * n_aux);
        pb.beta.assign(static_cast<std::size_t>(chunk), h.beta);
        ensure_shape(dwc_rows, chunk, nc * d_w);
        g_vals.resize(static_cast<std::size_t>(chunk));

        for (int c = 0; c < chunk; ++c) {
            const std::uint64_t j = static_cast<std::uint64_t>(start + c);
            Xoshiro256pp rng = path_rng(seed, StreamTag::mc_continuation, j);
            dwc.zero();
            model.continue_path(h.grid, h.i_t, h.beta, work, aux_ptr, &dwc, rng);
            std::copy(work.a.begin(), work.a.end(), pb.paths.row(c));
            if (n_aux > 0) std::copy(aux_work.a.begin(), aux_work.a.end(), pb.aux.row(c));
            std::copy(dwc.a.begin(), dwc.a.end(), dwc_rows.row(c));
            g_vals[static_cast<std::size_t>(c)] = payoff(work.a.data(), nf + 1, d);
        }

        const BatchFeatures f = encode_batch(pb, encoding);
        hedge.forward(f, Z);

        for (int c = 0; c < chunk; ++c) {
            double m = df_T * g_vals[static_cast<std::size_t>(c)];
            for (int step = k_t; step < nc; ++step) {
                const int fi = step * ratio;
                std::span<const double> x(pb.paths.row(c) + static_cast<std::size_t>(fi) * d,
                                          static_cast<std::size_t>(d));
                std::span<const double> aux =
                    n_aux > 0 ? std::span<const double>(
                                    pb.aux.row(c) + static_cast<std::size_t>(fi) * n_aux,
                                    static_cast<std::size_t>(n_aux))
                              : std::span<const double>();
                model.diffusion_at(x, aux, h.beta, sig);
                const double* dw = dwc_rows.row(c) + static_cast<std::size_t>(step) * d_w;
                double stoch = 0.0;
                for (int i = 0; i < d; ++i) {
                    double s = 0.0;
                    for (int l = 0; l < d_w; ++l) s += sig[static_cast<std::size_t>(i) * d_w + l] * dw[l];
                    stoch += Z[step].at(c, i) * s;
                }
                m -= std::exp(-r * h.grid.coarse_time(step)) * stoch;
            }
            m_scaled[static_cast<std::size_t>(start + c)] = scale * m;
        }
    }

    const MeanVar mv = mean_and_variance(m_scaled);
    PriceEstimate est;
    est.estimate = mv.mean;
    est.std = std::sqrt(mv.var);
    est.n = n_mc;
    est.alpha = alpha;
    est.seed = seed;
    const auto ci = confidence_interval(est.estimate, est.std, n_mc, alpha);
    est.lo = ci[0];
    est.hi = ci[1];
    return est;
}

} // namespace ppde
