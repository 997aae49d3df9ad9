#include "ppde/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "ppde/errors.hpp"

namespace ppde {

TrainBatch make_batch(const MarketModel& model, const TimeGrid& grid, int batch_size,
                      const EncodingSpec& encoding, const Payoff& payoff, std::uint64_t seed) {
    if (batch_size < 1) throw config_error("training: batch size must be >= 1");
    TrainBatch tb;
    tb.sim = model.simulate(grid, batch_size, seed);
    tb.features = encode_batch(tb.sim, encoding);
    tb.dw_coarse = coarse_brownian_increments(tb.sim);
    tb.rate = model.rate();

    const int B = tb.sim.batch, d = tb.sim.d, d_w = tb.sim.d_w, n_aux = tb.sim.n_aux;
    const int n_coarse = grid.n_coarse(), ratio = grid.ratio(), n_fine = grid.n_fine();
    tb.sigma = Mat(B, n_coarse * d * d_w);
    for (int b = 0; b < B; ++b) {
        for (int m = 0; m < n_coarse; ++m) {
            const int i = m * ratio;
            std::span<const double> x(tb.sim.paths.row(b) + static_cast<std::size_t>(i) * d,
                                      static_cast<std::size_t>(d));
            std::span<const double> aux =
                n_aux > 0 ? std::span<const double>(
                                tb.sim.aux.row(b) + static_cast<std::size_t>(i) * n_aux,
                                static_cast<std::size_t>(n_aux))
                          : std::span<const double>();
            model.diffusion_at(x, aux, tb.sim.beta[b],
                               {tb.sigma.row(b) + static_cast<std::size_t>(m) * d * d_w,
                                static_cast<std::size_t>(d) * d_w});
        }
    }

    const double T = grid.maturity();
    const double df = std::exp(-tb.rate * T);
    tb.payoff.resize(B);
    tb.payoff_discounted.resize(B);
    for (int b = 0; b < B; ++b) {
        tb.payoff[b] = payoff(tb.sim.paths.row(b), n_fine + 1, d);
        tb.payoff_discounted[b] = df * tb.payoff[b];
    }
    return tb;
}

// ---------------------------------------------------------------------------
// Sequence models

FfnSequenceModel::FfnSequenceModel(NetworkParams& p) : p_(p), net_(p.arch.ffn) {
    if (p.arch.kind != ArchDescriptor::Kind::ffn)
        throw std::invalid_argument("sequence model: parameters are not a feed-forward net");
}

void FfnSequenceModel::forward(const BatchFeatures& f, std::vector<Mat>& outs) {
    const int steps = f.n_coarse + 1;
    xs_.resize(steps);
    caches_.resize(steps);
    outs.resize(steps);
    for (int k = 0; k < steps; ++k) {
        ffn_stopped_input(f, k, xs_[k]);
        net_.forward(xs_[k], p_.values, caches_[k], outs[k]);
    }
}

void FfnSequenceModel::backward(const std::vector<Mat>& dOuts) {
    if (dOuts.size() != xs_.size())
        throw std::invalid_argument("sequence model: backward before forward");
    for (std::size_t k = 0; k < xs_.size(); ++k)
        net_.backward(xs_[k], dOuts[k], p_.values, caches_[k], p_.grad);
}

LstmSequenceModel::LstmSequenceModel(NetworkParams& p) : p_(p), net_(p.arch.lstm) {
    if (p.arch.kind != ArchDescriptor::Kind::lstm)
        throw std::invalid_argument("sequence model: parameters are not a recurrent net");
}

void LstmSequenceModel::forward(const BatchFeatures& f, std::vector<Mat>& outs) {
    lstm_inputs(f, xs_);
    net_.forward(xs_, p_.values, cache_, outs);
}

void LstmSequenceModel::backward(const std::vector<Mat>& dOuts) {
    if (static_cast<int>(dOuts.size()) != cache_.steps)
        throw std::invalid_argument("sequence model: backward before forward");
    net_.backward(xs_, dOuts, p_.values, cache_, p_.grad);
}

std::unique_ptr<SequenceModel> make_sequence_model(NetworkParams& p) {
    if (p.arch.kind == ArchDescriptor::Kind::ffn) return std::make_unique<FfnSequenceModel>(p);
    return std::make_unique<LstmSequenceModel>(p);
}

// ---------------------------------------------------------------------------
// Losses

double loss_orthogonal(const TrainBatch& tb, SequenceModel& theta, bool with_grad) {
    if (theta.output_width() != 1)
        throw std::invalid_argument("orthogonal loss: value net must have output width 1");
    const int B = tb.sim.batch, K = tb.features.n_coarse;
    const double T = tb.features.coarse_times[K];

    std::vector<Mat> outs;
    theta.forward(tb.features, outs);
    std::vector<Mat> douts;
    if (with_grad) {
        douts.resize(K + 1);
        for (int k = 0; k <= K; ++k) ensure_shape(douts[k], B, 1);
    }

    double total = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double df = std::exp(-tb.rate * (T - tb.features.coarse_times[k]));
        for (int b = 0; b < B; ++b) {
            const double r = df * tb.payoff[b] - outs[k].at(b, 0);
            total += r * r;
            if (with_grad) douts[k].at(b, 0) = -2.0 * r / B;
        }
    }
    if (with_grad) theta.backward(douts);
    return total / B;
}

double loss_martingale(const TrainBatch& tb, SequenceModel& theta, SequenceModel& phi,
                       bool with_grad) {
    const int B = tb.sim.batch, K = tb.features.n_coarse;
    const int d = tb.sim.d, d_w = tb.sim.d_w;
    if (theta.output_width() != 1)
        throw std::invalid_argument("martingale loss: value net must have output width 1");
    if (phi.output_width() != d)
        throw std::invalid_argument("martingale loss: hedge net output width must equal d");

    std::vector<Mat> R, Z;
    theta.forward(tb.features, R);
    phi.forward(tb.features, Z);

    std::vector<Mat> dR, dZ;
    if (with_grad) {
        dR.resize(K + 1);
        dZ.resize(K + 1);
        for (int k = 0; k <= K; ++k) {
            ensure_shape(dR[k], B, 1);
            ensure_shape(dZ[k], B, d);
        }
    }

    // Discount factors at the coarse times.
    std::vector<double> disc(K + 1);
    for (int k = 0; k <= K; ++k) disc[k] = std::exp(-tb.rate * tb.features.coarse_times[k]);

    double total = 0.0;
    std::vector<double> sdot(d);  // sigma(t_m) dW_m per asset
    for (int b = 0; b < B; ++b) {
        const double gterm = tb.payoff[b] - R[K].at(b, 0);
        total += gterm * gterm;
        if (with_grad) dR[K].at(b, 0) += -2.0 * gterm / B;

        for (int m = 0; m < K; ++m) {
            const double* sig = tb.sigma.row(b) + static_cast<std::size_t>(m) * d * d_w;
            const double* dw = tb.dw_coarse.row(b) + static_cast<std::size_t>(m) * d_w;
            double stoch = 0.0;
            for (int i = 0; i < d; ++i) {
                double s = 0.0;
                for (int l = 0; l < d_w; ++l) s += sig[i * d_w + l] * dw[l];
                sdot[i] = s;
                stoch += Z[m].at(b, i) * s;
            }
            const double e = disc[m + 1] * R[m + 1].at(b, 0) - disc[m] * R[m].at(b, 0) -
                             disc[m] * stoch;
            total += e * e;
            if (with_grad) {
                const double w = 2.0 * e / B;
                dR[m + 1].at(b, 0) += w * disc[m + 1];
                dR[m].at(b, 0) += -w * disc[m];
                for (int i = 0; i < d; ++i) dZ[m].at(b, i) += -w * disc[m] * sdot[i];
            }
        }
    }
    if (with_grad) {
        theta.backward(dR);
        phi.backward(dZ);
    }
    return total / B;
}

// ---------------------------------------------------------------------------
// Training loop

TrainMethod parse_method(const std::string& name) {
    if (name == "orthogonal") return TrainMethod::orthogonal;
    if (name == "martingale") return TrainMethod::martingale;
    throw config_error("training: unknown method '" + name + "' (expected orthogonal or martingale)");
}

std::string method_name(TrainMethod m) {
    return m == TrainMethod::orthogonal ? "orthogonal" : "martingale";
}

namespace {

ArchDescriptor make_arch(const NetworkConfig& net, int input, int output) {
    ArchDescriptor a;
    if (net.type == NetworkConfig::Type::ffn) {
        a.kind = ArchDescriptor::Kind::ffn;
        a.ffn.input = input;
        a.ffn.hidden = net.ffn_hidden;
        a.ffn.output = output;
    } else {
        a.kind = ArchDescriptor::Kind::lstm;
        a.lstm.input = input;
        a.lstm.hidden = net.lstm_hidden;
        a.lstm.head_hidden = net.lstm_head;
        a.lstm.output = output;
    }
    return a;
}

double grad_norm(const NetworkParams& p) {
    double s = 0.0;
    for (double g : p.grad) s += g * g;
    return std::sqrt(s);
}

} // namespace

TrainResult train(const MarketModel& model, const TimeGrid& grid, const Payoff& payoff,
                  const EncodingSpec& encoding, const NetworkConfig& net, const TrainingConfig& tc,
                  std::uint64_t seed) {
    if (tc.iterations < 0) throw config_error("training: iterations must be >= 0");
    const int d = model.dim();
    const int input = net.type == NetworkConfig::Type::lstm
                          ? lstm_input_width(encoding, d)
                          : ffn_input_width(encoding, d, grid.n_coarse());
    const bool martingale = tc.method == TrainMethod::martingale;

    TrainResult res;
    res.input_spec = input_spec_string(encoding, d, grid.n_coarse());
    res.theta = make_network_params(make_arch(net, input, 1), mix_seed(seed, 101));
    res.has_phi = martingale;
    if (martingale) res.phi = make_network_params(make_arch(net, input, d), mix_seed(seed, 102));

    auto theta = make_sequence_model(res.theta);
    std::unique_ptr<SequenceModel> phi;
    if (martingale) phi = make_sequence_model(res.phi);

    const int test_size = tc.test_batch_size > 0 ? tc.test_batch_size : tc.batch_size;
    const TrainBatch test_batch =
        make_batch(model, grid, test_size, encoding, payoff,
                   mix_seed(seed, static_cast<std::uint64_t>(StreamTag::test_batch)));

    auto eval_loss = [&](const TrainBatch& tb, bool with_grad) {
        return martingale ? loss_martingale(tb, *theta, *phi, with_grad)
                          : loss_orthogonal(tb, *theta, with_grad);
    };

    OptimizerState theta_state, phi_state;
    double test_loss = tc.iterations > 0 ? eval_loss(test_batch, false) : 0.0;
    res.history.reserve(tc.iterations);
    const auto t0 = std::chrono::steady_clock::now();

    for (int it = 1; it <= tc.iterations; ++it) {
        // Batch seeds live in their own substream (base 100) so no iteration
        // counter can collide with the StreamTag-derived test batch.
        const TrainBatch tb = make_batch(model, grid, tc.batch_size, encoding, payoff,
                                         mix_seed(seed, 100, static_cast<std::uint64_t>(it)));
        res.theta.zero_grad();
        if (martingale) res.phi.zero_grad();
        const double train_loss = eval_loss(tb, true);
        if (!std::isfinite(train_loss)) {
            double beta_lo = tb.sim.beta[0], beta_hi = tb.sim.beta[0];
            for (double b : tb.sim.beta) {
                beta_lo = std::min(beta_lo, b);
                beta_hi = std::max(beta_hi, b);
            }
            char buf[256];
            std::snprintf(buf, sizeof buf,
                          "training: non-finite loss at iteration %d (beta range [%g, %g], "
                          "grad norms theta %g phi %g)",
                          it, beta_lo, beta_hi, grad_norm(res.theta),
                          martingale ? grad_norm(res.phi) : 0.0);
            throw numeric_error(buf);
        }
        optimizer_step(res.theta.values, res.theta.grad, theta_state, tc.optimizer);
        if (martingale) optimizer_step(res.phi.values, res.phi.grad, phi_state, tc.optimizer);

        if (tc.eval_every > 0 && (it % tc.eval_every == 0 || it == tc.iterations))
            test_loss = eval_loss(test_batch, false);

        const double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.history.push_back({it, train_loss, test_loss, wall});
    }
    return res;
}

} // namespace ppde
