// Acceptance gate for the solver: ten end-to-end criteria checked against
// independent oracles (nested-quadrature iterated integrals, closed-form
// Black-Scholes prices, finite differences, high-precision Monte Carlo) and
// the trained-pipeline quality targets. Prints exactly one pass/fail line per
// criterion and exits 0 only when every requested criterion passes.
//
// Usage: acceptance_tests [id...]   (no arguments runs all ten)

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppde/encoding.hpp"
#include "ppde/evaluation.hpp"
#include "ppde/market_models.hpp"
#include "ppde/matrix.hpp"
#include "ppde/nets.hpp"
#include "ppde/numerics.hpp"
#include "ppde/payoffs.hpp"
#include "ppde/pricing.hpp"
#include "ppde/rng.hpp"
#include "ppde/signatures.hpp"
#include "ppde/time_grid.hpp"
#include "ppde/training.hpp"

namespace {

using namespace ppde;
namespace fs = std::filesystem;

std::string strf(const char* fmt, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    return buf;
}

fs::path work_dir() {
    const fs::path p(PPDE_ACCEPT_WORKDIR);
    fs::create_directories(p);
    return p;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

// ---------------------------------------------------------------------------
// Shared fixtures and helpers.

Mat identity(int d) {
    Mat m(d, d, 0.0);
    for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
    return m;
}

BlackScholesParams bs_params(int d, double rate, double sigma) {
    BlackScholesParams p;
    p.d = d;
    p.rate = rate;
    p.sigma.assign(static_cast<std::size_t>(d), sigma);
    p.covariance = identity(d);
    p.x0.kind = InitialLaw::Kind::fixed;
    p.x0.values.assign(static_cast<std::size_t>(d), 1.0);
    return p;
}

// g = sum_i S^i_T; its exact hedge under r=0 is the constant 1 per asset.
class TerminalSumPayoff final : public Payoff {
public:
    double operator()(const double* path, int n_times, int d) const override {
        double s = 0.0;
        for (int i = 0; i < d; ++i) s += path[static_cast<std::size_t>(n_times - 1) * d + i];
        return s;
    }
};

class EuropeanCallPayoff final : public Payoff {
public:
    explicit EuropeanCallPayoff(double strike) : strike_(strike) {}
    double operator()(const double* path, int n_times, int d) const override {
        return std::max(path[static_cast<std::size_t>(n_times - 1) * d] - strike_, 0.0);
    }

private:
    double strike_;
};

// Emits the coarse value of asset 0 at every step; with the coarse-path
// encoding this is the exact price functional for g = S_T at r = 0.
class CoarseValueModel final : public SequenceModel {
public:
    int output_width() const override { return 1; }
    void forward(const BatchFeatures& f, std::vector<Mat>& outs) override {
        outs.resize(static_cast<std::size_t>(f.n_coarse) + 1);
        for (int k = 0; k <= f.n_coarse; ++k) {
            Mat& m = outs[static_cast<std::size_t>(k)];
            ensure_shape(m, f.raw.rows, 1);
            for (int b = 0; b < f.raw.rows; ++b) m.at(b, 0) = f.raw.at(b, k * f.d);
        }
    }
    void backward(const std::vector<Mat>&) override {}
};

class ConstModel final : public SequenceModel {
public:
    ConstModel(int width, double value) : width_(width), value_(value) {}
    int output_width() const override { return width_; }
    void forward(const BatchFeatures& f, std::vector<Mat>& outs) override {
        outs.resize(static_cast<std::size_t>(f.n_coarse) + 1);
        for (auto& m : outs) {
            ensure_shape(m, f.raw.rows, width_);
            std::fill(m.a.begin(), m.a.end(), value_);
        }
    }
    void backward(const std::vector<Mat>&) override {}

private:
    int width_;
    double value_;
};

double bs_call_price(double s0, double strike, double rate, double sigma, double ttm) {
    const double sd = sigma * std::sqrt(ttm);
    const double d1 = (std::log(s0 / strike) + (rate + 0.5 * sigma * sigma) * ttm) / sd;
    return s0 * normal_cdf(d1) - strike * std::exp(-rate * ttm) * normal_cdf(d1 - sd);
}

double bs_call_delta(double s0, double strike, double rate, double sigma, double ttm) {
    const double sd = sigma * std::sqrt(ttm);
    return normal_cdf((std::log(s0 / strike) + (rate + 0.5 * sigma * sigma) * ttm) / sd);
}

// ---------------------------------------------------------------------------
// Criterion 1: signature engine vs direct nested quadrature.

// Independent evaluation of the iterated integrals of a piecewise-linear
// stream: I_w is built level by level, integrating I_prefix dX^last over each
// segment with 4-point Gauss-Legendre (exact for these polynomial integrands
// up to depth 7). Shares no code with the production Chen-based kernel.
class IteratedIntegralOracle {
public:
    IteratedIntegralOracle(const Mat& pts, int depth) : pts_(pts) {
        std::vector<std::vector<int>> level = {{}};
        for (int k = 1; k <= depth; ++k) {
            std::vector<std::vector<int>> next;
            for (const auto& p : level) {
                for (int i = 0; i < pts_.cols; ++i) {
                    std::vector<int> w = p;
                    w.push_back(i);
                    std::vector<double> v(static_cast<std::size_t>(pts_.rows), 0.0);
                    for (int j = 0; j + 1 < pts_.rows; ++j)
                        v[static_cast<std::size_t>(j) + 1] =
                            v[static_cast<std::size_t>(j)] + segment_increment(p, i, j);
                    vals_[w] = std::move(v);
                    next.push_back(std::move(w));
                }
            }
            level = std::move(next);
        }
    }

    double value(const std::vector<int>& word) const { return vals_.at(word).back(); }

private:
    double eval(const std::vector<int>& w, int j, double u) const {
        if (w.empty()) return 1.0;
        const std::vector<int> prefix(w.begin(), w.end() - 1);
        const double dx = pts_.at(j + 1, w.back()) - pts_.at(j, w.back());
        double q = 0.0;
        for (int g = 0; g < 4; ++g) q += kW[g] * eval(prefix, j, u * kX[g]);
        return vals_.at(w)[static_cast<std::size_t>(j)] + dx * u * q;
    }

    double segment_increment(const std::vector<int>& p, int i, int j) const {
        const double dx = pts_.at(j + 1, i) - pts_.at(j, i);
        double q = 0.0;
        for (int g = 0; g < 4; ++g) q += kW[g] * eval(p, j, kX[g]);
        return dx * q;
    }

    static constexpr double kX[4] = {0.06943184420297371, 0.33000947820757187,
                                     0.66999052179242813, 0.93056815579702629};
    static constexpr double kW[4] = {0.17392742256872693, 0.32607257743127307,
                                     0.32607257743127307, 0.17392742256872693};

    Mat pts_;
    std::map<std::vector<int>, std::vector<double>> vals_;
};

int flat_index(int d, const std::vector<int>& word) {
    int idx = 0;
    for (int c : word) idx = idx * d + c;
    return sig_level_offset(d, static_cast<int>(word.size())) + idx;
}

Outcome criterion_signature_oracle() {
    constexpr double kSigTol = 1e-8;
    constexpr double kChenTol = 1e-10;
    constexpr int kDepth = 3;

    std::mt19937_64 rng(4101);
    std::normal_distribution<double> inc(0.0, 0.4);
    std::uniform_int_distribution<int> len(2, 64);

    // Every word up to depth 3 over a 2-d alphabet.
    std::vector<std::vector<int>> words;
    for (int k = 1; k <= kDepth; ++k)
        for (int m = 0; m < (1 << k); ++m) {
            std::vector<int> w(static_cast<std::size_t>(k));
            for (int t = 0; t < k; ++t) w[static_cast<std::size_t>(t)] = (m >> (k - 1 - t)) & 1;
            words.push_back(std::move(w));
        }

    double max_sig_err = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const int m = len(rng);
        Mat pts(m, 2);
        double x = 0.3, y = -0.2;
        for (int i = 0; i < m; ++i) {
            pts.at(i, 0) = x;
            pts.at(i, 1) = y;
            x += inc(rng);
            y += inc(rng);
        }
        const TruncatedSignature sig = signature_of_segment(pts, kDepth);
        const IteratedIntegralOracle oracle(pts, kDepth);
        for (const auto& w : words) {
            const double want = oracle.value(w);
            const double got = sig.coeffs[static_cast<std::size_t>(flat_index(2, w))];
            max_sig_err = std::max(max_sig_err, std::abs(got - want) / std::max(1.0, std::abs(want)));
        }
    }

    // Chain consistency: concatenating the per-window signatures via Chen must
    // reproduce the whole-path signature of the transformed stream.
    double max_chen_err = 0.0;
    const TimeGrid grid(1.0, 60, 6);
    for (int rep = 0; rep < 100; ++rep) {
        Mat path(61, 2);
        double x = 1.0, y = 0.5;
        for (int i = 0; i < 61; ++i) {
            path.at(i, 0) = x;
            path.at(i, 1) = y;
            x += inc(rng);
            y += inc(rng);
        }
        for (PathTransform t : {PathTransform::none, PathTransform::lead_lag}) {
            const SignatureStream stream = stream_of_signatures(path, grid, kDepth, t);
            TruncatedSignature acc = trivial_signature(stream.d_sig, kDepth);
            for (int k = 0; k < stream.entries.rows; ++k) {
                TruncatedSignature entry;
                entry.d = stream.d_sig;
                entry.n = kDepth;
                entry.coeffs.assign(stream.entries.row(k), stream.entries.row(k) + stream.entries.cols);
                acc = chen_concatenate(acc, entry);
            }
            const Mat full = (t == PathTransform::lead_lag) ? lead_lag(path) : path;
            const TruncatedSignature whole = signature_of_segment(full, kDepth);
            for (std::size_t i = 0; i < whole.coeffs.size(); ++i)
                max_chen_err = std::max(max_chen_err, std::abs(acc.coeffs[i] - whole.coeffs[i]) /
                                                          std::max(1.0, std::abs(whole.coeffs[i])));
        }
    }

    Outcome o;
    o.pass = max_sig_err <= kSigTol && max_chen_err <= kChenTol;
    o.detail = strf("100 streams vs nested quadrature: max rel err %.2e (tol %.0e); chen chaining: max rel err %.2e (tol %.0e)",
                    max_sig_err, kSigTol, max_chen_err, kChenTol);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 2: finite-difference gradient suite on the training losses.

// One full-parameter central-difference sweep at the pinned step. Rectifier
// networks have isolated parameter draws where the loss has an activation
// kink inside the difference stencil (zero bias initialization even produces
// exact-zero preactivations), and there the quotient stops approximating the
// one-sided analytic gradient. Such points are recognized by the forward and
// backward one-sided quotients splitting by the order of the central
// mismatch itself; a genuine gradient bug leaves them in agreement. Kink hits
// are reported separately so the caller redraws the fixture instead of ever
// loosening the tolerance.
struct FdSweep {
    double max_rel_err = 0.0;
    bool kink_hit = false;
};

template <class LossFn>
void fd_sweep_params(NetworkParams& np, const std::vector<double>& grad, LossFn loss, double tol,
                     FdSweep& sweep) {
    constexpr double kH = 1e-6;
    for (std::size_t i = 0; i < np.values.size(); ++i) {
        const double keep = np.values[i];
        np.values[i] = keep + kH;
        const double up = loss();
        np.values[i] = keep - kH;
        const double dn = loss();
        np.values[i] = keep;
        const double fd = (up - dn) / (2.0 * kH);
        const double rel = std::abs(grad[i] - fd) / (1.0 + std::abs(fd));
        if (rel > tol) {
            const double base = loss();
            const double fwd = (up - base) / kH;
            const double bwd = (base - dn) / kH;
            if (std::abs(fwd - bwd) >= 0.5 * std::abs(grad[i] - fd)) {
                sweep.kink_hit = true;
                continue;
            }
        }
        sweep.max_rel_err = std::max(sweep.max_rel_err, rel);
    }
}

Outcome criterion_gradients() {
    constexpr double kFfnTol = 1e-5;
    constexpr double kLstmTol = 1e-4;
    constexpr int kMaxRedraws = 5;

    double max_ffn = 0.0, max_lstm = 0.0;
    int redraws = 0;
    for (int seed = 1; seed <= 20; ++seed) {
        // FFN through the projection loss.
        for (int attempt = 0;; ++attempt) {
            if (attempt >= kMaxRedraws) return {false, "ffn fd fixture kept landing on kinks"};
            const std::uint64_t tag = mix_seed(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(attempt));
            const BlackScholesParams p = bs_params(1, 0.02, 0.25);
            const BlackScholesModel model(p);
            const TimeGrid grid(0.5, 6, 3);
            const LookbackPayoff payoff;
            EncodingSpec enc;
            enc.kind = EncodingKind::coarse_path;
            const TrainBatch tb = make_batch(model, grid, 3, enc, payoff, mix_seed(2100, tag));

            ArchDescriptor arch;
            arch.kind = ArchDescriptor::Kind::ffn;
            arch.ffn.input = ffn_input_width(enc, 1, 3);
            arch.ffn.hidden = {5, 4};
            arch.ffn.output = 1;
            NetworkParams np = make_network_params(arch, mix_seed(2200, tag));
            FfnSequenceModel net(np);

            np.zero_grad();
            loss_orthogonal(tb, net, true);
            const std::vector<double> grad = np.grad;
            FdSweep sweep;
            fd_sweep_params(np, grad, [&] { return loss_orthogonal(tb, net, false); }, kFfnTol, sweep);
            if (sweep.kink_hit) {
                ++redraws;
                continue;
            }
            max_ffn = std::max(max_ffn, sweep.max_rel_err);
            break;
        }

        // LSTM pair end-to-end through the martingale loss; checks every
        // parameter of both the price and the hedge network.
        for (int attempt = 0;; ++attempt) {
            if (attempt >= kMaxRedraws) return {false, "lstm fd fixture kept landing on kinks"};
            const std::uint64_t tag = mix_seed(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(attempt));
            BlackScholesParams p = bs_params(2, 0.03, 0.3);
            p.sigma = {0.3, 0.2};
            const BlackScholesModel model(p);
            const TimeGrid grid(0.5, 8, 4);
            const LookbackPayoff payoff;
            EncodingSpec enc;
            enc.kind = EncodingKind::coarse_path;
            const TrainBatch tb = make_batch(model, grid, 3, enc, payoff, mix_seed(2300, tag));

            ArchDescriptor ta;
            ta.kind = ArchDescriptor::Kind::lstm;
            ta.lstm.input = lstm_input_width(enc, 2);
            ta.lstm.hidden = 4;
            ta.lstm.head_hidden = 3;
            ta.lstm.output = 1;
            ArchDescriptor pa = ta;
            pa.lstm.output = 2;
            NetworkParams tp = make_network_params(ta, mix_seed(2400, tag));
            NetworkParams pp = make_network_params(pa, mix_seed(2500, tag));
            LstmSequenceModel theta(tp);
            LstmSequenceModel phi(pp);

            tp.zero_grad();
            pp.zero_grad();
            loss_martingale(tb, theta, phi, true);
            const std::vector<double> tg = tp.grad;
            const std::vector<double> pg = pp.grad;
            FdSweep sweep;
            const auto loss = [&] { return loss_martingale(tb, theta, phi, false); };
            fd_sweep_params(tp, tg, loss, kLstmTol, sweep);
            fd_sweep_params(pp, pg, loss, kLstmTol, sweep);
            if (sweep.kink_hit) {
                ++redraws;
                continue;
            }
            max_lstm = std::max(max_lstm, sweep.max_rel_err);
            break;
        }
    }

    Outcome o;
    o.pass = max_ffn <= kFfnTol && max_lstm <= kLstmTol;
    o.detail = strf("20 seeds, step 1e-6: ffn max rel err %.2e (tol %.0e); lstm max rel err %.2e (tol %.0e); %d kink redraws",
                    max_ffn, kFfnTol, max_lstm, kLstmTol, redraws);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 3: exact-representation fixture.

Outcome criterion_exact_representation() {
    // d=1, g=S_T, r=0: the price functional is F(t) = S_t and the exact hedge
    // is 1, both representable by hand-set stubs. The martingale loss then
    // measures only the quadrature defect of the hedge integral on the coarse
    // grid, which shrinks as both grids refine; with N_c equal to the
    // fine/coarse ratio it decays like 1/N_c across ratios 10/50/100.
    constexpr double kMinCorr = 0.999;
    const BlackScholesParams p = bs_params(1, 0.0, 0.3);
    const BlackScholesModel model(p);
    const TerminalSumPayoff payoff;
    EncodingSpec enc;
    enc.kind = EncodingKind::coarse_path;

    CoarseValueModel theta;
    ConstModel phi(1, 1.0);

    const int ratios[3] = {10, 50, 100};
    double losses[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        const int r = ratios[i];
        const TimeGrid grid(0.5, r * r, r);
        const TrainBatch tb = make_batch(model, grid, 2048, enc, payoff, 3301);
        losses[i] = loss_martingale(tb, theta, phi, false);
    }

    const TimeGrid fine(0.5, 10000, 100);
    const double rho = cv_correlation(phi, model, payoff, fine, 4096, enc, 3302);

    Outcome o;
    o.pass = losses[0] > losses[1] && losses[1] > losses[2] && rho >= kMinCorr;
    o.detail = strf("martingale loss at ratio 10/50/100: %.3e > %.3e > %.3e; rho at ratio 100: %.6f (min %.3f)",
                    losses[0], losses[1], losses[2], rho, kMinCorr);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 4: Monte Carlo pricer vs closed-form calls.

Outcome criterion_pricer_calibration() {
    constexpr long kNMc = 100000;
    constexpr double kBump = 1e-3;
    // The fine step is T/500 = 1e-3, keeping the Euler weak bias an order of
    // magnitude below one standard error at 10^5 paths.
    const TimeGrid grid(0.5, 500, 10);

    std::mt19937_64 rng(4404);
    std::uniform_real_distribution<double> strike_law(0.85, 1.15);
    std::uniform_real_distribution<double> sigma_law(0.15, 0.40);
    std::uniform_real_distribution<double> rate_law(0.0, 0.06);

    double worst_price_z = 0.0, worst_delta_z = 0.0;
    bool all_pass = true;
    for (int i = 0; i < 10; ++i) {
        const double strike = strike_law(rng);
        const double sigma = sigma_law(rng);
        const double rate = rate_law(rng);
        const BlackScholesParams p = bs_params(1, rate, sigma);
        const BlackScholesModel model(p);
        const EuropeanCallPayoff payoff(strike);

        PathHistory h;
        h.grid = grid;
        h.i_t = 0;
        h.beta = sigma;
        h.path = Mat(grid.n_fine() + 1, 1);
        h.path.at(0, 0) = 1.0;

        const PriceEstimate est =
            mc_price(h, model, payoff, kNMc, 0.05, mix_seed(4410, static_cast<std::uint64_t>(i)));
        const double want = bs_call_price(1.0, strike, rate, sigma, 0.5);
        const double se = est.std / std::sqrt(static_cast<double>(est.n));
        const double pz = std::abs(est.estimate - want) / se;
        worst_price_z = std::max(worst_price_z, pz);

        const VerticalDerivative vd = mc_vertical_derivative(
            h, model, payoff, kNMc, kBump, mix_seed(4420, static_cast<std::uint64_t>(i)));
        const double want_delta = bs_call_delta(1.0, strike, rate, sigma, 0.5);
        const double dz = std::abs(vd.value[0] - want_delta) / vd.std_err[0];
        worst_delta_z = std::max(worst_delta_z, dz);

        all_pass = all_pass && pz <= 3.0 && dz <= 3.0;
    }

    Outcome o;
    o.pass = all_pass;
    o.detail = strf("10 draws at N=1e5: worst |price err| %.2f se, worst |delta err| %.2f se (limit 3)",
                    worst_price_z, worst_delta_z);
    return o;
}

// ---------------------------------------------------------------------------
// Criteria 5 and 7 share one trained lookback model (d=2, sigma=0.3).

struct LookbackFixture {
    BlackScholesParams params;
    std::unique_ptr<BlackScholesModel> model;
    TimeGrid grid;
    LookbackPayoff payoff;
    EncodingSpec enc;
    TrainResult trained;
};

EncodingSpec lead_lag_sig_encoding() {
    EncodingSpec enc;
    enc.kind = EncodingKind::sig_stream;
    enc.depth = 3;
    enc.transform = PathTransform::lead_lag;
    return enc;
}

NetworkConfig desk_lstm() {
    NetworkConfig net;
    net.type = NetworkConfig::Type::lstm;
    net.lstm_hidden = 48;
    net.lstm_head = 48;
    return net;
}

// The sequence-model wrappers mutate their parameter block in place, so the
// fixture is handed out non-const.
LookbackFixture& lookback_fixture() {
    static LookbackFixture fixture = [] {
        LookbackFixture f;
        f.params = bs_params(2, 0.05, 0.3);
        f.params.x0.kind = InitialLaw::Kind::lognormal;
        f.params.x0.values.clear();
        f.params.x0.mu = 0.08;
        f.params.x0.sigma_law = 0.3;
        f.params.x0.tau = 0.1;
        f.model = std::make_unique<BlackScholesModel>(f.params);
        f.grid = TimeGrid(0.5, 50, 10);
        f.enc = lead_lag_sig_encoding();

        TrainingConfig tc;
        tc.method = TrainMethod::martingale;
        tc.iterations = 2500;
        tc.batch_size = 200;
        tc.eval_every = 250;
        f.trained = train(*f.model, f.grid, f.payoff, f.enc, desk_lstm(), tc, 5005);
        return f;
    }();
    return fixture;
}

Outcome criterion_lookback_table() {
    constexpr double kMaxIntegral = 1e-2;
    constexpr double kMinCorr = 0.99;
    LookbackFixture& f = lookback_fixture();

    const PathBatch test = f.model->simulate(f.grid, 256, mix_seed(5000, 1));
    EvalOptions opt;
    opt.oracle_n_mc = 100000;
    opt.cache_dir = (work_dir() / "oracle_c5").string();
    opt.config_hash = 0xC5;

    LstmSequenceModel theta(f.trained.theta);
    const double e_int = integral_error_price(theta, *f.model, f.payoff, test, f.enc, opt);

    LstmSequenceModel phi(f.trained.phi);
    const double rho = cv_correlation(phi, *f.model, f.payoff, f.grid, 4096, f.enc, mix_seed(5000, 2));

    Outcome o;
    o.pass = e_int <= kMaxIntegral && rho >= kMinCorr;
    o.detail = strf("lookback d=2 sigma=0.3 martingale lstm+lead-lag: E_integral %.3e (max %.0e), rho %.4f (min %.2f)",
                    e_int, kMaxIntegral, rho, kMinCorr);
    return o;
}

Outcome criterion_interval_coverage() {
    constexpr int kRuns = 200;
    constexpr long kNMc = 2000;
    constexpr int kMinCovered = 180;
    LookbackFixture& f = lookback_fixture();

    PathHistory h;
    h.grid = f.grid;
    h.i_t = 0;
    h.beta = 0.3;
    h.path = Mat(f.grid.n_fine() + 1, 2);
    h.path.at(0, 0) = 1.0;
    h.path.at(0, 1) = 1.0;

    // High-precision plain-MC reference; its own standard error is two orders
    // of magnitude below the width of the intervals under test.
    const PriceEstimate ref = mc_price(h, *f.model, f.payoff, 4000000, 0.05, 7001);

    LstmSequenceModel phi(f.trained.phi);
    int covered = 0;
    for (int i = 0; i < kRuns; ++i) {
        const PriceEstimate e = cv_price(h, *f.model, f.payoff, phi, f.enc, kNMc, 0.05,
                                         mix_seed(7100, static_cast<std::uint64_t>(i)));
        if (e.lo <= ref.estimate && ref.estimate <= e.hi) ++covered;
    }

    Outcome o;
    o.pass = covered >= kMinCovered;
    o.detail = strf("95%% interval covered reference %.6f in %d/%d runs (min %d)", ref.estimate,
                    covered, kRuns, kMinCovered);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 6: trained-method ordering at sigma=1.

Outcome criterion_method_ordering() {
    constexpr int kSeeds = 5;
    constexpr int kMinWins = 4;
    const TimeGrid grid(0.5, 50, 10);
    const LookbackPayoff payoff;

    BlackScholesParams p = bs_params(2, 0.05, 1.0);
    p.x0.kind = InitialLaw::Kind::lognormal;
    p.x0.values.clear();
    p.x0.mu = 0.08;
    p.x0.sigma_law = 1.0;
    p.x0.tau = 0.1;
    const BlackScholesModel model(p);

    TrainingConfig tc;
    tc.method = TrainMethod::orthogonal;
    tc.iterations = 1500;
    tc.batch_size = 200;
    tc.eval_every = 250;

    const EncodingSpec sig_enc = lead_lag_sig_encoding();
    EncodingSpec coarse_enc;
    coarse_enc.kind = EncodingKind::coarse_path;
    NetworkConfig ffn;
    ffn.type = NetworkConfig::Type::ffn;
    ffn.ffn_hidden = {100, 100, 100, 100};

    int wins = 0;
    std::string per_seed;
    for (int s = 1; s <= kSeeds; ++s) {
        const std::uint64_t base = mix_seed(6000, static_cast<std::uint64_t>(s));
        TrainResult lstm_run = train(model, grid, payoff, sig_enc, desk_lstm(), tc, base);
        TrainResult ffn_run = train(model, grid, payoff, coarse_enc, ffn, tc, mix_seed(base, 2));

        // The oracle cache key is shared by both methods: same test paths,
        // same sample count, same tag.
        const PathBatch test = model.simulate(grid, 64, mix_seed(base, 9));
        EvalOptions opt;
        opt.oracle_n_mc = 20000;
        opt.cache_dir = (work_dir() / "oracle_c6").string();
        opt.config_hash = mix_seed(0xC6, static_cast<std::uint64_t>(s));

        LstmSequenceModel theta_lstm(lstm_run.theta);
        FfnSequenceModel theta_ffn(ffn_run.theta);
        const double e_lstm = integral_error_price(theta_lstm, model, payoff, test, sig_enc, opt);
        const double e_ffn = integral_error_price(theta_ffn, model, payoff, test, coarse_enc, opt);
        if (e_lstm < e_ffn) ++wins;
        per_seed += strf("%s%.3e<%.3e", s == 1 ? "" : " ", e_lstm, e_ffn);
    }

    Outcome o;
    o.pass = wins >= kMinWins;
    o.detail = strf("sigma=1: lstm+lead-lag beat ffn-coarse in %d/%d seeds (min %d); E_integral pairs: %s",
                    wins, kSeeds, kMinWins, per_seed.c_str());
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 8: one parametric training run, checked across the sigma range.

Outcome criterion_parametric_family() {
    constexpr double kMaxIntegral = 3e-2;
    const TimeGrid grid(0.5, 50, 10);
    const LookbackPayoff payoff;
    const EncodingSpec enc = lead_lag_sig_encoding();

    BlackScholesParams p = bs_params(2, 0.05, 0.2);
    p.beta.kind = BetaLaw::Kind::uniform;
    p.beta.lo = 0.0;
    p.beta.hi = 0.4;
    p.x0.kind = InitialLaw::Kind::lognormal;
    p.x0.values.clear();
    p.x0.mu = 0.08;
    p.x0.sigma_law = 0.2;
    p.x0.tau = 0.1;
    const BlackScholesModel family(p);

    TrainingConfig tc;
    tc.method = TrainMethod::martingale;
    tc.iterations = 2500;
    tc.batch_size = 200;
    tc.eval_every = 250;
    TrainResult tr = train(family, grid, payoff, enc, desk_lstm(), tc, 8008);
    LstmSequenceModel theta(tr.theta);

    const double betas[3] = {0.05, 0.2, 0.35};
    double errs[3] = {0.0, 0.0, 0.0};
    bool all_pass = true;
    for (int i = 0; i < 3; ++i) {
        BlackScholesParams pb = p;
        pb.beta = BetaLaw{};
        pb.sigma = {betas[i], betas[i]};
        const BlackScholesModel pinned(pb);
        const PathBatch test = pinned.simulate(grid, 64, mix_seed(8100, static_cast<std::uint64_t>(i)));
        EvalOptions opt;
        opt.oracle_n_mc = 20000;
        opt.cache_dir = (work_dir() / "oracle_c8").string();
        opt.config_hash = mix_seed(0xC8, static_cast<std::uint64_t>(i));
        errs[i] = integral_error_price(theta, pinned, payoff, test, enc, opt);
        all_pass = all_pass && std::isfinite(errs[i]) && errs[i] <= kMaxIntegral;
    }

    Outcome o;
    o.pass = all_pass;
    o.detail = strf("sigma~U[0,0.4] run: E_integral at sigma 0.05/0.2/0.35 = %.3e / %.3e / %.3e (max %.0e)",
                    errs[0], errs[1], errs[2], kMaxIntegral);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 9: Heston autocallable.

Outcome criterion_heston_autocall() {
    constexpr double kMaxIntegral = 5e-2;
    constexpr double kMinCorr = 0.9;

    HestonParams hp;
    hp.rate = 0.0;
    hp.kappa = 3.0;
    hp.mu_bar = 0.3;
    hp.eta = 1.0;
    hp.rho = 0.6;
    hp.v0 = 1.0;
    hp.s0 = 1.0;
    const HestonModel model(hp);

    // Observation dates at 2 and 4 months land on fine indices 20 and 40 and
    // on the coarse grid (every 5th fine step).
    const TimeGrid grid(0.5, 60, 12);
    AutocallSpec spec;
    spec.barrier = 1.02;
    spec.observation_indices = {20, 40};
    spec.premature_payoffs = {1.1, 1.2};
    spec.redemption_a = 0.9;
    spec.redemption_b = 0.0;
    const AutocallablePayoff payoff(spec);

    const EncodingSpec enc = lead_lag_sig_encoding();
    TrainingConfig tc;
    tc.method = TrainMethod::martingale;
    tc.iterations = 3000;
    tc.batch_size = 200;
    tc.eval_every = 250;
    TrainResult tr = train(model, grid, payoff, enc, desk_lstm(), tc, 9009);

    const PathBatch test = model.simulate(grid, 64, mix_seed(9000, 1));
    EvalOptions opt;
    opt.oracle_n_mc = 20000;
    opt.cache_dir = (work_dir() / "oracle_c9").string();
    opt.config_hash = 0xC9;
    LstmSequenceModel theta(tr.theta);
    const double e_int = integral_error_price(theta, model, payoff, test, enc, opt);

    LstmSequenceModel phi(tr.phi);
    const double rho = cv_correlation(phi, model, payoff, grid, 4096, enc, mix_seed(9000, 2));

    Outcome o;
    o.pass = e_int <= kMaxIntegral && rho >= kMinCorr;
    o.detail = strf("heston autocallable martingale lstm+lead-lag: E_integral %.3e (max %.0e), rho %.4f (min %.2f)",
                    e_int, kMaxIntegral, rho, kMinCorr);
    return o;
}

// ---------------------------------------------------------------------------
// Criterion 10: byte-identical reruns of every command.

int run_cli(const fs::path& dir, const std::string& args) {
    const std::string cmd = std::string(PPDE_CLI_BINARY) + " " + args + " > " +
                            (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    // The full path keeps a file that is absent from both run directories
    // from comparing equal.
    if (!in) return "<missing " + p.string() + ">";
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Wall time is the one column a rerun may legitimately change.
std::string strip_wall_time(const std::string& csv) {
    std::ostringstream out;
    std::istringstream ss(csv);
    std::string line;
    while (std::getline(ss, line)) {
        if (!line.empty() && line[0] != '#') line = line.substr(0, line.rfind(','));
        out << line << "\n";
    }
    return out.str();
}

std::string metadata_without_timestamp(const std::string& text) {
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) return text;
    j.erase("timestamp");
    return j.dump();
}

Outcome criterion_determinism() {
    const char* config = R"({
  "seed": 11,
  "model": {"type": "black_scholes", "d": 1, "rate": 0.02, "sigma": 0.2},
  "grid": {"maturity": 0.5, "n_fine": 20, "n_coarse": 5},
  "payoff": {"type": "lookback"},
  "encoding": {"kind": "sig_stream", "depth": 2, "transform": "lead_lag"},
  "network": {"type": "lstm", "lstm_hidden": 8, "lstm_head": 8},
  "training": {"method": "martingale", "iterations": 8, "batch_size": 16, "eval_every": 4},
  "pricing": {"n_mc": 400, "alpha": 0.05},
  "evaluation": {"oracle_n_mc": 300, "test_paths": 3, "cv_corr_paths": 64}
})";

    const fs::path root = work_dir() / "determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    const fs::path cfg = root / "config.json";
    {
        std::ofstream out(cfg, std::ios::binary);
        out << config;
    }

    for (const char* run : {"a", "b"}) {
        const fs::path dir = root / run;
        fs::create_directories(dir);
        if (run_cli(dir, "simulate --config " + cfg.string() + " --out " + (dir / "sim").string()) != 0)
            return {false, "simulate exited nonzero"};
        if (run_cli(dir, "train --config " + cfg.string() + " --out " + (dir / "train").string()) != 0)
            return {false, "train exited nonzero"};
        if (run_cli(dir, "price --config " + cfg.string() + " --out " + (dir / "price").string() +
                             " --checkpoint " + (dir / "train" / "phi.ckpt").string()) != 0)
            return {false, "price exited nonzero"};
        if (run_cli(dir, "evaluate --config " + cfg.string() + " --out " + (dir / "eval").string() +
                             " --checkpoint " + (dir / "train" / "theta.ckpt").string() +
                             " --checkpoint " + (dir / "train" / "phi.ckpt").string()) != 0)
            return {false, "evaluate exited nonzero"};
    }

    // Data artifacts must match byte for byte; loss history after dropping the
    // wall-time column, metadata after dropping the timestamp.
    const char* exact[] = {"sim/paths.csv",       "sim/signatures.csv", "train/theta.ckpt",
                           "train/phi.ckpt",      "price/price.json",   "eval/metrics.csv"};
    std::string mismatches;
    int compared = 0;
    for (const char* rel : exact) {
        ++compared;
        if (slurp(root / "a" / rel) != slurp(root / "b" / rel)) mismatches += std::string(" ") + rel;
    }
    ++compared;
    if (strip_wall_time(slurp(root / "a" / "train" / "loss_history.csv")) !=
        strip_wall_time(slurp(root / "b" / "train" / "loss_history.csv")))
        mismatches += " train/loss_history.csv";
    for (const char* sub : {"sim", "train", "price", "eval"}) {
        ++compared;
        if (metadata_without_timestamp(slurp(root / "a" / sub / "metadata.json")) !=
            metadata_without_timestamp(slurp(root / "b" / sub / "metadata.json")))
            mismatches += std::string(" ") + sub + "/metadata.json";
    }

    Outcome o;
    o.pass = mismatches.empty();
    o.detail = mismatches.empty()
                   ? strf("simulate/train/price/evaluate reruns byte-identical across %d artifacts", compared)
                   : "rerun differs in:" + mismatches;
    return o;
}

// ---------------------------------------------------------------------------

struct Criterion {
    int id;
    const char* name;
    Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "signature oracle equivalence", criterion_signature_oracle},
    {2, "gradient finite differences", criterion_gradients},
    {3, "exact representation fixture", criterion_exact_representation},
    {4, "mc pricer vs closed form", criterion_pricer_calibration},
    {5, "lookback sigma 0.3 metrics", criterion_lookback_table},
    {6, "method ordering at sigma 1", criterion_method_ordering},
    {7, "cv interval coverage", criterion_interval_coverage},
    {8, "parametric family", criterion_parametric_family},
    {9, "heston autocallable smoke", criterion_heston_autocall},
    {10, "rerun determinism", criterion_determinism},
};

} // namespace

int main(int argc, char** argv) {
    std::vector<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));

    int failures = 0, ran = 0;
    for (const Criterion& c : kCriteria) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        ++ran;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = strf("exception: %s", e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (!o.pass) ++failures;
        std::printf("criterion %2d %s %s: %s [%.1fs]\n", c.id, o.pass ? "PASS" : "FAIL", c.name,
                    o.detail.c_str(), secs);
        std::fflush(stdout);
    }

    std::printf("%d/%d criteria passed\n", ran - failures, ran);
    return failures == 0 ? 0 : 1;
}
