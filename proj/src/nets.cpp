#include "ppde/nets.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ppde/errors.hpp"
#include "ppde/numerics.hpp"
#include "ppde/rng.hpp"

namespace ppde {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void relu_in_place(Mat& m) {
    for (double& v : m.a)
        if (v < 0.0) v = 0.0;
}

// d/dx relu applied to a gradient, using the stored post-activation values
// (zero exactly where the activation clipped).
void relu_mask(Mat& dm, const Mat& act) {
    for (std::size_t i = 0; i < dm.a.size(); ++i)
        if (act.a[i] <= 0.0) dm.a[i] = 0.0;
}

std::string join_hidden(const std::vector<int>& hidden) {
    if (hidden.empty()) return "-";
    std::string s;
    for (std::size_t i = 0; i < hidden.size(); ++i) {
        if (i > 0) s += ',';
        s += std::to_string(hidden[i]);
    }
    return s;
}

int parse_positive_int(const std::string& s, const char* what) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(s, &pos);
    } catch (const std::exception&) {
        throw config_error(std::string("network descriptor: bad ") + what + " '" + s + "'");
    }
    if (pos != s.size() || v < 1)
        throw config_error(std::string("network descriptor: bad ") + what + " '" + s + "'");
    return v;
}

// Parameter block list shared by the initializer: weights know their fan-in,
// biases are zero-filled.
struct ParamBlock {
    int offset;
    int count;
    int fan_in;  // 0 for biases
};

std::vector<ParamBlock> ffn_blocks(const FFNConfig& cfg) {
    std::vector<int> sizes;
    sizes.push_back(cfg.input);
    sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
    sizes.push_back(cfg.output);
    std::vector<ParamBlock> blocks;
    int off = 0;
    for (std::size_t l = 1; l < sizes.size(); ++l) {
        int in_w = sizes[l - 1], out_w = sizes[l];
        blocks.push_back({off, out_w * in_w, in_w});
        off += out_w * in_w;
        blocks.push_back({off, out_w, 0});
        off += out_w;
    }
    return blocks;
}

std::vector<ParamBlock> lstm_blocks(const LSTMConfig& cfg) {
    const int I = cfg.input, H = cfg.hidden, A = cfg.head_hidden, O = cfg.output;
    std::vector<ParamBlock> blocks;
    int off = 0;
    auto weight = [&](int rows, int cols) {
        blocks.push_back({off, rows * cols, cols});
        off += rows * cols;
    };
    auto bias = [&](int n) {
        blocks.push_back({off, n, 0});
        off += n;
    };
    weight(4 * H, I);  // W_x, gate rows stacked i,f,g,o
    bias(4 * H);       // b_x
    weight(4 * H, H);  // W_h
    bias(4 * H);       // b_h
    weight(H, H);      // W_hy (readout y_t, width = hidden)
    bias(H);           // b_hy
    weight(A, H);      // head layer 1
    bias(A);
    weight(O, A);      // head layer 2
    bias(O);
    return blocks;
}

} // namespace

void FFNConfig::validate() const {
    if (input < 1) throw config_error("network: input width must be >= 1");
    if (output < 1) throw config_error("network: output width must be >= 1");
    for (int h : hidden)
        if (h < 1) throw config_error("network: hidden widths must be >= 1");
}

void LSTMConfig::validate() const {
    if (input < 1) throw config_error("network: input width must be >= 1");
    if (hidden < 1) throw config_error("network: hidden size must be >= 1");
    if (head_hidden < 1) throw config_error("network: head width must be >= 1");
    if (output < 1) throw config_error("network: output width must be >= 1");
}

std::string ArchDescriptor::to_string() const {
    std::string s;
    if (kind == Kind::ffn) {
        s = "ffn in=" + std::to_string(ffn.input) + " hidden=" + join_hidden(ffn.hidden) +
            " out=" + std::to_string(ffn.output) + " act=relu";
    } else {
        s = "lstm in=" + std::to_string(lstm.input) + " hidden=" + std::to_string(lstm.hidden) +
            " head=" + std::to_string(lstm.head_hidden) + " out=" + std::to_string(lstm.output) +
            " act=relu";
    }
    return s;
}

ArchDescriptor ArchDescriptor::parse(const std::string& text) {
    std::istringstream in(text);
    std::string kind_tok;
    in >> kind_tok;
    ArchDescriptor d;
    if (kind_tok == "ffn")
        d.kind = Kind::ffn;
    else if (kind_tok == "lstm")
        d.kind = Kind::lstm;
    else
        throw config_error("network descriptor: unknown kind '" + kind_tok + "'");

    bool saw_in = false, saw_hidden = false, saw_out = false, saw_head = false, saw_act = false;
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            throw config_error("network descriptor: expected key=value, got '" + tok + "'");
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "in") {
            int v = parse_positive_int(val, "input width");
            (d.kind == Kind::ffn ? d.ffn.input : d.lstm.input) = v;
            saw_in = true;
        } else if (key == "out") {
            int v = parse_positive_int(val, "output width");
            (d.kind == Kind::ffn ? d.ffn.output : d.lstm.output) = v;
            saw_out = true;
        } else if (key == "act") {
            if (val != "relu")
                throw config_error("network descriptor: unsupported activation '" + val + "'");
            saw_act = true;
        } else if (key == "hidden" && d.kind == Kind::ffn) {
            d.ffn.hidden.clear();
            if (val != "-") {
                std::istringstream hs(val);
                std::string item;
                while (std::getline(hs, item, ','))
                    d.ffn.hidden.push_back(parse_positive_int(item, "hidden width"));
            }
            saw_hidden = true;
        } else if (key == "hidden" && d.kind == Kind::lstm) {
            d.lstm.hidden = parse_positive_int(val, "hidden size");
            saw_hidden = true;
        } else if (key == "head" && d.kind == Kind::lstm) {
            d.lstm.head_hidden = parse_positive_int(val, "head width");
            saw_head = true;
        } else {
            throw config_error("network descriptor: unknown key '" + key + "'");
        }
    }
    bool complete = saw_in && saw_hidden && saw_out && saw_act && (d.kind == Kind::ffn || saw_head);
    if (!complete) throw config_error("network descriptor: missing fields in '" + text + "'");
    return d;
}

int ArchDescriptor::n_params() const {
    const auto blocks = kind == Kind::ffn ? ffn_blocks(ffn) : lstm_blocks(lstm);
    return blocks.back().offset + blocks.back().count;
}

NetworkParams make_network_params(const ArchDescriptor& arch, std::uint64_t seed) {
    if (arch.kind == ArchDescriptor::Kind::ffn)
        arch.ffn.validate();
    else
        arch.lstm.validate();
    NetworkParams p;
    p.arch = arch;
    p.init_seed = seed;
    p.values.assign(static_cast<std::size_t>(arch.n_params()), 0.0);
    p.grad.assign(p.values.size(), 0.0);

    Xoshiro256pp rng(mix_seed(seed, static_cast<std::uint64_t>(StreamTag::net_init)));
    auto uniform01 = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    const auto blocks =
        arch.kind == ArchDescriptor::Kind::ffn ? ffn_blocks(arch.ffn) : lstm_blocks(arch.lstm);
    for (const auto& b : blocks) {
        if (b.fan_in == 0) continue;  // biases stay zero
        const double bound = 1.0 / std::sqrt(static_cast<double>(b.fan_in));
        for (int i = 0; i < b.count; ++i)
            p.values[static_cast<std::size_t>(b.offset) + i] = (2.0 * uniform01() - 1.0) * bound;
    }
    return p;
}

// ---------------------------------------------------------------------------
// Ffn

Ffn::Ffn(FFNConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    sizes_.push_back(cfg_.input);
    sizes_.insert(sizes_.end(), cfg_.hidden.begin(), cfg_.hidden.end());
    sizes_.push_back(cfg_.output);
    int off = 0;
    for (std::size_t l = 1; l < sizes_.size(); ++l) {
        w_off_.push_back(off);
        off += sizes_[l] * sizes_[l - 1];
        b_off_.push_back(off);
        off += sizes_[l];
    }
    total_params_ = off;
}

void Ffn::forward(const Mat& X, std::span<const double> params, FfnCache& cache, Mat& out) const {
    if (X.cols != cfg_.input) throw std::invalid_argument("ffn: input width mismatch");
    if (params.size() != static_cast<std::size_t>(total_params_))
        throw std::invalid_argument("ffn: parameter count mismatch");
    const int L = static_cast<int>(sizes_.size()) - 1;
    cache.acts.resize(L > 1 ? L - 1 : 0);
    const Mat* cur = &X;
    for (int l = 0; l < L; ++l) {
        Mat& target = (l < L - 1) ? cache.acts[l] : out;
        ensure_shape(target, X.rows, sizes_[l + 1]);
        CMatView W(params.data() + w_off_[l], sizes_[l + 1], sizes_[l]);
        matmul_abt_add(*cur, W, target);
        add_row_vector(target, params.subspan(b_off_[l], sizes_[l + 1]));
        if (l < L - 1) {
            relu_in_place(target);
            cur = &target;
        }
    }
}

void Ffn::backward(const Mat& X, const Mat& dOut, std::span<const double> params,
                   const FfnCache& cache, std::span<double> grad, Mat* dX) const {
    if (grad.size() != static_cast<std::size_t>(total_params_))
        throw std::invalid_argument("ffn: gradient size mismatch");
    const int L = static_cast<int>(sizes_.size()) - 1;
    Mat dz = dOut;
    Mat dprev;
    for (int l = L - 1; l >= 0; --l) {
        const Mat& input = (l == 0) ? X : cache.acts[l - 1];
        MatView dW(grad.data() + w_off_[l], sizes_[l + 1], sizes_[l]);
        matmul_atb_add(dz, input, dW);
        add_column_sums(dz, grad.subspan(b_off_[l], sizes_[l + 1]));
        if (l == 0) {
            if (dX != nullptr) {
                ensure_shape(*dX, X.rows, sizes_[0]);
                CMatView W(params.data() + w_off_[0], sizes_[1], sizes_[0]);
                matmul_ab_add(dz, W, *dX);
            }
            break;
        }
        ensure_shape(dprev, X.rows, sizes_[l]);
        CMatView W(params.data() + w_off_[l], sizes_[l + 1], sizes_[l]);
        matmul_ab_add(dz, W, dprev);
        relu_mask(dprev, cache.acts[l - 1]);
        std::swap(dz, dprev);
    }
}

// ---------------------------------------------------------------------------
// Lstm

Lstm::Lstm(LSTMConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const int I = cfg_.input, H = cfg_.hidden, A = cfg_.head_hidden, O = cfg_.output;
    int off = 0;
    auto place = [&off](int n) {
        int here = off;
        off += n;
        return here;
    };
    wx_ = place(4 * H * I);
    bx_ = place(4 * H);
    wh_ = place(4 * H * H);
    bh_ = place(4 * H);
    why_ = place(H * H);
    bhy_ = place(H);
    w1_ = place(A * H);
    b1_ = place(A);
    w2_ = place(O * A);
    b2_ = place(O);
    total_params_ = off;
}

void Lstm::step(const Mat& X, const Mat* h_prev, const Mat* c_prev, std::span<const double> params,
                LstmCache& cache, int t, Mat& out) const {
    const int B = X.rows, I = cfg_.input, H = cfg_.hidden, A = cfg_.head_hidden, O = cfg_.output;
    if (X.cols != I) throw std::invalid_argument("lstm: input width mismatch");
    if (params.size() != static_cast<std::size_t>(total_params_))
        throw std::invalid_argument("lstm: parameter count mismatch");
    if (t >= static_cast<int>(cache.c.size())) {
        const std::size_t n = static_cast<std::size_t>(t) + 1;
        cache.gi.resize(n);
        cache.gf.resize(n);
        cache.gg.resize(n);
        cache.go.resize(n);
        cache.c.resize(n);
        cache.tc.resize(n);
        cache.h.resize(n);
        cache.y.resize(n);
        cache.u.resize(n);
    }

    Mat& a = cache.a4h;
    ensure_shape(a, B, 4 * H);
    matmul_abt_add(X, CMatView(params.data() + wx_, 4 * H, I), a);
    if (h_prev != nullptr) matmul_abt_add(*h_prev, CMatView(params.data() + wh_, 4 * H, H), a);
    add_row_vector(a, params.subspan(bx_, 4 * H));
    add_row_vector(a, params.subspan(bh_, 4 * H));

    Mat& gi = cache.gi[t];
    Mat& gf = cache.gf[t];
    Mat& gg = cache.gg[t];
    Mat& go = cache.go[t];
    Mat& c = cache.c[t];
    Mat& tc = cache.tc[t];
    Mat& h = cache.h[t];
    for (Mat* m : {&gi, &gf, &gg, &go, &c, &tc, &h}) ensure_shape(*m, B, H);

    for (int b = 0; b < B; ++b) {
        const double* ab = a.row(b);
        const double* cp = c_prev != nullptr ? c_prev->row(b) : nullptr;
        double* pi = gi.row(b);
        double* pf = gf.row(b);
        double* pg = gg.row(b);
        double* po = go.row(b);
        double* pc = c.row(b);
        double* ptc = tc.row(b);
        double* ph = h.row(b);
        for (int j = 0; j < H; ++j) {
            pi[j] = sigmoid(ab[j]);
            pf[j] = sigmoid(ab[H + j]);
            pg[j] = std::tanh(ab[2 * H + j]);
            po[j] = sigmoid(ab[3 * H + j]);
            pc[j] = pi[j] * pg[j] + (cp != nullptr ? pf[j] * cp[j] : 0.0);
            ptc[j] = std::tanh(pc[j]);
            ph[j] = po[j] * ptc[j];
        }
    }

    Mat& y = cache.y[t];
    ensure_shape(y, B, H);
    matmul_abt_add(h, CMatView(params.data() + why_, H, H), y);
    add_row_vector(y, params.subspan(bhy_, H));

    Mat& u = cache.u[t];
    ensure_shape(u, B, A);
    matmul_abt_add(y, CMatView(params.data() + w1_, A, H), u);
    add_row_vector(u, params.subspan(b1_, A));
    relu_in_place(u);

    ensure_shape(out, B, O);
    matmul_abt_add(u, CMatView(params.data() + w2_, O, A), out);
    add_row_vector(out, params.subspan(b2_, O));
}

void Lstm::forward(const std::vector<Mat>& xs, std::span<const double> params, LstmCache& cache,
                   std::vector<Mat>& outs) const {
    if (xs.empty()) throw std::invalid_argument("lstm: empty input sequence");
    const int steps = static_cast<int>(xs.size());
    cache.steps = steps;
    cache.batch = xs[0].rows;
    outs.resize(steps);
    // Grow the per-step storage up front: step() takes references into these
    // vectors, so they must not reallocate mid-sequence.
    if (static_cast<int>(cache.c.size()) < steps) {
        const std::size_t n = static_cast<std::size_t>(steps);
        cache.gi.resize(n);
        cache.gf.resize(n);
        cache.gg.resize(n);
        cache.go.resize(n);
        cache.c.resize(n);
        cache.tc.resize(n);
        cache.h.resize(n);
        cache.y.resize(n);
        cache.u.resize(n);
    }
    for (int t = 0; t < steps; ++t) {
        if (xs[t].rows != cache.batch) throw std::invalid_argument("lstm: ragged batch");
        const Mat* hp = t > 0 ? &cache.h[t - 1] : nullptr;
        const Mat* cp = t > 0 ? &cache.c[t - 1] : nullptr;
        step(xs[t], hp, cp, params, cache, t, outs[t]);
    }
}

void Lstm::backward(const std::vector<Mat>& xs, const std::vector<Mat>& dOuts,
                    std::span<const double> params, const LstmCache& cache, std::span<double> grad,
                    std::vector<Mat>* dXs) const {
    const int steps = cache.steps, B = cache.batch;
    const int I = cfg_.input, H = cfg_.hidden, A = cfg_.head_hidden, O = cfg_.output;
    if (static_cast<int>(xs.size()) != steps || static_cast<int>(dOuts.size()) != steps)
        throw std::invalid_argument("lstm: backward sequence length mismatch");
    if (grad.size() != static_cast<std::size_t>(total_params_))
        throw std::invalid_argument("lstm: gradient size mismatch");
    if (dXs != nullptr) dXs->resize(steps);

    CMatView Wx(params.data() + wx_, 4 * H, I);
    CMatView Wh(params.data() + wh_, 4 * H, H);
    CMatView Why(params.data() + why_, H, H);
    CMatView W1(params.data() + w1_, A, H);
    CMatView W2(params.data() + w2_, O, A);
    MatView dWx(grad.data() + wx_, 4 * H, I);
    MatView dWh(grad.data() + wh_, 4 * H, H);
    MatView dWhy(grad.data() + why_, H, H);
    MatView dW1(grad.data() + w1_, A, H);
    MatView dW2(grad.data() + w2_, O, A);

    Mat du(B, A), dy(B, H), dh(B, H), da(B, 4 * H);
    Mat dh_in(B, H), dc_in(B, H), dh_out(B, H), dc_out(B, H);

    for (int t = steps - 1; t >= 0; --t) {
        const Mat& dOut = dOuts[t];
        if (dOut.rows != B || dOut.cols != O)
            throw std::invalid_argument("lstm: output gradient shape mismatch");

        // Head, in reverse: out = W2 u + b2, u = relu(W1 y + b1), y = Why h + bhy.
        matmul_atb_add(dOut, cache.u[t], dW2);
        add_column_sums(dOut, grad.subspan(b2_, O));
        ensure_shape(du, B, A);
        matmul_ab_add(dOut, W2, du);
        relu_mask(du, cache.u[t]);

        matmul_atb_add(du, cache.y[t], dW1);
        add_column_sums(du, grad.subspan(b1_, A));
        ensure_shape(dy, B, H);
        matmul_ab_add(du, W1, dy);

        matmul_atb_add(dy, cache.h[t], dWhy);
        add_column_sums(dy, grad.subspan(bhy_, H));
        ensure_shape(dh, B, H);
        matmul_ab_add(dy, Why, dh);
        for (std::size_t i = 0; i < dh.a.size(); ++i) dh.a[i] += dh_in.a[i];

        // Cell, in reverse. Gate derivatives come from the stored
        // post-activations: s' = s(1-s), tanh' = 1 - v^2.
        const Mat* c_prev = t > 0 ? &cache.c[t - 1] : nullptr;
        ensure_shape(da, B, 4 * H);
        dc_out.zero();
        for (int b = 0; b < B; ++b) {
            const double* pi = cache.gi[t].row(b);
            const double* pf = cache.gf[t].row(b);
            const double* pg = cache.gg[t].row(b);
            const double* po = cache.go[t].row(b);
            const double* ptc = cache.tc[t].row(b);
            const double* cp = c_prev != nullptr ? c_prev->row(b) : nullptr;
            const double* pdh = dh.row(b);
            const double* pdc_in = dc_in.row(b);
            double* pda = da.row(b);
            double* pdc_out = dc_out.row(b);
            for (int j = 0; j < H; ++j) {
                const double d_o = pdh[j] * ptc[j];
                const double d_c = pdc_in[j] + pdh[j] * po[j] * (1.0 - ptc[j] * ptc[j]);
                const double d_i = d_c * pg[j];
                const double d_g = d_c * pi[j];
                const double d_f = cp != nullptr ? d_c * cp[j] : 0.0;
                pdc_out[j] = d_c * pf[j];
                pda[j] = d_i * pi[j] * (1.0 - pi[j]);
                pda[H + j] = d_f * pf[j] * (1.0 - pf[j]);
                pda[2 * H + j] = d_g * (1.0 - pg[j] * pg[j]);
                pda[3 * H + j] = d_o * po[j] * (1.0 - po[j]);
            }
        }

        matmul_atb_add(da, xs[t], dWx);
        add_column_sums(da, grad.subspan(bx_, 4 * H));
        add_column_sums(da, grad.subspan(bh_, 4 * H));
        if (t > 0) matmul_atb_add(da, cache.h[t - 1], dWh);
        ensure_shape(dh_out, B, H);
        matmul_ab_add(da, Wh, dh_out);
        if (dXs != nullptr) {
            ensure_shape((*dXs)[t], B, I);
            matmul_ab_add(da, Wx, (*dXs)[t]);
        }
        std::swap(dh_in, dh_out);
        std::swap(dc_in, dc_out);
    }
}

// ---------------------------------------------------------------------------
// Single-sample wrappers

std::vector<double> ffn_forward(const FFNConfig& cfg, std::span<const double> params,
                                std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(cfg.input))
        throw std::invalid_argument("ffn_forward: input width mismatch");
    Ffn net(cfg);
    Mat X(1, cfg.input);
    std::copy(x.begin(), x.end(), X.a.begin());
    FfnCache cache;
    Mat out;
    net.forward(X, params, cache, out);
    return out.a;
}

LstmStepResult lstm_step(const LSTMConfig& cfg, std::span<const double> params,
                         std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev) {
    if (x.size() != static_cast<std::size_t>(cfg.input))
        throw std::invalid_argument("lstm_step: input width mismatch");
    if (h_prev.size() != static_cast<std::size_t>(cfg.hidden) ||
        c_prev.size() != static_cast<std::size_t>(cfg.hidden))
        throw std::invalid_argument("lstm_step: state width mismatch");
    Lstm net(cfg);
    Mat X(1, cfg.input), H0(1, cfg.hidden), C0(1, cfg.hidden);
    std::copy(x.begin(), x.end(), X.a.begin());
    std::copy(h_prev.begin(), h_prev.end(), H0.a.begin());
    std::copy(c_prev.begin(), c_prev.end(), C0.a.begin());
    LstmCache cache;
    Mat out;
    net.step(X, &H0, &C0, params, cache, 0, out);
    return {out.a, cache.h[0].a, cache.c[0].a};
}

std::vector<std::vector<double>> lstm_unroll(const LSTMConfig& cfg, std::span<const double> params,
                                             const std::vector<std::vector<double>>& xs) {
    if (xs.empty()) throw std::invalid_argument("lstm_unroll: empty input sequence");
    Lstm net(cfg);
    std::vector<Mat> batch_xs(xs.size());
    for (std::size_t t = 0; t < xs.size(); ++t) {
        if (xs[t].size() != static_cast<std::size_t>(cfg.input))
            throw std::invalid_argument("lstm_unroll: input width mismatch");
        batch_xs[t] = Mat(1, cfg.input);
        std::copy(xs[t].begin(), xs[t].end(), batch_xs[t].a.begin());
    }
    LstmCache cache;
    std::vector<Mat> outs;
    net.forward(batch_xs, params, cache, outs);
    std::vector<std::vector<double>> result(outs.size());
    for (std::size_t t = 0; t < outs.size(); ++t) result[t] = outs[t].a;
    return result;
}

// ---------------------------------------------------------------------------
// Optimizer

void optimizer_step(std::vector<double>& params, const std::vector<double>& grad,
                    OptimizerState& state, const OptimizerConfig& cfg) {
    if (params.size() != grad.size())
        throw std::invalid_argument("optimizer_step: parameter/gradient length mismatch");
    for (std::size_t i = 0; i < grad.size(); ++i) {
        if (!std::isfinite(grad[i])) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "optimizer: non-finite gradient at index %zu (%g)", i,
                          grad[i]);
            throw numeric_error(buf);
        }
    }
    state.step += 1;
    if (cfg.method == OptimizerConfig::Method::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg.lr * grad[i];
        return;
    }
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

std::vector<unsigned char> payload_bytes(const std::vector<double>& values) {
    std::vector<unsigned char> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits;
        std::memcpy(&bits, &values[i], 8);
        for (int b = 0; b < 8; ++b)
            bytes[i * 8 + b] = static_cast<unsigned char>((bits >> (8 * b)) & 0xff);
    }
    return bytes;
}

} // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    const auto bytes = payload_bytes(ck.values);
    const std::uint64_t hash = fnv1a64(std::span<const unsigned char>(bytes.data(), bytes.size()));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw config_error("checkpoint: cannot open '" + path + "' for writing");
    out << "ppde checkpoint v1\n";
    out << "arch: " << ck.arch << "\n";
    out << "seed: " << ck.seed << "\n";
    out << "order: blocks in descriptor order, weights row-major, bias after weights\n";
    out << "input_spec: " << ck.input_spec << "\n";
    out << "count: " << ck.values.size() << "\n";
    out << "payload_hash: " << hex64(hash) << "\n";
    out << "---\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw config_error("checkpoint: write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("checkpoint: cannot open '" + path + "'");
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const std::string sep = "\n---\n";
    const auto sep_pos = blob.find(sep);
    if (sep_pos == std::string::npos)
        throw config_error("checkpoint: missing header/payload separator in '" + path + "'");
    const std::string header = blob.substr(0, sep_pos);
    const std::size_t payload_off = sep_pos + sep.size();

    std::istringstream hs(header);
    std::string line;
    if (!std::getline(hs, line) || line != "ppde checkpoint v1")
        throw config_error("checkpoint: unrecognized format in '" + path + "'");

    Checkpoint ck;
    bool saw_count = false, saw_hash = false;
    std::uint64_t want_hash = 0;
    std::size_t count = 0;
    while (std::getline(hs, line)) {
        const auto colon = line.find(": ");
        std::string key = colon == std::string::npos ? line : line.substr(0, colon);
        std::string val = colon == std::string::npos ? "" : line.substr(colon + 2);
        if (key == "arch") {
            ck.arch = val;
        } else if (key == "seed") {
            ck.seed = std::stoull(val);
        } else if (key == "input_spec") {
            ck.input_spec = val;
        } else if (key == "count") {
            count = std::stoull(val);
            saw_count = true;
        } else if (key == "payload_hash") {
            want_hash = std::stoull(val, nullptr, 16);
            saw_hash = true;
        } else if (key == "order") {
            // informational
        } else {
            throw config_error("checkpoint: unknown header field '" + key + "'");
        }
    }
    if (ck.arch.empty() || !saw_count || !saw_hash)
        throw config_error("checkpoint: incomplete header in '" + path + "'");

    const std::size_t payload_len = blob.size() - payload_off;
    if (payload_len != count * 8)
        throw config_error("checkpoint: payload size mismatch in '" + path + "'");
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(blob.data()) + payload_off;
    if (fnv1a64(std::span<const unsigned char>(bytes, payload_len)) != want_hash)
        throw config_error("checkpoint: payload hash mismatch in '" + path + "'");

    ck.values.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b)
            bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
        std::memcpy(&ck.values[i], &bits, 8);
    }
    return ck;
}

} // namespace ppde
