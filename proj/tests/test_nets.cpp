#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>
#include <vector>

#include "ppde/errors.hpp"
#include "ppde/nets.hpp"
#include "ppde/rng.hpp"

using namespace ppde;

namespace {

std::filesystem::path tmp_file(const char* name) {
    const std::filesystem::path dir(PPDE_TEST_TMPDIR);
    std::filesystem::create_directories(dir);
    return dir / name;
}

void fill_random(std::vector<double>& v, std::uint64_t seed, double scale = 1.0) {
    Xoshiro256pp rng(seed);
    std::normal_distribution<double> normal(0.0, scale);
    for (double& x : v) x = normal(rng);
}

void fill_random(Mat& m, std::uint64_t seed, double scale = 1.0) { fill_random(m.a, seed, scale); }

double relu(double x) { return x > 0.0 ? x : 0.0; }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// sum_ij C_ij out_ij for a forward pass; the test loss for gradient checks.
double ffn_loss(const Ffn& net, const Mat& X, std::span<const double> params, const Mat& C) {
    FfnCache cache;
    Mat out;
    net.forward(X, params, cache, out);
    double s = 0.0;
    for (std::size_t i = 0; i < out.a.size(); ++i) s += C.a[i] * out.a[i];
    return s;
}

double lstm_loss(const Lstm& net, const std::vector<Mat>& xs, std::span<const double> params,
                 const std::vector<Mat>& cs) {
    LstmCache cache;
    std::vector<Mat> outs;
    net.forward(xs, params, cache, outs);
    double s = 0.0;
    for (std::size_t t = 0; t < outs.size(); ++t)
        for (std::size_t i = 0; i < outs[t].a.size(); ++i) s += cs[t].a[i] * outs[t].a[i];
    return s;
}

bool bits_equal(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return false;
    return std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("ArchDescriptor round-trips through its textual form") {
    ArchDescriptor ffn;
    ffn.kind = ArchDescriptor::Kind::ffn;
    ffn.ffn.input = 3;
    ffn.ffn.hidden = {8, 4};
    ffn.ffn.output = 2;
    CHECK(ffn.to_string() == "ffn in=3 hidden=8,4 out=2 act=relu");
    const ArchDescriptor f2 = ArchDescriptor::parse(ffn.to_string());
    CHECK(f2.kind == ArchDescriptor::Kind::ffn);
    CHECK(f2.ffn.input == 3);
    CHECK(f2.ffn.hidden == std::vector<int>{8, 4});
    CHECK(f2.ffn.output == 2);

    ArchDescriptor lstm;
    lstm.kind = ArchDescriptor::Kind::lstm;
    lstm.lstm.input = 5;
    lstm.lstm.hidden = 16;
    lstm.lstm.head_hidden = 7;
    lstm.lstm.output = 1;
    const ArchDescriptor l2 = ArchDescriptor::parse(lstm.to_string());
    CHECK(l2.kind == ArchDescriptor::Kind::lstm);
    CHECK(l2.lstm.input == 5);
    CHECK(l2.lstm.hidden == 16);
    CHECK(l2.lstm.head_hidden == 7);
    CHECK(l2.lstm.output == 1);

    // Parameter counts: per layer out*in weights plus out biases; the
    // recurrent cell stacks four gate blocks plus readout and head.
    CHECK(ffn.n_params() == (8 * 3 + 8) + (4 * 8 + 4) + (2 * 4 + 2));
    CHECK(lstm.n_params() == (4 * 16 * 5 + 64) + (4 * 16 * 16 + 64) + (16 * 16 + 16) + (7 * 16 + 7) + (1 * 7 + 1));

    CHECK_THROWS_AS(ArchDescriptor::parse("gru in=1 hidden=2 out=1"), config_error);
    CHECK_THROWS_AS(ArchDescriptor::parse("ffn in=1 hidden=2 out=1 act=tanh"), config_error);
    CHECK_THROWS_AS(ArchDescriptor::parse("ffn in=1 hidden=2"), config_error);
    CHECK_THROWS_AS(ArchDescriptor::parse("ffn in=0 hidden=2 out=1 act=relu"), config_error);
    CHECK_THROWS_AS(ArchDescriptor::parse("ffn in=1 hidden=x out=1 act=relu"), config_error);
    CHECK_THROWS_AS(ArchDescriptor::parse("lstm in=1 hidden=2 head=3 out=1 act=relu banana=1"), config_error);
}

TEST_CASE("make_network_params initializes weights in the fan-in bound and biases at zero") {
    ArchDescriptor arch;
    arch.kind = ArchDescriptor::Kind::ffn;
    arch.ffn.input = 4;
    arch.ffn.hidden = {6};
    arch.ffn.output = 2;
    const NetworkParams p = make_network_params(arch, 9);
    REQUIRE(static_cast<int>(p.values.size()) == arch.n_params());
    CHECK(p.grad.size() == p.values.size());
    CHECK(p.init_seed == 9);
    for (double g : p.grad) CHECK(g == 0.0);

    // Layer 1: weights [6 x 4] then 6 biases; layer 2: [2 x 6] then 2 biases.
    for (int i = 0; i < 24; ++i) CHECK(std::abs(p.values[static_cast<std::size_t>(i)]) <= 0.5);
    for (int i = 24; i < 30; ++i) CHECK(p.values[static_cast<std::size_t>(i)] == 0.0);
    for (int i = 30; i < 42; ++i) CHECK(std::abs(p.values[static_cast<std::size_t>(i)]) <= 1.0 / std::sqrt(6.0));
    for (int i = 42; i < 44; ++i) CHECK(p.values[static_cast<std::size_t>(i)] == 0.0);

    const NetworkParams q = make_network_params(arch, 9);
    CHECK(bits_equal(p.values, q.values));
    const NetworkParams r = make_network_params(arch, 10);
    CHECK_FALSE(bits_equal(p.values, r.values));
}

TEST_CASE("Ffn forward matches a straight-line recomputation") {
    FFNConfig cfg;
    cfg.input = 2;
    cfg.hidden = {3};
    cfg.output = 1;
    const Ffn net(cfg);
    REQUIRE(net.n_params() == 13);

    std::vector<double> params(13);
    fill_random(params, 21, 0.7);
    Mat X(4, 2);
    fill_random(X, 22);

    FfnCache cache;
    Mat out;
    net.forward(X, params, cache, out);
    REQUIRE(out.rows == 4);
    REQUIRE(out.cols == 1);

    // Layout: W0 [3x2] rows 0..5, b0 6..8, W1 [1x3] 9..11, b1 12.
    for (int b = 0; b < 4; ++b) {
        double h[3];
        for (int j = 0; j < 3; ++j)
            h[j] = relu(params[static_cast<std::size_t>(2 * j)] * X.at(b, 0) +
                        params[static_cast<std::size_t>(2 * j + 1)] * X.at(b, 1) + params[static_cast<std::size_t>(6 + j)]);
        const double y = params[9] * h[0] + params[10] * h[1] + params[11] * h[2] + params[12];
        CHECK(out.at(b, 0) == doctest::Approx(y).epsilon(1e-13));
    }

    Mat wrong(4, 3);
    CHECK_THROWS_AS(net.forward(wrong, params, cache, out), std::invalid_argument);
    std::vector<double> short_params(5);
    CHECK_THROWS_AS(net.forward(X, short_params, cache, out), std::invalid_argument);
}

TEST_CASE("Ffn backward matches central finite differences") {
    FFNConfig cfg;
    cfg.input = 3;
    cfg.hidden = {5, 4};
    cfg.output = 2;
    const Ffn net(cfg);

    std::vector<double> params(static_cast<std::size_t>(net.n_params()));
    fill_random(params, 31, 0.6);
    Mat X(4, 3);
    fill_random(X, 32);
    Mat C(4, 2);
    fill_random(C, 33);

    FfnCache cache;
    Mat out;
    net.forward(X, params, cache, out);
    std::vector<double> grad(params.size(), 0.0);
    Mat dX(4, 3, 0.0);
    net.backward(X, C, params, cache, grad, &dX);

    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::vector<double> p = params;
        p[i] += h;
        const double up = ffn_loss(net, X, p, C);
        p[i] -= 2.0 * h;
        const double dn = ffn_loss(net, X, p, C);
        const double fd = (up - dn) / (2.0 * h);
        CAPTURE(i);
        CHECK(grad[i] == doctest::Approx(fd).epsilon(1e-5));
    }
    for (int b = 0; b < 4; ++b) {
        for (int j = 0; j < 3; ++j) {
            Mat Xp = X;
            Xp.at(b, j) += h;
            const double up = ffn_loss(net, Xp, params, C);
            Xp.at(b, j) -= 2.0 * h;
            const double dn = ffn_loss(net, Xp, params, C);
            CHECK(dX.at(b, j) == doctest::Approx((up - dn) / (2.0 * h)).epsilon(1e-5));
        }
    }
}

TEST_CASE("Ffn hidden layers rectify") {
    // Weights drive the single hidden unit negative for positive input, so
    // the output collapses to the final bias.
    FFNConfig cfg;
    cfg.input = 1;
    cfg.hidden = {1};
    cfg.output = 1;
    const Ffn net(cfg);
    const std::vector<double> params = {-2.0, -1.0, 3.0, 0.25}; // W0, b0, W1, b1
    Mat X(1, 1);
    X.at(0, 0) = 1.0;
    FfnCache cache;
    Mat out;
    net.forward(X, params, cache, out);
    CHECK(out.at(0, 0) == 0.25);

    X.at(0, 0) = -1.0; // preactivation 2 - 1 = 1, output 3*1 + 0.25
    net.forward(X, params, cache, out);
    CHECK(out.at(0, 0) == doctest::Approx(3.25).epsilon(1e-15));
}

TEST_CASE("lstm_step matches a hand-computed scalar cell") {
    LSTMConfig cfg;
    cfg.input = 1;
    cfg.hidden = 1;
    cfg.head_hidden = 1;
    cfg.output = 1;
    const Lstm net(cfg);
    REQUIRE(net.n_params() == 22);

    // Layout: Wx[4] bx[4] Wh[4] bh[4] Why bhy W1 b1 W2 b2, gate rows i,f,g,o.
    std::vector<double> params(22);
    fill_random(params, 41, 0.5);

    const double x = 0.7, hp = -0.3, cp = 0.4;
    const LstmStepResult res = lstm_step(cfg, params, {&x, 1}, {&hp, 1}, {&cp, 1});

    const double ai = params[0] * x + params[8] * hp + params[4] + params[12];
    const double af = params[1] * x + params[9] * hp + params[5] + params[13];
    const double ag = params[2] * x + params[10] * hp + params[6] + params[14];
    const double ao = params[3] * x + params[11] * hp + params[7] + params[15];
    const double c = sigmoid(ai) * std::tanh(ag) + sigmoid(af) * cp;
    const double hh = sigmoid(ao) * std::tanh(c);
    const double y = params[16] * hh + params[17];
    const double u = relu(params[18] * y + params[19]);
    const double o = params[20] * u + params[21];

    REQUIRE(res.out.size() == 1);
    CHECK(res.c[0] == doctest::Approx(c).epsilon(1e-14));
    CHECK(res.h[0] == doctest::Approx(hh).epsilon(1e-14));
    CHECK(res.out[0] == doctest::Approx(o).epsilon(1e-14));
}

TEST_CASE("Lstm forward rows are independent and match single-sample unrolls") {
    LSTMConfig cfg;
    cfg.input = 2;
    cfg.hidden = 4;
    cfg.head_hidden = 3;
    cfg.output = 2;
    const Lstm net(cfg);
    std::vector<double> params(static_cast<std::size_t>(net.n_params()));
    fill_random(params, 51, 0.4);

    const int steps = 3, batch = 3;
    std::vector<Mat> xs(steps, Mat(batch, 2));
    for (int t = 0; t < steps; ++t) fill_random(xs[static_cast<std::size_t>(t)], 60 + static_cast<std::uint64_t>(t));

    LstmCache cache;
    std::vector<Mat> outs;
    net.forward(xs, params, cache, outs);

    for (int b = 0; b < batch; ++b) {
        std::vector<std::vector<double>> seq;
        for (int t = 0; t < steps; ++t)
            seq.push_back({xs[static_cast<std::size_t>(t)].at(b, 0), xs[static_cast<std::size_t>(t)].at(b, 1)});
        const auto single = lstm_unroll(cfg, params, seq);
        for (int t = 0; t < steps; ++t)
            for (int o = 0; o < 2; ++o)
                CHECK(outs[static_cast<std::size_t>(t)].at(b, o) ==
                      doctest::Approx(single[static_cast<std::size_t>(t)][static_cast<std::size_t>(o)]).epsilon(1e-13));
    }
}

TEST_CASE("Lstm outputs are causal") {
    LSTMConfig cfg;
    cfg.input = 2;
    cfg.hidden = 4;
    cfg.head_hidden = 3;
    cfg.output = 1;
    const Lstm net(cfg);
    std::vector<double> params(static_cast<std::size_t>(net.n_params()));
    fill_random(params, 71, 0.4);

    std::vector<Mat> xs(4, Mat(2, 2));
    for (int t = 0; t < 4; ++t) fill_random(xs[static_cast<std::size_t>(t)], 80 + static_cast<std::uint64_t>(t));

    LstmCache c1;
    std::vector<Mat> base;
    net.forward(xs, params, c1, base);

    std::vector<Mat> bumped = xs;
    bumped[3].at(0, 0) += 1.0;
    LstmCache c2;
    std::vector<Mat> after;
    net.forward(bumped, params, c2, after);

    for (int t = 0; t < 3; ++t) CHECK(bits_equal(after[static_cast<std::size_t>(t)].a, base[static_cast<std::size_t>(t)].a));
    CHECK(after[3].at(0, 0) != base[3].at(0, 0));
}

TEST_CASE("Lstm backward matches central finite differences") {
    LSTMConfig cfg;
    cfg.input = 2;
    cfg.hidden = 3;
    cfg.head_hidden = 2;
    cfg.output = 1;
    const Lstm net(cfg);

    std::vector<double> params(static_cast<std::size_t>(net.n_params()));
    fill_random(params, 91, 0.5);
    const int steps = 3, batch = 2;
    std::vector<Mat> xs(steps, Mat(batch, 2));
    std::vector<Mat> cs(steps, Mat(batch, 1));
    for (int t = 0; t < steps; ++t) {
        fill_random(xs[static_cast<std::size_t>(t)], 100 + static_cast<std::uint64_t>(t));
        fill_random(cs[static_cast<std::size_t>(t)], 110 + static_cast<std::uint64_t>(t));
    }

    LstmCache cache;
    std::vector<Mat> outs;
    net.forward(xs, params, cache, outs);
    std::vector<double> grad(params.size(), 0.0);
    std::vector<Mat> dXs;
    net.backward(xs, cs, params, cache, grad, &dXs);

    const double h = 1e-6;
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::vector<double> p = params;
        p[i] += h;
        const double up = lstm_loss(net, xs, p, cs);
        p[i] -= 2.0 * h;
        const double dn = lstm_loss(net, xs, p, cs);
        const double fd = (up - dn) / (2.0 * h);
        CAPTURE(i);
        CHECK(std::abs(grad[i] - fd) <= 1e-4 * (1.0 + std::abs(fd)));
    }
    REQUIRE(static_cast<int>(dXs.size()) == steps);
    for (int t = 0; t < steps; ++t) {
        for (int b = 0; b < batch; ++b) {
            for (int j = 0; j < 2; ++j) {
                std::vector<Mat> xp = xs;
                xp[static_cast<std::size_t>(t)].at(b, j) += h;
                const double up = lstm_loss(net, xp, params, cs);
                xp[static_cast<std::size_t>(t)].at(b, j) -= 2.0 * h;
                const double dn = lstm_loss(net, xp, params, cs);
                const double fd = (up - dn) / (2.0 * h);
                CHECK(std::abs(dXs[static_cast<std::size_t>(t)].at(b, j) - fd) <= 1e-4 * (1.0 + std::abs(fd)));
            }
        }
    }
}

TEST_CASE("optimizer_step sgd hand check") {
    std::vector<double> params = {1.0, 2.0};
    const std::vector<double> grad = {0.5, -1.0};
    OptimizerState state;
    OptimizerConfig cfg;
    cfg.method = OptimizerConfig::Method::sgd;
    cfg.lr = 0.1;
    optimizer_step(params, grad, state, cfg);
    CHECK(params[0] == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(params[1] == doctest::Approx(2.1).epsilon(1e-15));
    CHECK(state.step == 1);
    optimizer_step(params, grad, state, cfg);
    CHECK(params[0] == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(state.step == 2);
}

TEST_CASE("optimizer_step adam against the reference recursion") {
    std::vector<double> params = {0.5};
    OptimizerState state;
    OptimizerConfig cfg;
    cfg.method = OptimizerConfig::Method::adam;
    cfg.lr = 0.01;

    const std::vector<double> grads = {0.3, -0.8, 0.1};
    double ref = 0.5, m = 0.0, v = 0.0;
    for (std::size_t t = 0; t < grads.size(); ++t) {
        optimizer_step(params, {grads[t]}, state, cfg);
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grads[t];
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grads[t] * grads[t];
        const double mhat = m / (1.0 - std::pow(cfg.beta1, static_cast<double>(t) + 1));
        const double vhat = v / (1.0 - std::pow(cfg.beta2, static_cast<double>(t) + 1));
        ref -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        CHECK(params[0] == doctest::Approx(ref).epsilon(1e-14));
    }
    CHECK(state.step == 3);
}

TEST_CASE("optimizer_step rejects non-finite gradients and bad shapes") {
    std::vector<double> params = {1.0, 1.0};
    OptimizerState state;
    OptimizerConfig cfg;

    CHECK_THROWS_AS(optimizer_step(params, {1.0, std::nan("")}, state, cfg), numeric_error);
    CHECK_THROWS_AS(optimizer_step(params, {1.0, std::numeric_limits<double>::infinity()}, state, cfg), numeric_error);
    CHECK_THROWS_AS(optimizer_step(params, {1.0}, state, cfg), std::invalid_argument);
    CHECK(state.step == 0); // failed steps do not advance the counter
    CHECK(params == std::vector<double>{1.0, 1.0});
}

TEST_CASE("checkpoint round-trips bit-exactly") {
    Checkpoint ck;
    ck.arch = "ffn in=2 hidden=3 out=1 act=relu";
    ck.seed = 123456789012345ull;
    ck.input_spec = "signature depth=2 transform=lead_lag";
    ck.values = {1.0, -0.0, 1e-308, -3.25, 0.1 + 0.2, 1e308};

    const auto path = tmp_file("roundtrip.ckpt");
    save_checkpoint(path.string(), ck);
    const Checkpoint back = load_checkpoint(path.string());
    CHECK(back.arch == ck.arch);
    CHECK(back.seed == ck.seed);
    CHECK(back.input_spec == ck.input_spec);
    CHECK(bits_equal(back.values, ck.values)); // -0.0 must stay -0.0

    // Saving twice produces byte-identical files.
    const auto path2 = tmp_file("roundtrip2.ckpt");
    save_checkpoint(path2.string(), ck);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    const std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("checkpoint loading rejects corruption") {
    Checkpoint ck;
    ck.arch = "ffn in=1 hidden=2 out=1 act=relu";
    ck.input_spec = "coarse";
    ck.values = {0.25, -1.5, 3.0};
    const auto path = tmp_file("corrupt.ckpt");
    save_checkpoint(path.string(), ck);

    std::ifstream in(path, std::ios::binary);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    auto write_blob = [&](const std::string& data) {
        std::ofstream out(path, std::ios::binary);
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
    };

    // Flip one payload byte: hash check fires.
    std::string flipped = blob;
    flipped[flipped.size() - 5] = static_cast<char>(flipped[flipped.size() - 5] ^ 0x40);
    write_blob(flipped);
    CHECK_THROWS_AS(load_checkpoint(path.string()), config_error);

    // Truncate the payload: size check fires.
    write_blob(blob.substr(0, blob.size() - 8));
    CHECK_THROWS_AS(load_checkpoint(path.string()), config_error);

    // Damage the magic line.
    std::string bad_magic = blob;
    bad_magic[0] = 'q';
    write_blob(bad_magic);
    CHECK_THROWS_AS(load_checkpoint(path.string()), config_error);

    // Remove the separator entirely.
    write_blob(blob.substr(0, blob.find("\n---\n")));
    CHECK_THROWS_AS(load_checkpoint(path.string()), config_error);

    CHECK_THROWS_AS(load_checkpoint((tmp_file("missing.ckpt")).string() + ".nope"), config_error);
}

TEST_CASE("trained-style parameters survive a save/load cycle") {
    ArchDescriptor arch;
    arch.kind = ArchDescriptor::Kind::lstm;
    arch.lstm.input = 3;
    arch.lstm.hidden = 5;
    arch.lstm.head_hidden = 4;
    arch.lstm.output = 1;
    const NetworkParams p = make_network_params(arch, 33);

    Checkpoint ck;
    ck.arch = arch.to_string();
    ck.seed = 33;
    ck.input_spec = "signature depth=2 transform=time_augment";
    ck.values = p.values;
    const auto path = tmp_file("net.ckpt");
    save_checkpoint(path.string(), ck);

    const Checkpoint back = load_checkpoint(path.string());
    const ArchDescriptor parsed = ArchDescriptor::parse(back.arch);
    CHECK(parsed.n_params() == static_cast<int>(back.values.size()));
    CHECK(bits_equal(back.values, p.values));
}
