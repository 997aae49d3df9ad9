#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ppde/matrix.hpp"

namespace ppde {

// Layer widths of the feed-forward price/hedge network. Hidden layers use the
// rectifier; the final layer is affine.
struct FFNConfig {
    int input = 1;
    std::vector<int> hidden = {100, 100, 100, 100};
    int output = 1;

    void validate() const;
};

// Recurrent network: standard gated cell, an affine readout y_t of the hidden
// state (width = hidden), then a two-layer rectifier head per step.
struct LSTMConfig {
    int input = 1;
    int hidden = 128;
    int head_hidden = 100;
    int output = 1;

    void validate() const;
};

// Self-describing architecture tag. The textual form is what checkpoints
// carry, so to_string/parse must round-trip exactly.
struct ArchDescriptor {
    enum class Kind { ffn, lstm };
    Kind kind = Kind::ffn;
    FFNConfig ffn;
    LSTMConfig lstm;

    std::string to_string() const;
    static ArchDescriptor parse(const std::string& text);
    int n_params() const;
};

// Flat parameter vector plus a parallel gradient accumulator. The layout is
// fixed by the architecture alone; see the layout helpers in nets.cpp.
struct NetworkParams {
    ArchDescriptor arch;
    std::vector<double> values;
    std::vector<double> grad;
    std::uint64_t init_seed = 0;

    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

// Sized and initialized parameters: weights uniform in
// [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero, gradients zero.
NetworkParams make_network_params(const ArchDescriptor& arch, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Batched feed-forward network.

struct FfnCache {
    // Post-rectifier activations of the hidden layers, acts[l] for layer l+1's
    // input (l = 0..L-2). The raw input is passed to backward separately.
    std::vector<Mat> acts;
};

class Ffn {
public:
    explicit Ffn(FFNConfig cfg);

    const FFNConfig& config() const { return cfg_; }
    int n_params() const { return total_params_; }

    // X is [batch x input]; fills out as [batch x output].
    void forward(const Mat& X, std::span<const double> params, FfnCache& cache, Mat& out) const;

    // Accumulates into grad (not zeroed here); optionally fills dX.
    void backward(const Mat& X, const Mat& dOut, std::span<const double> params,
                  const FfnCache& cache, std::span<double> grad, Mat* dX = nullptr) const;

private:
    FFNConfig cfg_;
    std::vector<int> sizes_;  // input, hidden..., output
    std::vector<int> w_off_, b_off_;
    int total_params_ = 0;

    friend NetworkParams make_network_params(const ArchDescriptor&, std::uint64_t);
};

// ---------------------------------------------------------------------------
// Batched recurrent network, unrolled over a fixed number of steps.

struct LstmCache {
    int steps = 0;
    int batch = 0;
    // Per step t: post-activation gates, cell, tanh(cell), hidden, readout,
    // head hidden activation. All [batch x width] for the step.
    std::vector<Mat> gi, gf, gg, go, c, tc, h, y, u;
    Mat a4h;  // preactivation scratch, transient within a step
};

class Lstm {
public:
    explicit Lstm(LSTMConfig cfg);

    const LSTMConfig& config() const { return cfg_; }
    int n_params() const { return total_params_; }

    // Unrolls from the zero state over xs[t] [batch x input], t = 0..K; fills
    // outs[t] [batch x output]. Output t depends only on inputs 0..t.
    void forward(const std::vector<Mat>& xs, std::span<const double> params, LstmCache& cache,
                 std::vector<Mat>& outs) const;

    void backward(const std::vector<Mat>& xs, const std::vector<Mat>& dOuts,
                  std::span<const double> params, const LstmCache& cache, std::span<double> grad,
                  std::vector<Mat>* dXs = nullptr) const;

    // One cell step from an explicit previous state (null = zero state); fills
    // cache slot t and the head output. forward() folds this from t = 0.
    void step(const Mat& X, const Mat* h_prev, const Mat* c_prev, std::span<const double> params,
              LstmCache& cache, int t, Mat& out) const;

private:
    LSTMConfig cfg_;
    // Offsets into the flat parameter vector, in storage order.
    int wx_ = 0, bx_ = 0, wh_ = 0, bh_ = 0, why_ = 0, bhy_ = 0;
    int w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
    int total_params_ = 0;

    friend NetworkParams make_network_params(const ArchDescriptor&, std::uint64_t);
};

// ---------------------------------------------------------------------------
// Single-sample entry points (thin wrappers over the batched classes).

std::vector<double> ffn_forward(const FFNConfig& cfg, std::span<const double> params,
                                std::span<const double> x);

struct LstmStepResult {
    std::vector<double> out;
    std::vector<double> h;
    std::vector<double> c;
};

LstmStepResult lstm_step(const LSTMConfig& cfg, std::span<const double> params,
                         std::span<const double> x, std::span<const double> h_prev,
                         std::span<const double> c_prev);

std::vector<std::vector<double>> lstm_unroll(const LSTMConfig& cfg, std::span<const double> params,
                                             const std::vector<std::vector<double>>& xs);

// ---------------------------------------------------------------------------
// Optimizer.

struct OptimizerConfig {
    enum class Method { sgd, adam };
    Method method = Method::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    long step = 0;
    std::vector<double> m;  // first moment (adam only)
    std::vector<double> v;  // second moment (adam only)
};

// In-place update. Throws numeric_error on a non-finite gradient entry.
void optimizer_step(std::vector<double>& params, const std::vector<double>& grad,
                    OptimizerState& state, const OptimizerConfig& cfg);

// ---------------------------------------------------------------------------
// Checkpoints: text header plus little-endian 64-bit float payload.

struct Checkpoint {
    std::string arch;        // ArchDescriptor::to_string()
    std::uint64_t seed = 0;
    std::string input_spec;  // encoding descriptor the net was trained with
    std::vector<double> values;
};

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

} // namespace ppde
