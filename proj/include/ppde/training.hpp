#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ppde/encoding.hpp"
#include "ppde/market_models.hpp"
#include "ppde/nets.hpp"
#include "ppde/payoffs.hpp"

namespace ppde {

// One simulated batch with everything the losses need: the fine paths, the
// encoded features, coarse Brownian increments, per-step diffusion
// coefficients and the (discounted) terminal payoffs.
struct TrainBatch {
    PathBatch sim;
    BatchFeatures features;
    Mat dw_coarse;  // [batch x N_c*d_w]
    Mat sigma;      // [batch x N_c*(d*d_w)], sigma(t_m, X_{t_m}; beta) per coarse step
    std::vector<double> payoff;             // g per path
    std::vector<double> payoff_discounted;  // e^{-rT} g per path
    double rate = 0.0;
};

TrainBatch make_batch(const MarketModel& model, const TimeGrid& grid, int batch_size,
                      const EncodingSpec& encoding, const Payoff& payoff, std::uint64_t seed);

// A network evaluated at every coarse step of a batch. forward() must be
// called before backward(); the wrappers keep the assembled inputs and caches
// between the two calls. Test code injects oracles through this interface.
class SequenceModel {
public:
    virtual ~SequenceModel() = default;
    virtual int output_width() const = 0;
    // outs[k] is [batch x output_width] for k = 0..N_c.
    virtual void forward(const BatchFeatures& f, std::vector<Mat>& outs) = 0;
    // Per-step output gradients, accumulated into the wrapped parameters.
    virtual void backward(const std::vector<Mat>& dOuts) = 0;
};

class FfnSequenceModel final : public SequenceModel {
public:
    explicit FfnSequenceModel(NetworkParams& p);
    int output_width() const override { return net_.config().output; }
    void forward(const BatchFeatures& f, std::vector<Mat>& outs) override;
    void backward(const std::vector<Mat>& dOuts) override;

private:
    NetworkParams& p_;
    Ffn net_;
    std::vector<Mat> xs_;
    std::vector<FfnCache> caches_;
};

class LstmSequenceModel final : public SequenceModel {
public:
    explicit LstmSequenceModel(NetworkParams& p);
    int output_width() const override { return net_.config().output; }
    void forward(const BatchFeatures& f, std::vector<Mat>& outs) override;
    void backward(const std::vector<Mat>& dOuts) override;

private:
    NetworkParams& p_;
    Lstm net_;
    std::vector<Mat> xs_;
    LstmCache cache_;
};

// Dispatch on the architecture descriptor kind.
std::unique_ptr<SequenceModel> make_sequence_model(NetworkParams& p);

// Mean over the batch of sum_{k=0}^{N_c} (e^{-r(T-t_k)} g - R_theta(t_k))^2.
// with_grad additionally runs backward on theta.
double loss_orthogonal(const TrainBatch& tb, SequenceModel& theta, bool with_grad);

// Mean over the batch of (g - R_theta(t_N))^2 plus the squared one-step
// martingale defects E_{m+1} = e^{-r t_{m+1}} R_theta(t_{m+1})
// - e^{-r t_m} R_theta(t_m) - e^{-r t_m} R_phi(t_m) . sigma(t_m) dW_m.
double loss_martingale(const TrainBatch& tb, SequenceModel& theta, SequenceModel& phi,
                       bool with_grad);

enum class TrainMethod { orthogonal, martingale };

TrainMethod parse_method(const std::string& name);
std::string method_name(TrainMethod m);

struct NetworkConfig {
    enum class Type { ffn, lstm };
    Type type = Type::lstm;
    std::vector<int> ffn_hidden = {100, 100, 100, 100};
    int lstm_hidden = 128;
    int lstm_head = 100;
};

struct TrainingConfig {
    TrainMethod method = TrainMethod::martingale;
    int iterations = 3000;
    int batch_size = 200;
    int test_batch_size = 0;  // 0: same as batch_size
    int eval_every = 50;      // test-loss cadence
    OptimizerConfig optimizer;
};

struct LossRecord {
    int iteration;  // 1-based
    double train_loss;
    double test_loss;
    double wall_time_s;
};

struct TrainResult {
    NetworkParams theta;
    NetworkParams phi;  // populated for the martingale method only
    bool has_phi = false;
    std::vector<LossRecord> history;
    std::string input_spec;
};

// Online loop: a fresh batch per iteration, a fixed held-out test batch for
// the loss curve. Throws numeric_error with diagnostics on a non-finite loss.
TrainResult train(const MarketModel& model, const TimeGrid& grid, const Payoff& payoff,
                  const EncodingSpec& encoding, const NetworkConfig& net, const TrainingConfig& tc,
                  std::uint64_t seed);

} // namespace ppde
