#pragma once

#include <string>
#include <vector>

#include "ppde/market_models.hpp"
#include "ppde/matrix.hpp"
#include "ppde/signatures.hpp"

namespace ppde {

// The two network input encodings: the coarse path itself, or the stream of
// per-window signatures of the fine path.
enum class EncodingKind { coarse_path, sig_stream };

EncodingKind parse_encoding(const std::string& name);
std::string encoding_name(EncodingKind k);

struct EncodingSpec {
    EncodingKind kind = EncodingKind::coarse_path;
    int depth = 4;
    PathTransform transform = PathTransform::lead_lag;

    void validate() const;
};

// Width of one feature block: d for the coarse path, the flattened signature
// size for signature streams.
int feature_block_width(const EncodingSpec& spec, int d);

// Full network input widths; both include the leading time coordinate and the
// trailing beta.
int lstm_input_width(const EncodingSpec& spec, int d);
int ffn_input_width(const EncodingSpec& spec, int d, int n_coarse);

// Text descriptor stored in checkpoints so pricing can refuse a checkpoint
// trained under a different encoding.
std::string input_spec_string(const EncodingSpec& spec, int d, int n_coarse);

// Raw per-batch features, computed once per simulated batch and then sliced
// into per-step network inputs.
struct BatchFeatures {
    EncodingSpec spec;
    int d = 0;
    int n_coarse = 0;
    int block = 0;
    // coarse_path: [batch x (N_c+1)*d]; sig_stream: [batch x N_c*block].
    Mat raw;
    // sig_stream only: [N_c x block] signatures of frozen (constant-value)
    // windows, path-independent because signatures only see increments.
    Mat frozen;
    std::vector<double> beta;
    std::vector<double> coarse_times;  // N_c+1 entries
};

BatchFeatures encode_batch(const PathBatch& pb, const EncodingSpec& spec);

// Recurrent inputs: xs[k] is [batch x lstm_input_width] for k = 0..N_c with
// layout (t_k, block_k, beta). block_k is x_{t_k} for the coarse encoding and
// the window [t_{k-1}, t_k] signature for streams (trivial at k = 0), so step
// k sees only information available at t_k.
void lstm_inputs(const BatchFeatures& f, std::vector<Mat>& xs);

// Feed-forward input stopped at coarse step k: layout (t_k, all blocks, beta)
// with coarse values after step k frozen at x_{t_k}, or windows at or after k
// replaced by their frozen-window signature.
void ffn_stopped_input(const BatchFeatures& f, int k, Mat& X);

} // namespace ppde
