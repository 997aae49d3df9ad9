#include "ppde/encoding.hpp"

#include <stdexcept>

#include "ppde/errors.hpp"

namespace ppde {

EncodingKind parse_encoding(const std::string& name) {
    if (name == "coarse_path") return EncodingKind::coarse_path;
    if (name == "sig_stream") return EncodingKind::sig_stream;
    throw config_error("encoding: unknown kind '" + name + "' (expected coarse_path or sig_stream)");
}

std::string encoding_name(EncodingKind k) {
    return k == EncodingKind::coarse_path ? "coarse_path" : "sig_stream";
}

void EncodingSpec::validate() const {
    if (kind == EncodingKind::sig_stream && depth < 1)
        throw config_error("encoding: signature depth must be >= 1");
}

int feature_block_width(const EncodingSpec& spec, int d) {
    spec.validate();
    if (spec.kind == EncodingKind::coarse_path) return d;
    return sig_dim(transformed_dim(spec.transform, d), spec.depth);
}

int lstm_input_width(const EncodingSpec& spec, int d) {
    return 1 + feature_block_width(spec, d) + 1;
}

int ffn_input_width(const EncodingSpec& spec, int d, int n_coarse) {
    const int block = feature_block_width(spec, d);
    const int blocks = spec.kind == EncodingKind::coarse_path ? n_coarse + 1 : n_coarse;
    return 1 + blocks * block + 1;
}

std::string input_spec_string(const EncodingSpec& spec, int d, int n_coarse) {
    if (spec.kind == EncodingKind::coarse_path) {
        return "coarse_path d=" + std::to_string(d) + " steps=" + std::to_string(n_coarse + 1) +
               " beta_dim=1";
    }
    return "sig_stream d=" + std::to_string(d) + " depth=" + std::to_string(spec.depth) +
           " transform=" + transform_name(spec.transform) + " windows=" + std::to_string(n_coarse) +
           " beta_dim=1";
}

BatchFeatures encode_batch(const PathBatch& pb, const EncodingSpec& spec) {
    spec.validate();
    BatchFeatures f;
    f.spec = spec;
    f.d = pb.d;
    f.n_coarse = pb.grid.n_coarse();
    f.block = feature_block_width(spec, pb.d);
    f.beta = pb.beta;
    f.coarse_times.resize(f.n_coarse + 1);
    for (int k = 0; k <= f.n_coarse; ++k) f.coarse_times[k] = pb.grid.coarse_time(k);

    if (spec.kind == EncodingKind::coarse_path) {
        f.raw = restrict_to_coarse(pb);
        return f;
    }

    const int nf = pb.grid.n_fine();
    f.raw = Mat(pb.batch, f.n_coarse * f.block);
    Mat fine_path(nf + 1, pb.d);
    SigWorkspace ws;
    for (int b = 0; b < pb.batch; ++b) {
        std::copy(pb.paths.row(b), pb.paths.row(b) + static_cast<std::size_t>(nf + 1) * pb.d,
                  fine_path.a.begin());
        for (int w = 0; w < f.n_coarse; ++w) {
            window_signature(fine_path, pb.grid, w, spec.depth, spec.transform, ws,
                             {f.raw.row(b) + static_cast<std::size_t>(w) * f.block,
                              static_cast<std::size_t>(f.block)});
        }
    }

    f.frozen = Mat(f.n_coarse, f.block);
    Mat zero_path(nf + 1, pb.d, 0.0);
    for (int w = 0; w < f.n_coarse; ++w) {
        window_signature(zero_path, pb.grid, w, spec.depth, spec.transform, ws,
                         {f.frozen.row(w), static_cast<std::size_t>(f.block)});
    }
    return f;
}

void lstm_inputs(const BatchFeatures& f, std::vector<Mat>& xs) {
    const int B = f.raw.rows;
    const int in_w = 1 + f.block + 1;
    const bool sig = f.spec.kind == EncodingKind::sig_stream;
    xs.resize(f.n_coarse + 1);
    for (int k = 0; k <= f.n_coarse; ++k) {
        Mat& X = xs[k];
        ensure_shape(X, B, in_w);
        for (int b = 0; b < B; ++b) {
            double* row = X.row(b);
            row[0] = f.coarse_times[k];
            if (sig) {
                if (k == 0) {
                    row[1] = 1.0;  // trivial signature: nothing observed yet
                } else {
                    const double* src = f.raw.row(b) + static_cast<std::size_t>(k - 1) * f.block;
                    std::copy(src, src + f.block, row + 1);
                }
            } else {
                const double* src = f.raw.row(b) + static_cast<std::size_t>(k) * f.d;
                std::copy(src, src + f.d, row + 1);
            }
            row[1 + f.block] = f.beta[b];
        }
    }
}

void ffn_stopped_input(const BatchFeatures& f, int k, Mat& X) {
    if (k < 0 || k > f.n_coarse)
        throw std::out_of_range("ffn_stopped_input: coarse index out of range");
    const int B = f.raw.rows;
    const bool sig = f.spec.kind == EncodingKind::sig_stream;
    const int blocks = sig ? f.n_coarse : f.n_coarse + 1;
    const int in_w = 1 + blocks * f.block + 1;
    ensure_shape(X, B, in_w);
    for (int b = 0; b < B; ++b) {
        double* row = X.row(b);
        row[0] = f.coarse_times[k];
        double* dst = row + 1;
        if (sig) {
            for (int w = 0; w < f.n_coarse; ++w, dst += f.block) {
                const double* src = w < k ? f.raw.row(b) + static_cast<std::size_t>(w) * f.block
                                          : f.frozen.row(w);
                std::copy(src, src + f.block, dst);
            }
        } else {
            for (int j = 0; j <= f.n_coarse; ++j, dst += f.d) {
                const int at = j <= k ? j : k;  // values after t_k frozen at x_{t_k}
                const double* src = f.raw.row(b) + static_cast<std::size_t>(at) * f.d;
                std::copy(src, src + f.d, dst);
            }
        }
        row[in_w - 1] = f.beta[b];
    }
}

} // namespace ppde
