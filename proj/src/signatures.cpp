#include "ppde/signatures.hpp"

#include <cstring>
#include <stdexcept>
#include <string>

#include "ppde/errors.hpp"

namespace ppde {

int sig_dim(int d, int n) {
    if (d < 1) throw std::invalid_argument("sig_dim: d must be >= 1, got " + std::to_string(d));
    if (n < 0) throw std::invalid_argument("sig_dim: n must be >= 0, got " + std::to_string(n));
    long long total = 0, pw = 1;
    for (int k = 0; k <= n; ++k) {
        total += pw;
        pw *= d;
        if (total > 10'000'000)
            throw std::invalid_argument("sig_dim: truncated tensor algebra too large (d=" + std::to_string(d) +
                                        ", n=" + std::to_string(n) + ")");
    }
    return static_cast<int>(total);
}

int sig_level_offset(int d, int k) {
    int off = 0, pw = 1;
    for (int l = 0; l < k; ++l) {
        off += pw;
        pw *= d;
    }
    return off;
}

TruncatedSignature trivial_signature(int d, int n) {
    TruncatedSignature s;
    s.d = d;
    s.n = n;
    s.coeffs.assign(sig_dim(d, n), 0.0);
    s.coeffs[0] = 1.0;
    return s;
}

namespace {

// out = tensor exponential of v, flattened. out must have sig_dim(d,n) slots.
void tensor_exp_into(std::span<const double> v, int d, int n, std::span<double> out) {
    out[0] = 1.0;
    int prev_off = 0, prev_sz = 1, off = 1;
    for (int k = 1; k <= n; ++k) {
        // level k = level (k-1) (x) v / k
        const double inv_k = 1.0 / static_cast<double>(k);
        for (int i = 0; i < prev_sz; ++i) {
            const double base = out[prev_off + i] * inv_k;
            double* dst = out.data() + off + static_cast<std::size_t>(i) * d;
            for (int j = 0; j < d; ++j) dst[j] = base * v[j];
        }
        prev_off = off;
        prev_sz *= d;
        off += prev_sz;
    }
}

// out = a (x) b by Chen's identity. All three flattened with the same (d,n).
void chen_into(std::span<const double> a, std::span<const double> b, int d, int n, std::span<double> out) {
    out[0] = a[0] * b[0];
    int off_k = 1, sz_k = d;
    for (int k = 1; k <= n; ++k) {
        double* dst = out.data() + off_k;
        // j = 0 term: level_0(a) * level_k(b)
        for (int i = 0; i < sz_k; ++i) dst[i] = a[0] * b[off_k + i];
        // 0 < j <= k: level_j(a) (x) level_{k-j}(b); concatenated index is
        // I * d^{k-j} + J for lexicographic flattening.
        int off_j = 1, sz_j = d;
        for (int j = 1; j <= k; ++j) {
            const int sz_r = sz_k / sz_j; // d^{k-j}
            const int off_r = sig_level_offset(d, k - j);
            const double* aj = a.data() + off_j;
            const double* br = b.data() + off_r;
            for (int i = 0; i < sz_j; ++i) {
                const double av = aj[i];
                if (av == 0.0) continue;
                double* drow = dst + static_cast<std::size_t>(i) * sz_r;
                for (int r = 0; r < sz_r; ++r) drow[r] += av * br[r];
            }
            off_j += sz_j;
            sz_j *= d;
        }
        off_k += sz_k;
        sz_k *= d;
    }
}

// Folds the signature of a piecewise-linear stream into ws buffers; result in acc.
void stream_signature_into(const Mat& points, int n, SigWorkspace& ws, std::span<double> out) {
    const int d = points.cols;
    const int dim = sig_dim(d, n);
    ws.acc.assign(dim, 0.0);
    ws.acc[0] = 1.0;
    ws.seg.resize(dim);
    ws.tmp.resize(dim);
    std::vector<double> inc(d);
    for (int i = 0; i + 1 < points.rows; ++i) {
        const double* p0 = points.row(i);
        const double* p1 = points.row(i + 1);
        bool zero = true;
        for (int j = 0; j < d; ++j) {
            inc[j] = p1[j] - p0[j];
            zero = zero && inc[j] == 0.0;
        }
        if (zero) continue; // exp(0) is the neutral element
        tensor_exp_into(inc, d, n, ws.seg);
        chen_into(ws.acc, ws.seg, d, n, ws.tmp);
        std::swap(ws.acc, ws.tmp);
    }
    std::memcpy(out.data(), ws.acc.data(), sizeof(double) * dim);
}

} // namespace

TruncatedSignature tensor_exp(std::span<const double> increment, int n) {
    const int d = static_cast<int>(increment.size());
    TruncatedSignature s;
    s.d = d;
    s.n = n;
    s.coeffs.assign(sig_dim(d, n), 0.0);
    tensor_exp_into(increment, d, n, s.coeffs);
    return s;
}

TruncatedSignature chen_concatenate(const TruncatedSignature& a, const TruncatedSignature& b) {
    if (a.d != b.d || a.n != b.n)
        throw std::invalid_argument("chen_concatenate: shape mismatch (d " + std::to_string(a.d) + " vs " +
                                    std::to_string(b.d) + ", n " + std::to_string(a.n) + " vs " + std::to_string(b.n) +
                                    ")");
    TruncatedSignature out;
    out.d = a.d;
    out.n = a.n;
    out.coeffs.assign(a.coeffs.size(), 0.0);
    chen_into(a.coeffs, b.coeffs, a.d, a.n, out.coeffs);
    return out;
}

TruncatedSignature signature_of_segment(const Mat& points, int n) {
    if (points.rows < 1) throw std::invalid_argument("signature_of_segment: empty point list");
    TruncatedSignature s;
    s.d = points.cols;
    s.n = n;
    s.coeffs.assign(sig_dim(points.cols, n), 0.0);
    SigWorkspace ws;
    stream_signature_into(points, n, ws, s.coeffs);
    return s;
}

Mat lead_lag(const Mat& stream) {
    if (stream.rows < 1) throw std::invalid_argument("lead_lag: empty stream");
    const int m = stream.rows, d = stream.cols;
    Mat out(2 * m - 1, 2 * d);
    for (int i = 0; i < m; ++i) {
        double* r = out.row(2 * i);
        for (int j = 0; j < d; ++j) {
            r[j] = stream.at(i, j);     // lead
            r[d + j] = stream.at(i, j); // lag
        }
        if (i + 1 < m) {
            double* h = out.row(2 * i + 1); // lead has advanced, lag has not
            for (int j = 0; j < d; ++j) {
                h[j] = stream.at(i + 1, j);
                h[d + j] = stream.at(i, j);
            }
        }
    }
    return out;
}

Mat time_augment(const Mat& stream, std::span<const double> times) {
    if (static_cast<std::size_t>(stream.rows) != times.size())
        throw std::invalid_argument("time_augment: stream/time length mismatch");
    Mat out(stream.rows, stream.cols + 1);
    for (int i = 0; i < stream.rows; ++i) {
        double* r = out.row(i);
        r[0] = times[i];
        for (int j = 0; j < stream.cols; ++j) r[1 + j] = stream.at(i, j);
    }
    return out;
}

PathTransform parse_transform(const std::string& name) {
    if (name == "none") return PathTransform::none;
    if (name == "lead_lag") return PathTransform::lead_lag;
    if (name == "time_augment") return PathTransform::time_augment;
    if (name == "time_augment_lead_lag") return PathTransform::time_augment_lead_lag;
    throw config_error("encoding.transform: unknown transform '" + name +
                       "' (expected none | lead_lag | time_augment | time_augment_lead_lag)");
}

std::string transform_name(PathTransform t) {
    switch (t) {
        case PathTransform::none: return "none";
        case PathTransform::lead_lag: return "lead_lag";
        case PathTransform::time_augment: return "time_augment";
        case PathTransform::time_augment_lead_lag: return "time_augment_lead_lag";
    }
    return "none";
}

int transformed_dim(PathTransform t, int d) {
    switch (t) {
        case PathTransform::none: return d;
        case PathTransform::lead_lag: return 2 * d;
        case PathTransform::time_augment: return d + 1;
        case PathTransform::time_augment_lead_lag: return 2 * (d + 1);
    }
    return d;
}

void window_signature(const Mat& fine_path, const TimeGrid& grid, int window_k, int n, PathTransform transform,
                      SigWorkspace& ws, std::span<double> out) {
    const int ratio = grid.ratio();
    const int d = fine_path.cols;
    const int j0 = window_k * ratio;
    const int m = ratio + 1;

    ws.window.rows = m;
    ws.window.cols = d;
    ws.window.a.resize(static_cast<std::size_t>(m) * d);
    for (int i = 0; i < m; ++i)
        std::memcpy(ws.window.row(i), fine_path.row(j0 + i), sizeof(double) * d);

    const Mat* pts = &ws.window;
    if (transform == PathTransform::time_augment || transform == PathTransform::time_augment_lead_lag) {
        std::span<const double> times(grid.fine_times().data() + j0, static_cast<std::size_t>(m));
        ws.transformed = time_augment(ws.window, times);
        pts = &ws.transformed;
    }
    if (transform == PathTransform::lead_lag || transform == PathTransform::time_augment_lead_lag) {
        ws.transformed = lead_lag(*pts);
        pts = &ws.transformed;
    }
    stream_signature_into(*pts, n, ws, out);
}

SignatureStream stream_of_signatures(const Mat& fine_path, const TimeGrid& grid, int n, PathTransform transform) {
    if (fine_path.rows != grid.n_fine() + 1)
        throw std::invalid_argument("stream_of_signatures: path has " + std::to_string(fine_path.rows) +
                                    " samples but the grid expects " + std::to_string(grid.n_fine() + 1));
    SignatureStream out;
    out.grid = grid;
    out.d_in = fine_path.cols;
    out.d_sig = transformed_dim(transform, fine_path.cols);
    out.depth = n;
    out.transform = transform;
    const int dim = sig_dim(out.d_sig, n);
    out.entries = Mat(grid.n_coarse(), dim);
    SigWorkspace ws;
    for (int k = 0; k < grid.n_coarse(); ++k)
        window_signature(fine_path, grid, k, n, transform, ws, out.entries.row_span(k));
    return out;
}

SignatureStream stopped_stream(const SignatureStream& stream, int t_m) {
    if (t_m < 0 || t_m > stream.grid.n_coarse())
        throw std::out_of_range("stopped_stream: coarse index " + std::to_string(t_m) + " out of range [0," +
                                std::to_string(stream.grid.n_coarse()) + "]");
    SignatureStream out = stream;
    if (t_m == stream.grid.n_coarse()) return out;
    // Frozen windows carry the signature of a constant-valued path. Signatures
    // see only increments, so this is the signature of the zero path on the
    // window's fine times: trivial unless the transform injects a time
    // coordinate, in which case the time increments survive.
    Mat zero_path(stream.grid.n_fine() + 1, stream.d_in, 0.0);
    SigWorkspace ws;
    for (int k = t_m; k < stream.grid.n_coarse(); ++k) {
        window_signature(zero_path, stream.grid, k, stream.depth, stream.transform, ws,
                         {out.entries.row(k), static_cast<std::size_t>(out.entries.cols)});
    }
    return out;
}

} // namespace ppde
