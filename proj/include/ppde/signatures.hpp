#pragma once

#include <span>
#include <string>
#include <vector>

#include "ppde/matrix.hpp"
#include "ppde/time_grid.hpp"

namespace ppde {

// Truncated signature of a d-dimensional path up to tensor level n, stored
// flattened: level-major, lexicographic multi-index within a level (a level-k
// multi-index (i_1..i_k) sits at offset(k) + sum_t i_t d^{k-1-t}). Level 0 is
// the constant 1.
struct TruncatedSignature {
    int d = 0;
    int n = 0;
    std::vector<double> coeffs;

    double level0() const { return coeffs[0]; }
};

// Flattened size: sum_{k=0}^{n} d^k.
int sig_dim(int d, int n);

// Offset of level k within the flattened vector.
int sig_level_offset(int d, int k);

TruncatedSignature trivial_signature(int d, int n);

// Signature of a straight segment with the given increment: level k is
// increment^{(tensor) k} / k!.
TruncatedSignature tensor_exp(std::span<const double> increment, int n);

// Chen's identity: level k of the result is sum_j level_j(a) (x) level_{k-j}(b).
TruncatedSignature chen_concatenate(const TruncatedSignature& a, const TruncatedSignature& b);

// Signature of the piecewise-linear interpolation of a point stream
// (points is [m x d], m >= 1; a single point gives the trivial signature).
TruncatedSignature signature_of_segment(const Mat& points, int n);

// Lead-lag interleaving: m points in R^d become 2m-1 points in R^{2d}; the
// lead block (first d coordinates) advances one step ahead of the lag block.
Mat lead_lag(const Mat& stream);

// Prepend the time stamp as coordinate 0 of every point.
Mat time_augment(const Mat& stream, std::span<const double> times);

enum class PathTransform { none, lead_lag, time_augment, time_augment_lead_lag };

PathTransform parse_transform(const std::string& name);
std::string transform_name(PathTransform t);

// Dimension of the transformed stream that signatures are taken of.
int transformed_dim(PathTransform t, int d);

// Per-coarse-window signatures of a fine path. Entry k covers [t_k, t_{k+1}]
// of the coarse grid, both window endpoints included (adjacent windows share
// the boundary sample, which is what makes Chen chain-consistency exact).
struct SignatureStream {
    TimeGrid grid;
    int d_in = 0;     // channels of the untransformed path
    int d_sig = 0;    // channels after the transform
    int depth = 0;
    PathTransform transform = PathTransform::none;
    Mat entries;      // [N_c x sig_dim(d_sig, depth)]
};

// fine_path is [N_f+1 x d] row-major.
SignatureStream stream_of_signatures(const Mat& fine_path, const TimeGrid& grid, int n, PathTransform transform);

// Stream stopped at coarse index m: entries k >= m become the signature of a
// constant-valued path on the window (trivial unless the transform carries a
// time coordinate). Entries k < m are untouched.
SignatureStream stopped_stream(const SignatureStream& stream, int t_m);

// Reusable buffers for the batched encoder; avoids reallocating per window.
struct SigWorkspace {
    Mat window;        // raw window points
    Mat transformed;   // after lead-lag / time augmentation
    std::vector<double> acc;
    std::vector<double> seg;
    std::vector<double> tmp;
};

// Signature of one transformed window written straight into `out`
// (length sig_dim(d_sig, n)). Core kernel shared by stream_of_signatures and
// the batched training encoder.
void window_signature(const Mat& fine_path, const TimeGrid& grid, int window_k, int n, PathTransform transform,
                      SigWorkspace& ws, std::span<double> out);

} // namespace ppde
