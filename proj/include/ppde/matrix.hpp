#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace ppde {

// Dense row-major matrix of doubles. Deliberately minimal: the network and
// Monte Carlo code needs contiguous storage and a handful of BLAS-like
// kernels, nothing more.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, fill) {}

    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }
    double& at(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double at(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    std::span<double> row_span(int i) { return {row(i), static_cast<std::size_t>(cols)}; }
    std::span<const double> row_span(int i) const { return {row(i), static_cast<std::size_t>(cols)}; }
    void zero() { std::fill(a.begin(), a.end(), 0.0); }
};

// Non-owning views over row-major storage, used to address weight blocks
// inside a flat parameter vector with the same kernels as Mat.
struct MatView {
    double* data = nullptr;
    int rows = 0;
    int cols = 0;
    double* row(int i) const { return data + static_cast<std::size_t>(i) * cols; }
};

struct CMatView {
    const double* data = nullptr;
    int rows = 0;
    int cols = 0;
    CMatView() = default;
    CMatView(const double* d, int r, int c) : data(d), rows(r), cols(c) {}
    CMatView(const Mat& m) : data(m.a.data()), rows(m.rows), cols(m.cols) {}
    CMatView(const MatView& m) : data(m.data), rows(m.rows), cols(m.cols) {}
    const double* row(int i) const { return data + static_cast<std::size_t>(i) * cols; }
};

// C += A * B^T where A is [m x k], B is [n x k], C is [m x n].
// Weights are stored row-per-output so forward passes hit unit-stride rows.
template <class MA, class MB, class MC>
inline void matmul_abt_add(const MA& A, const MB& B, MC& C) {
    assert(A.cols == B.cols && A.rows == C.rows && B.rows == C.cols);
    const int m = A.rows, n = B.rows, k = A.cols;
    for (int i = 0; i < m; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int j = 0; j < n; ++j) {
            const double* bj = B.row(j);
            double s = 0.0;
            for (int t = 0; t < k; ++t) s += ai[t] * bj[t];
            ci[j] += s;
        }
    }
}

// C += A * B where A is [m x k], B is [k x n], C is [m x n].
template <class MA, class MB, class MC>
inline void matmul_ab_add(const MA& A, const MB& B, MC& C) {
    assert(A.cols == B.rows && A.rows == C.rows && B.cols == C.cols);
    const int m = A.rows, n = B.cols, k = A.cols;
    for (int i = 0; i < m; ++i) {
        const double* ai = A.row(i);
        double* ci = C.row(i);
        for (int t = 0; t < k; ++t) {
            const double av = ai[t];
            const double* bt = B.row(t);
            for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

// C += A^T * B where A is [k x m], B is [k x n], C is [m x n].
// Used for weight-gradient accumulation (dW += dY^T X).
template <class MA, class MB, class MC>
inline void matmul_atb_add(const MA& A, const MB& B, MC& C) {
    assert(A.rows == B.rows && A.cols == C.rows && B.cols == C.cols);
    const int k = A.rows, m = A.cols, n = B.cols;
    for (int t = 0; t < k; ++t) {
        const double* at = A.row(t);
        const double* bt = B.row(t);
        for (int i = 0; i < m; ++i) {
            const double av = at[i];
            double* ci = C.row(i);
            for (int j = 0; j < n; ++j) ci[j] += av * bt[j];
        }
    }
}

inline void add_row_vector(Mat& A, std::span<const double> v) {
    assert(static_cast<std::size_t>(A.cols) == v.size());
    for (int i = 0; i < A.rows; ++i) {
        double* ai = A.row(i);
        for (int j = 0; j < A.cols; ++j) ai[j] += v[j];
    }
}

// Resize m to [r x c] if needed and zero it either way. Reusable-buffer idiom
// for the training loop, which calls the same shapes thousands of times.
inline void ensure_shape(Mat& m, int r, int c) {
    if (m.rows != r || m.cols != c) {
        m.rows = r;
        m.cols = c;
        m.a.assign(static_cast<std::size_t>(r) * c, 0.0);
    } else {
        m.zero();
    }
}

// column sums of A accumulated into v (bias gradients).
inline void add_column_sums(const Mat& A, std::span<double> v) {
    assert(static_cast<std::size_t>(A.cols) == v.size());
    for (int i = 0; i < A.rows; ++i) {
        const double* ai = A.row(i);
        for (int j = 0; j < A.cols; ++j) v[j] += ai[j];
    }
}

} // namespace ppde
