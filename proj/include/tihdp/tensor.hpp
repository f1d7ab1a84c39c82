#pragma once

#include <cstddef>
#include <vector>

namespace tihdp {

// Dense row-major matrix; column vectors have cols == 1. All learnable state
// is held in doubles whose values are exactly representable as 32-bit floats
// (enforced at init and after every optimizer step), so checkpoints written
// as f32 round-trip bit-exactly.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int r, int c = 0) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c = 0) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    int size() const { return rows * cols; }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

// Round to the nearest f32-representable value.
inline double f32_exact(double x) { return static_cast<double>(static_cast<float>(x)); }

// y = W x + b
inline void gemv(const Tensor& W, const double* x, const double* b, double* y) {
    for (int r = 0; r < W.rows; ++r) {
        const double* row = &W.v[static_cast<std::size_t>(r) * W.cols];
        double acc = b ? b[r] : 0.0;
        for (int c = 0; c < W.cols; ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
}

// dx += W^T dy
inline void gemv_transpose_acc(const Tensor& W, const double* dy, double* dx) {
    for (int r = 0; r < W.rows; ++r) {
        const double* row = &W.v[static_cast<std::size_t>(r) * W.cols];
        double g = dy[r];
        for (int c = 0; c < W.cols; ++c) dx[c] += row[c] * g;
    }
}

// dW += dy x^T
inline void outer_acc(Tensor& dW, const double* dy, const double* x) {
    for (int r = 0; r < dW.rows; ++r) {
        double* row = &dW.v[static_cast<std::size_t>(r) * dW.cols];
        double g = dy[r];
        for (int c = 0; c < dW.cols; ++c) row[c] += g * x[c];
    }
}

}  // namespace tihdp
