#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace dasmr::nn {

/// Dense row-major matrix of scalars. Network code instantiates T = float;
/// tests instantiate T = double to compare against finite differences without
/// single-precision noise. Finiteness is enforced at operation boundaries
/// (forward outputs, losses) via check_finite rather than per element-write.
template <typename T = float>
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, T(0)) {
        if (r < 0 || c < 0) throw std::invalid_argument("Tensor: negative shape");
    }

    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, T v) {
        Tensor t(r, c);
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }

    std::size_t size() const { return data.size(); }

    T& operator()(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    const T& operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }

    T* row(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
    const T* row(int r) const { return data.data() + static_cast<std::size_t>(r) * cols; }

    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    void check_finite(const char* what) const {
        for (const T& v : data)
            if (!std::isfinite(static_cast<double>(v)))
                throw std::runtime_error(std::string("non-finite value in ") + what);
    }
};

/// C = A * B with A [m,k] and B [k,n]. Plain ikj loops; the compiler
/// vectorizes the inner j loop.
template <typename T>
void matmul(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions differ");
    if (c.rows != a.rows || c.cols != b.cols) c = Tensor<T>(a.rows, b.cols);
    c.fill(T(0));
    for (int i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        T* crow = c.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            if (aik == T(0)) continue;
            const T* brow = b.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

/// C (+)= A^T * B with A [m,k] and B [m,n] giving C [k,n]. Used for weight
/// gradients dW = x^T * dy, accumulating when requested.
template <typename T>
void matmul_at_b(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c, bool accumulate = false) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_at_b: row counts differ");
    if (c.rows != a.cols || c.cols != b.cols) {
        c = Tensor<T>(a.cols, b.cols);
        accumulate = false;
    }
    if (!accumulate) c.fill(T(0));
    for (int i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        const T* brow = b.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            if (aik == T(0)) continue;
            T* crow = c.row(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
}

/// C = A * B^T with A [m,k] and B [n,k] giving C [m,n]. Used for input
/// gradients dx = dy * W^T.
template <typename T>
void matmul_a_bt(const Tensor<T>& a, const Tensor<T>& b, Tensor<T>& c) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_a_bt: inner dimensions differ");
    if (c.rows != a.rows || c.cols != b.rows) c = Tensor<T>(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        T* crow = c.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const T* brow = b.row(j);
            T acc = T(0);
            for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
            crow[j] = acc;
        }
    }
}

}  // namespace dasmr::nn
