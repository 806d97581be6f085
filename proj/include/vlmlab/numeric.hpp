#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "vlmlab/errors.hpp"

namespace vlmlab {

// Dense row-major matrix. Row-major storage is the single convention used
// across the repo. Two element types are supported: double for every check,
// oracle and the reference training path, float where a caller wants the
// smaller footprint.
template <typename T>
struct MatrixT {
    int rows = 0;
    int cols = 0;
    std::vector<T> data;

    MatrixT() = default;
    MatrixT(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * static_cast<size_t>(c), T(0)) {}

    T& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    const T& at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }

    T* row_ptr(int r) { return data.data() + static_cast<size_t>(r) * cols; }
    const T* row_ptr(int r) const { return data.data() + static_cast<size_t>(r) * cols; }

    std::vector<T> row(int r) const {
        return std::vector<T>(row_ptr(r), row_ptr(r) + cols);
    }

    void set_row(int r, const std::vector<T>& v) {
        std::copy(v.begin(), v.end(), row_ptr(r));
    }

    bool same_shape(const MatrixT& o) const { return rows == o.rows && cols == o.cols; }

    bool operator==(const MatrixT& o) const {
        return rows == o.rows && cols == o.cols && data == o.data;
    }
};

using Mat = MatrixT<double>;
using MatF = MatrixT<float>;
using Vec = std::vector<double>;

namespace detail {
inline std::string shape_str(int r, int c) {
    return std::to_string(r) + "x" + std::to_string(c);
}
}  // namespace detail

template <typename T>
MatrixT<T> identity(int n) {
    MatrixT<T> m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = T(1);
    return m;
}

template <typename T>
bool all_finite(const MatrixT<T>& m) {
    for (T x : m.data)
        if (!std::isfinite(x)) return false;
    return true;
}

template <typename T>
bool all_finite(const std::vector<T>& v) {
    for (T x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// C = A * B, standard product.
template <typename T>
MatrixT<T> matmul(const MatrixT<T>& a, const MatrixT<T>& b) {
    if (a.cols != b.rows)
        throw ShapeError("matmul: " + detail::shape_str(a.rows, a.cols) + " * " +
                         detail::shape_str(b.rows, b.cols));
    MatrixT<T> c(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        const T* arow = a.row_ptr(i);
        T* crow = c.row_ptr(i);
        for (int k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            if (aik == T(0)) continue;
            const T* brow = b.row_ptr(k);
            for (int j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// C = A * B^T. Avoids materializing transposes in gradient code.
template <typename T>
MatrixT<T> matmul_abt(const MatrixT<T>& a, const MatrixT<T>& b) {
    if (a.cols != b.cols)
        throw ShapeError("matmul_abt: " + detail::shape_str(a.rows, a.cols) + " * " +
                         detail::shape_str(b.cols, b.rows));
    MatrixT<T> c(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        const T* arow = a.row_ptr(i);
        for (int j = 0; j < b.rows; ++j) {
            const T* brow = b.row_ptr(j);
            T s = T(0);
            for (int k = 0; k < a.cols; ++k) s += arow[k] * brow[k];
            c.at(i, j) = s;
        }
    }
    return c;
}

// C = A^T * B.
template <typename T>
MatrixT<T> matmul_atb(const MatrixT<T>& a, const MatrixT<T>& b) {
    if (a.rows != b.rows)
        throw ShapeError("matmul_atb: " + detail::shape_str(a.cols, a.rows) + " * " +
                         detail::shape_str(b.rows, b.cols));
    MatrixT<T> c(a.cols, b.cols);
    for (int k = 0; k < a.rows; ++k) {
        const T* arow = a.row_ptr(k);
        const T* brow = b.row_ptr(k);
        for (int i = 0; i < a.cols; ++i) {
            const T aki = arow[i];
            if (aki == T(0)) continue;
            T* crow = c.row_ptr(i);
            for (int j = 0; j < b.cols; ++j) crow[j] += aki * brow[j];
        }
    }
    return c;
}

// Numerically stable softmax over one vector (max subtraction).
template <typename T>
std::vector<T> softmax_row(const std::vector<T>& v) {
    if (v.empty()) throw ShapeError("softmax_row: empty vector");
    if (!all_finite(v)) throw DegenerateInputError("softmax_row: non-finite input");
    const T mx = *std::max_element(v.begin(), v.end());
    std::vector<T> out(v.size());
    T sum = T(0);
    for (size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - mx);
        sum += out[i];
    }
    for (T& x : out) x /= sum;
    return out;
}

template <typename T>
T dot(const std::vector<T>& u, const std::vector<T>& v) {
    if (u.size() != v.size())
        throw ShapeError("dot: length " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
    T s = T(0);
    for (size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

template <typename T>
T norm(const std::vector<T>& v) {
    return std::sqrt(dot(v, v));
}

// Cosine similarity, clamped to [-1, 1] against rounding.
template <typename T>
T cosine(const std::vector<T>& u, const std::vector<T>& v) {
    if (u.size() != v.size())
        throw ShapeError("cosine: length " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
    if (!all_finite(u) || !all_finite(v))
        throw DegenerateInputError("cosine: non-finite input");
    const T nu = norm(u);
    const T nv = norm(v);
    if (nu == T(0) || nv == T(0))
        throw DegenerateInputError("cosine: zero-norm input");
    return std::clamp(dot(u, v) / (nu * nv), T(-1), T(1));
}

inline double mean(const Vec& v) {
    if (v.empty()) throw ShapeError("mean: empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Population variance (divide by n).
inline double variance(const Vec& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

}  // namespace vlmlab
