#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

#include "tefl/errors.hpp"

namespace tefl {

// Dense row-major matrix of doubles. Small and explicit on purpose: every
// model in this codebase is a handful of these, and all gradients are written
// by hand against this layout.
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw InvalidInput("Mat: negative dimension");
    }
    Mat(int r, int c, std::initializer_list<double> init) : Mat(r, c) {
        if (static_cast<int>(init.size()) != r * c)
            throw InvalidInput("Mat: initializer size mismatch");
        std::size_t i = 0;
        for (double x : init) v[i++] = x;
    }

    double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double operator()(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }

    double* row_ptr(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }
    const double* row_ptr(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }

    std::size_t size() const { return v.size(); }

    bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }

    bool all_finite() const {
        for (double x : v)
            if (!std::isfinite(x)) return false;
        return true;
    }
};

inline Mat transpose(const Mat& a) {
    Mat r(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) r(j, i) = a(i, j);
    return r;
}

// r += a * b with accumulation into an existing buffer of shape (a.rows, b.cols).
inline void matmul_acc(const Mat& a, const Mat& b, Mat& r) {
    if (a.cols != b.rows || r.rows != a.rows || r.cols != b.cols)
        throw InvalidInput("matmul_acc: shape mismatch");
    for (int i = 0; i < a.rows; ++i) {
        const double* arow = a.row_ptr(i);
        double* rrow = r.row_ptr(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (int j = 0; j < b.cols; ++j) rrow[j] += aik * brow[j];
        }
    }
}

inline Mat matmul(const Mat& a, const Mat& b) {
    Mat r(a.rows, b.cols);
    matmul_acc(a, b, r);
    return r;
}

inline void check_finite(const Mat& a, const char* what) {
    if (!a.all_finite()) throw NonFiniteError(std::string(what) + ": non-finite entry");
}

}  // namespace tefl
