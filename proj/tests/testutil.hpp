#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "tefl/forecaster.hpp"
#include "tefl/mat.hpp"
#include "tefl/rng.hpp"

namespace testutil {

// Central finite differences for a scalar function of a vector, the reference
// every analytic gradient in the codebase is checked against.
inline std::vector<double> fd_grad(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> x, double h = 1e-6) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f(x);
        x[i] = keep - h;
        const double dn = f(x);
        x[i] = keep;
        g[i] = (up - dn) / (2.0 * h);
    }
    return g;
}

inline double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

inline double rel_err(const std::vector<double>& got,
                      const std::vector<double>& want) {
    double diff = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) {
        const double d = got[i] - want[i];
        diff += d * d;
    }
    const double denom = std::max(l2(want), 1e-12);
    return std::sqrt(diff) / denom;
}

// Finite-difference check of accumulated parameter gradients. `loss` must
// evaluate the full objective with the model's current parameters; `chunks`
// exposes those parameters and the analytic gradients already accumulated
// for exactly that objective.
inline double param_grad_rel_err(tefl::ParamChunks chunks,
                                 const std::function<double()>& loss,
                                 double h = 1e-6) {
    std::vector<double> analytic, fd;
    for (std::size_t c = 0; c < chunks.ptrs.size(); ++c) {
        double* p = chunks.ptrs[c].first;
        const double* g = chunks.ptrs[c].second;
        for (std::size_t i = 0; i < chunks.sizes[c]; ++i) {
            analytic.push_back(g[i]);
            const double keep = p[i];
            p[i] = keep + h;
            const double up = loss();
            p[i] = keep - h;
            const double dn = loss();
            p[i] = keep;
            fd.push_back((up - dn) / (2.0 * h));
        }
    }
    return rel_err(analytic, fd);
}

inline std::vector<double> gaussian_vec(std::size_t n, tefl::RngState& rng,
                                        double scale = 1.0) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.normal();
    return v;
}

inline tefl::Mat gaussian_mat(int rows, int cols, tefl::RngState& rng,
                              double scale = 1.0) {
    tefl::Mat m(rows, cols);
    for (double& x : m.v) x = scale * rng.normal();
    return m;
}

}  // namespace testutil
