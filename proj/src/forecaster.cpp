#include "tefl/forecaster.hpp"

#include <cmath>

#include "tefl/dataset.hpp"
#include "tefl/rng.hpp"

namespace tefl {

namespace {

void fill_gaussian(Mat& m, RngState& rng, double scale) {
    for (double& x : m.v) x = scale * rng.normal();
}

void add_chunk(ParamChunks& c, Mat& p, const Mat& g) {
    c.ptrs.emplace_back(p.v.data(), g.v.data());
    c.sizes.push_back(p.size());
}

}  // namespace

Mat LinearForecaster::forecast(const Mat& x) const {
    if (x.rows != lookback) throw InvalidInput("linear forecast: window rows != lookback");
    Mat out(horizon, x.cols);
    for (int h = 0; h < horizon; ++h)
        for (int c = 0; c < x.cols; ++c) out(h, c) = b(0, h);
    for (int l = 0; l < lookback; ++l) {
        const double* xrow = x.row_ptr(l);
        const double* wrow = W.row_ptr(l);
        for (int h = 0; h < horizon; ++h) {
            const double w = wrow[h];
            if (w == 0.0) continue;
            double* orow = out.row_ptr(h);
            for (int c = 0; c < x.cols; ++c) orow[c] += w * xrow[c];
        }
    }
    return out;
}

void LinearForecaster::backprop(const Mat& x, const Mat& grad_out) {
    if (x.rows != lookback || grad_out.rows != horizon || grad_out.cols != x.cols)
        throw InvalidInput("linear backprop: shape mismatch");
    // dL/dW[l][h] = sum_c x[l][c] * g[h][c]; dL/db[h] = sum_c g[h][c].
    for (int h = 0; h < horizon; ++h) {
        const double* grow = grad_out.row_ptr(h);
        double gsum = 0.0;
        for (int c = 0; c < grad_out.cols; ++c) gsum += grow[c];
        gb(0, h) += gsum;
    }
    for (int l = 0; l < lookback; ++l) {
        const double* xrow = x.row_ptr(l);
        double* gwrow = gW.row_ptr(l);
        for (int h = 0; h < horizon; ++h) {
            const double* grow = grad_out.row_ptr(h);
            double acc = 0.0;
            for (int c = 0; c < grad_out.cols; ++c) acc += xrow[c] * grow[c];
            gwrow[h] += acc;
        }
    }
}

void LinearForecaster::zero_grad() {
    gW.fill(0.0);
    gb.fill(0.0);
}

ParamChunks LinearForecaster::chunks() {
    ParamChunks c;
    add_chunk(c, W, gW);
    add_chunk(c, b, gb);
    return c;
}

Mat MlpForecaster::forecast(const Mat& x) const {
    if (x.rows != lookback) throw InvalidInput("mlp forecast: window rows != lookback");
    const int d = x.cols;
    Mat out(horizon, d);
    std::vector<double> u(hidden);
    for (int c = 0; c < d; ++c) {
        for (int j = 0; j < hidden; ++j) u[j] = b1(0, j);
        for (int l = 0; l < lookback; ++l) {
            const double xv = x(l, c);
            if (xv == 0.0) continue;
            const double* wrow = W1.row_ptr(l);
            for (int j = 0; j < hidden; ++j) u[j] += xv * wrow[j];
        }
        for (int h = 0; h < horizon; ++h) out(h, c) = b2(0, h);
        for (int j = 0; j < hidden; ++j) {
            const double a = u[j] > 0.0 ? u[j] : 0.0;
            if (a == 0.0) continue;
            const double* wrow = W2.row_ptr(j);
            for (int h = 0; h < horizon; ++h) out(h, c) += a * wrow[h];
        }
    }
    return out;
}

void MlpForecaster::backprop(const Mat& x, const Mat& grad_out) {
    if (x.rows != lookback || grad_out.rows != horizon || grad_out.cols != x.cols)
        throw InvalidInput("mlp backprop: shape mismatch");
    const int d = x.cols;
    std::vector<double> u(hidden), da(hidden);
    for (int c = 0; c < d; ++c) {
        for (int j = 0; j < hidden; ++j) u[j] = b1(0, j);
        for (int l = 0; l < lookback; ++l) {
            const double xv = x(l, c);
            if (xv == 0.0) continue;
            const double* wrow = W1.row_ptr(l);
            for (int j = 0; j < hidden; ++j) u[j] += xv * wrow[j];
        }
        // Output layer: dL/dW2[j][h] += a_j * g[h], dL/db2[h] += g[h],
        // da_j = sum_h W2[j][h] * g[h].
        for (int h = 0; h < horizon; ++h) gb2(0, h) += grad_out(h, c);
        for (int j = 0; j < hidden; ++j) {
            const double a = u[j] > 0.0 ? u[j] : 0.0;
            const double* wrow = W2.row_ptr(j);
            double* gwrow = gW2.row_ptr(j);
            double acc = 0.0;
            for (int h = 0; h < horizon; ++h) {
                const double g = grad_out(h, c);
                if (a != 0.0) gwrow[h] += a * g;
                acc += wrow[h] * g;
            }
            da[j] = acc;
        }
        // Hidden layer through the ReLU gate (zero at u <= 0).
        for (int j = 0; j < hidden; ++j) {
            const double du = u[j] > 0.0 ? da[j] : 0.0;
            da[j] = du;
            gb1(0, j) += du;
        }
        for (int l = 0; l < lookback; ++l) {
            const double xv = x(l, c);
            if (xv == 0.0) continue;
            double* gwrow = gW1.row_ptr(l);
            for (int j = 0; j < hidden; ++j) gwrow[j] += xv * da[j];
        }
    }
}

void MlpForecaster::zero_grad() {
    gW1.fill(0.0);
    gb1.fill(0.0);
    gW2.fill(0.0);
    gb2.fill(0.0);
}

ParamChunks MlpForecaster::chunks() {
    ParamChunks c;
    add_chunk(c, W1, gW1);
    add_chunk(c, b1, gb1);
    add_chunk(c, W2, gW2);
    add_chunk(c, b2, gb2);
    return c;
}

int Forecaster::lookback() const {
    return std::visit([](const auto& m) { return m.lookback; }, model);
}

int Forecaster::horizon() const {
    return std::visit([](const auto& m) { return m.horizon; }, model);
}

Mat Forecaster::forecast(const Mat& x) const {
    return std::visit([&](const auto& m) { return m.forecast(x); }, model);
}

void Forecaster::backprop(const Mat& x, const Mat& grad_out) {
    std::visit([&](auto& m) { m.backprop(x, grad_out); }, model);
}

void Forecaster::zero_grad() {
    std::visit([](auto& m) { m.zero_grad(); }, model);
}

ParamChunks Forecaster::chunks() {
    return std::visit([](auto& m) { return m.chunks(); }, model);
}

std::size_t Forecaster::n_params() const {
    return std::visit([](const auto& m) {
        return const_cast<std::remove_const_t<std::remove_reference_t<decltype(m)>>&>(m)
            .chunks()
            .total();
    }, model);
}

void Forecaster::init(std::uint64_t seed) {
    RngState rng(seed);
    if (auto* lin = std::get_if<LinearForecaster>(&model)) {
        fill_gaussian(lin->W, rng, 1.0 / std::sqrt(static_cast<double>(lin->lookback)));
        lin->b.fill(0.0);
    } else {
        auto& m = std::get<MlpForecaster>(model);
        fill_gaussian(m.W1, rng, 1.0 / std::sqrt(static_cast<double>(m.lookback)));
        m.b1.fill(0.0);
        fill_gaussian(m.W2, rng, 1.0 / std::sqrt(static_cast<double>(m.hidden)));
        m.b2.fill(0.0);
    }
}

Forecaster make_linear_forecaster(int lookback, int horizon) {
    if (lookback < 1 || horizon < 1)
        throw InvalidInput("forecaster: lookback and horizon must be positive");
    return Forecaster{LinearForecaster(lookback, horizon)};
}

Forecaster make_mlp_forecaster(int lookback, int horizon, int hidden) {
    if (lookback < 1 || horizon < 1 || hidden < 1)
        throw InvalidInput("forecaster: dimensions must be positive");
    return Forecaster{MlpForecaster(lookback, horizon, hidden)};
}

WindowStats window_stats(const Mat& x) {
    if (x.rows < 1) throw InvalidInput("window_stats: empty window");
    WindowStats s;
    s.mean.assign(x.cols, 0.0);
    s.stddev.assign(x.cols, 0.0);
    for (int c = 0; c < x.cols; ++c) {
        double sum = 0.0;
        for (int r = 0; r < x.rows; ++r) sum += x(r, c);
        const double mean = sum / x.rows;
        double ss = 0.0;
        for (int r = 0; r < x.rows; ++r) {
            const double d = x(r, c) - mean;
            ss += d * d;
        }
        s.mean[c] = mean;
        s.stddev[c] = std::max(std::sqrt(ss / x.rows), kStdFloor);
    }
    return s;
}

Mat window_normalize(const Mat& x, const WindowStats& s) {
    if (static_cast<int>(s.mean.size()) != x.cols)
        throw InvalidInput("window_normalize: channel mismatch");
    Mat out(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r)
        for (int c = 0; c < x.cols; ++c)
            out(r, c) = (x(r, c) - s.mean[c]) / s.stddev[c];
    return out;
}

Mat window_denormalize(const Mat& y, const WindowStats& s) {
    if (static_cast<int>(s.mean.size()) != y.cols)
        throw InvalidInput("window_denormalize: channel mismatch");
    Mat out(y.rows, y.cols);
    for (int r = 0; r < y.rows; ++r)
        for (int c = 0; c < y.cols; ++c)
            out(r, c) = y(r, c) * s.stddev[c] + s.mean[c];
    return out;
}

}  // namespace tefl
