#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "tefl/mat.hpp"

namespace tefl {

// Parameter/gradient chunk list handed to the optimizer. Chunk order is fixed
// per model and is also the checkpoint serialization order.
struct ParamChunks {
    std::vector<std::pair<double*, const double*>> ptrs;
    std::vector<std::size_t> sizes;

    std::size_t total() const {
        std::size_t n = 0;
        for (std::size_t s : sizes) n += s;
        return n;
    }
};

// Channel-independent linear map from a lookback window to a horizon:
// yhat[h][c] = sum_l W[l][h] * x[l][c] + b[h]. Every channel shares the
// same weights.
struct LinearForecaster {
    int lookback = 0;
    int horizon = 0;
    Mat W;   // L x H
    Mat b;   // 1 x H
    Mat gW;  // gradient accumulators, same shapes
    Mat gb;

    LinearForecaster() = default;
    LinearForecaster(int L, int H)
        : lookback(L), horizon(H), W(L, H), b(1, H), gW(L, H), gb(1, H) {}

    Mat forecast(const Mat& x) const;  // (L x d) -> (H x d)

    // Accumulates dLoss/dparams given dLoss/dyhat; forward state is
    // recomputed, so calls are independent.
    void backprop(const Mat& x, const Mat& grad_out);

    void zero_grad();
    ParamChunks chunks();
};

// One-hidden-layer ReLU network applied per channel:
// yhat_c = W2' * relu(W1' * x_c + b1) + b2. The ReLU subgradient at zero
// is taken as zero.
struct MlpForecaster {
    int lookback = 0;
    int horizon = 0;
    int hidden = 0;
    Mat W1;  // L x hidden
    Mat b1;  // 1 x hidden
    Mat W2;  // hidden x H
    Mat b2;  // 1 x H
    Mat gW1, gb1, gW2, gb2;

    MlpForecaster() = default;
    MlpForecaster(int L, int H, int h)
        : lookback(L), horizon(H), hidden(h), W1(L, h), b1(1, h), W2(h, H),
          b2(1, H), gW1(L, h), gb1(1, h), gW2(h, H), gb2(1, H) {}

    Mat forecast(const Mat& x) const;
    void backprop(const Mat& x, const Mat& grad_out);
    void zero_grad();
    ParamChunks chunks();
};

// Value-semantic wrapper so training and evaluation code is agnostic to the
// base model family.
struct Forecaster {
    std::variant<LinearForecaster, MlpForecaster> model;

    int lookback() const;
    int horizon() const;
    Mat forecast(const Mat& x) const;
    void backprop(const Mat& x, const Mat& grad_out);
    void zero_grad();
    ParamChunks chunks();
    std::size_t n_params() const;

    // Gaussian initialization scaled by fan-in, all biases zero.
    void init(std::uint64_t seed);
};

Forecaster make_linear_forecaster(int lookback, int horizon);
Forecaster make_mlp_forecaster(int lookback, int horizon, int hidden);

// Per-window, per-channel z-score statistics over a window's rows.
struct WindowStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // floored like dataset normalization
};

WindowStats window_stats(const Mat& x);
Mat window_normalize(const Mat& x, const WindowStats& s);
Mat window_denormalize(const Mat& y, const WindowStats& s);

}  // namespace tefl
