#pragma once

#include <cstdint>
#include <variant>

#include "tefl/forecaster.hpp"
#include "tefl/mat.hpp"

namespace tefl {

// Adapters consume a d x H matrix of past forecast errors (row = channel,
// col = error slot) together with the d x H base prediction and emit the
// corrected d x H prediction. Gradients flow to the adapter parameters, to
// the errors, and to the base prediction.
struct AdapterGrads {
    Mat d_eps;   // d x H
    Mat d_yhat;  // d x H
};

// Rank-r additive correction: yhat' = relu(eps * W1) * W2 + yhat, applied per
// channel row. W2 starts at zero, so a fresh adapter is an exact identity on
// the base prediction. Parameter count 2*H*r stays below the H*H of a dense
// map whenever r < H/2.
struct LowRankAdapter {
    int horizon = 0;
    int rank = 0;
    Mat W1;  // H x r
    Mat W2;  // r x H
    Mat gW1, gW2;

    LowRankAdapter() = default;
    LowRankAdapter(int H, int r)
        : horizon(H), rank(r), W1(H, r), W2(r, H), gW1(H, r), gW2(r, H) {}

    Mat forward(const Mat& eps, const Mat& yhat) const;
    AdapterGrads backprop(const Mat& eps, const Mat& yhat, const Mat& grad_out);
    void zero_grad();
    ParamChunks chunks();
};

// Additive correction scaled by a learned confidence: per channel row,
// yhat' = yhat + sigmoid(gate(eps)) * corr(eps) with corr: H -> r -> H (ReLU)
// and gate: H -> r -> 1. The correction's output layer starts at zero, so a
// fresh adapter is an identity.
struct GateAdapter {
    int horizon = 0;
    int rank = 0;
    Mat V1;  // H x r   correction hidden
    Mat c1;  // 1 x r
    Mat V2;  // r x H   correction out
    Mat c2;  // 1 x H
    Mat G1;  // H x r   gate hidden
    Mat d1;  // 1 x r
    Mat g2;  // r x 1   gate out
    Mat d0;  // 1 x 1
    Mat gV1, gc1, gV2, gc2, gG1, gd1, gg2, gd0;

    GateAdapter() = default;
    GateAdapter(int H, int r)
        : horizon(H), rank(r), V1(H, r), c1(1, r), V2(r, H), c2(1, H),
          G1(H, r), d1(1, r), g2(r, 1), d0(1, 1), gV1(H, r), gc1(1, r),
          gV2(r, H), gc2(1, H), gG1(H, r), gd1(1, r), gg2(r, 1), gd0(1, 1) {}

    Mat forward(const Mat& eps, const Mat& yhat) const;
    AdapterGrads backprop(const Mat& eps, const Mat& yhat, const Mat& grad_out);
    void zero_grad();
    ParamChunks chunks();
};

// Non-additive merge: both inputs are projected to a shared r-dimensional
// space, combined, and re-expanded, so the base prediction passes through a
// learned full Jacobian instead of an identity:
// yhat' = relu(eps * We + yhat * Wp + bh) * Wo + bo.
struct FuseAdapter {
    int horizon = 0;
    int rank = 0;
    Mat We;  // H x r
    Mat Wp;  // H x r
    Mat bh;  // 1 x r
    Mat Wo;  // r x H
    Mat bo;  // 1 x H
    Mat gWe, gWp, gbh, gWo, gbo;

    FuseAdapter() = default;
    FuseAdapter(int H, int r)
        : horizon(H), rank(r), We(H, r), Wp(H, r), bh(1, r), Wo(r, H),
          bo(1, H), gWe(H, r), gWp(H, r), gbh(1, r), gWo(r, H), gbo(1, H) {}

    Mat forward(const Mat& eps, const Mat& yhat) const;
    AdapterGrads backprop(const Mat& eps, const Mat& yhat, const Mat& grad_out);
    void zero_grad();
    ParamChunks chunks();
};

enum class AdapterKind { LowRank, Gate, Fuse };

struct Adapter {
    std::variant<LowRankAdapter, GateAdapter, FuseAdapter> impl;

    AdapterKind kind() const;
    int horizon() const;
    int rank() const;
    Mat forward(const Mat& eps, const Mat& yhat) const;
    AdapterGrads backprop(const Mat& eps, const Mat& yhat, const Mat& grad_out);
    void zero_grad();
    ParamChunks chunks();
    std::size_t n_params() const;

    // Hidden layers get fan-in-scaled Gaussian weights; output projections of
    // the additive adapters stay zero so training starts from the identity.
    void init(std::uint64_t seed);
};

Adapter make_adapter(AdapterKind kind, int horizon, int rank);

}  // namespace tefl
