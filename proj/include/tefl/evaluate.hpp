#pragma once

#include <functional>
#include <optional>
#include <string>

#include "tefl/adapter.hpp"
#include "tefl/dataset.hpp"
#include "tefl/forecaster.hpp"
#include "tefl/residual_select.hpp"

namespace tefl {

struct Metrics {
    double mse = 0.0;
    double mae = 0.0;
    long long n_anchors = 0;
};

// Averages over every (anchor, step, channel) element of the paired lists.
Metrics compute_metrics(const std::vector<Mat>& preds,
                        const std::vector<Mat>& truths);

struct PredictOptions {
    SelectionStrategy strategy = SelectionStrategy::DelayedFullHorizon;
    bool window_norm = false;
};

// Base forecast at anchor t over a full series (rows = time): the model reads
// rows [t-L, t-1], optionally through per-window normalization, and the
// result is always in the series' own scale.
Mat base_forecast_at(const Forecaster& model, const Mat& series, int t,
                     bool window_norm);

struct AnchorPrediction {
    Mat base;       // H x d
    Mat corrected;  // H x d; equals base when no adapter is given
};

// Corrected forecast at anchor t. Past base forecasts are read from (and on
// demand added to) `log`, so a rolling caller computes each forecast once.
// Only rows < t of `series` are ever touched.
AnchorPrediction predict_at(const Forecaster& model, const Adapter* adapter,
                            const Mat& series, int t, PredictOptions opts,
                            PredictionLog& log);

struct RollingResult {
    Metrics base;
    Metrics corrected;
};

// Strided-by-one evaluation over the test table. The context table supplies
// at least lookback+horizon rows preceding the test rows so the very first
// anchor has a fully observed residual history. When `dump_path` is nonempty
// a per-anchor CSV (t, channel, step, truth, base_pred, corrected_pred) is
// written, with t indexed from the start of the test split.
RollingResult rolling_evaluate(const Forecaster& model, const Adapter* adapter,
                               const TimeSeriesTable& context,
                               const TimeSeriesTable& test, PredictOptions opts,
                               const std::string& dump_path = "");

// A prediction routine under audit: full series in, anchor in, forecast out.
using AnchorPredictor = std::function<Mat(const Mat& series, int t)>;

struct AuditResult {
    bool passed = true;
    int first_bad_anchor = -1;
    std::string detail;
};

// Proves a predictor reads nothing at or after its anchor: every probe is
// recomputed with rows >= t overwritten by a sentinel, and the two forecasts
// must match bit for bit.
AuditResult causality_audit(const AnchorPredictor& predictor, const Mat& series,
                            const std::vector<int>& probes,
                            double sentinel = 1e9);

// The deployed prediction path bundled for auditing: fresh log per call,
// residual history rebuilt from scratch.
AnchorPredictor make_corrected_predictor(const Forecaster& model,
                                         const Adapter* adapter,
                                         PredictOptions opts);

}  // namespace tefl
