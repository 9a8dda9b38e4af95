#include "tefl/evaluate.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>

#include "tefl/errors.hpp"

namespace tefl {

namespace {

void append_number(std::string& out, double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    out.append(buf, ptr);
}

Mat concat_rows(const Mat& a, const Mat& b) {
    if (a.cols != b.cols) throw InvalidInput("concat: channel mismatch");
    Mat out(a.rows + b.rows, a.cols);
    std::memcpy(out.v.data(), a.v.data(), a.v.size() * sizeof(double));
    std::memcpy(out.v.data() + a.v.size(), b.v.data(), b.v.size() * sizeof(double));
    return out;
}

Mat window_of(const Mat& series, int t, int lookback) {
    if (t - lookback < 0 || t > series.rows)
        throw NotEnoughData("forecast window out of range at t=" + std::to_string(t));
    Mat x(lookback, series.cols);
    std::memcpy(x.v.data(), series.row_ptr(t - lookback),
                x.v.size() * sizeof(double));
    return x;
}

}  // namespace

Metrics compute_metrics(const std::vector<Mat>& preds,
                        const std::vector<Mat>& truths) {
    if (preds.size() != truths.size())
        throw InvalidInput("compute_metrics: list length mismatch");
    if (preds.empty()) throw InvalidInput("compute_metrics: no predictions");
    double se = 0.0, ae = 0.0;
    long long count = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (!preds[i].same_shape(truths[i]))
            throw InvalidInput("compute_metrics: shape mismatch at " + std::to_string(i));
        for (std::size_t j = 0; j < preds[i].v.size(); ++j) {
            const double d = preds[i].v[j] - truths[i].v[j];
            se += d * d;
            ae += std::abs(d);
            ++count;
        }
    }
    Metrics m;
    m.mse = se / count;
    m.mae = ae / count;
    m.n_anchors = static_cast<long long>(preds.size());
    if (!std::isfinite(m.mse) || !std::isfinite(m.mae))
        throw NonFiniteError("compute_metrics: non-finite result");
    return m;
}

Mat base_forecast_at(const Forecaster& model, const Mat& series, int t,
                     bool window_norm) {
    const Mat x = window_of(series, t, model.lookback());
    if (!window_norm) return model.forecast(x);
    const WindowStats st = window_stats(x);
    return window_denormalize(model.forecast(window_normalize(x, st)), st);
}

AnchorPrediction predict_at(const Forecaster& model, const Adapter* adapter,
                            const Mat& series, int t, PredictOptions opts,
                            PredictionLog& log) {
    const int L = model.lookback();
    const int H = model.horizon();
    const int d = series.cols;

    AnchorPrediction out;
    const Mat x_in = window_of(series, t, L);
    WindowStats st_in;
    Mat base_n;  // model-space output, only meaningful under window_norm
    if (opts.window_norm) {
        st_in = window_stats(x_in);
        base_n = model.forecast(window_normalize(x_in, st_in));
        out.base = window_denormalize(base_n, st_in);
    } else {
        out.base = model.forecast(x_in);
    }

    if (adapter == nullptr) {
        out.corrected = out.base;
        return out;
    }

    // The residual history is built from base forecasts; make sure every
    // issue time the strategy selects is present in the log.
    const int first_issue = t - H;
    const int last_issue =
        opts.strategy == SelectionStrategy::DelayedFullHorizon ? t - H : t - 1;
    for (int s = first_issue; s <= last_issue; ++s) {
        if (log.horizon != 0 && log.has(s)) continue;
        log.record(s, base_forecast_at(model, series, s, opts.window_norm));
    }

    Mat eps = select_residuals(log, series, t, opts.strategy);  // d x H, raw

    if (opts.window_norm) {
        // The adapter works in the current window's scale: errors shrink by
        // the window deviation, and the correction is inflated on the way out.
        for (int c = 0; c < d; ++c)
            for (int h = 0; h < H; ++h) eps(c, h) /= st_in.stddev[c];
        const Mat corr = adapter->forward(eps, transpose(base_n));
        out.corrected = window_denormalize(transpose(corr), st_in);
    } else {
        const Mat corr = adapter->forward(eps, transpose(out.base));
        out.corrected = transpose(corr);
    }
    return out;
}

RollingResult rolling_evaluate(const Forecaster& model, const Adapter* adapter,
                               const TimeSeriesTable& context,
                               const TimeSeriesTable& test, PredictOptions opts,
                               const std::string& dump_path) {
    const int L = model.lookback();
    const int H = model.horizon();
    if (context.channels() != test.channels())
        throw InvalidInput("rolling: channel mismatch between context and test");
    if (context.length() < L + H)
        throw NotEnoughData("rolling: context must supply lookback+horizon rows");
    if (test.length() < H) throw NotEnoughData("rolling: test split shorter than horizon");

    const Mat full = concat_rows(context.values, test.values);
    const int n_ctx = context.length();
    const int d = full.cols;

    PredictionLog log;
    log.horizon = H;

    std::string dump;
    if (!dump_path.empty()) dump = "t,channel,step,truth,base_pred,corrected_pred\n";

    double se_b = 0.0, ae_b = 0.0, se_c = 0.0, ae_c = 0.0;
    long long n_elems = 0, n_anchors = 0;
    for (int t = n_ctx; t + H <= full.rows; ++t) {
        AnchorPrediction p = predict_at(model, adapter, full, t, opts, log);
        // The base forecast at the anchor also serves later anchors'
        // residual selection.
        if (!log.has(t)) log.record(t, p.base);
        for (int h = 0; h < H; ++h)
            for (int c = 0; c < d; ++c) {
                const double truth = full(t + h, c);
                const double db = p.base(h, c) - truth;
                const double dc = p.corrected(h, c) - truth;
                se_b += db * db;
                ae_b += std::abs(db);
                se_c += dc * dc;
                ae_c += std::abs(dc);
                ++n_elems;
                if (!dump_path.empty()) {
                    dump += std::to_string(t - n_ctx);
                    dump += ',';
                    dump += std::to_string(c);
                    dump += ',';
                    dump += std::to_string(h);
                    dump += ',';
                    append_number(dump, truth);
                    dump += ',';
                    append_number(dump, p.base(h, c));
                    dump += ',';
                    append_number(dump, p.corrected(h, c));
                    dump += '\n';
                }
            }
        ++n_anchors;
    }
    if (n_anchors == 0) throw NotEnoughData("rolling: no full-horizon anchors fit");

    RollingResult r;
    r.base.mse = se_b / n_elems;
    r.base.mae = ae_b / n_elems;
    r.base.n_anchors = n_anchors;
    r.corrected.mse = se_c / n_elems;
    r.corrected.mae = ae_c / n_elems;
    r.corrected.n_anchors = n_anchors;
    if (!std::isfinite(r.corrected.mse) || !std::isfinite(r.base.mse))
        throw NonFiniteError("rolling: non-finite metrics");

    if (!dump_path.empty()) {
        std::ofstream f(dump_path, std::ios::binary);
        if (!f) throw IoError("cannot write '" + dump_path + "'");
        f << dump;
        if (!f) throw IoError("write failed for '" + dump_path + "'");
    }
    return r;
}

AuditResult causality_audit(const AnchorPredictor& predictor, const Mat& series,
                            const std::vector<int>& probes, double sentinel) {
    AuditResult res;
    for (int t : probes) {
        if (t < 0 || t > series.rows)
            throw InvalidInput("audit: probe out of range");
        const Mat clean = predictor(series, t);
        Mat poisoned = series;
        for (int r = t; r < poisoned.rows; ++r)
            for (int c = 0; c < poisoned.cols; ++c) poisoned(r, c) = sentinel;
        const Mat dirty = predictor(poisoned, t);
        if (!clean.same_shape(dirty)) {
            res.passed = false;
            res.first_bad_anchor = t;
            res.detail = "forecast shape changed under poisoning";
            return res;
        }
        for (std::size_t i = 0; i < clean.v.size(); ++i) {
            // Bitwise comparison: even a rounding-level leak of future data
            // is a violation.
            if (std::memcmp(&clean.v[i], &dirty.v[i], sizeof(double)) != 0) {
                res.passed = false;
                res.first_bad_anchor = t;
                res.detail = "forecast differs at flat index " + std::to_string(i);
                return res;
            }
        }
    }
    return res;
}

AnchorPredictor make_corrected_predictor(const Forecaster& model,
                                         const Adapter* adapter,
                                         PredictOptions opts) {
    // Capture by value: the audit predictor is self-contained and rebuilds
    // its forecast history per call.
    Forecaster m = model;
    std::optional<Adapter> a;
    if (adapter) a = *adapter;
    return [m, a, opts](const Mat& series, int t) {
        PredictionLog log;
        log.horizon = m.horizon();
        return predict_at(m, a ? &*a : nullptr, series, t, opts, log).corrected;
    };
}

}  // namespace tefl
