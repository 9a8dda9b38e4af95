#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "tefl/errors.hpp"
#include "tefl/evaluate.hpp"
#include "tefl/ssm.hpp"
#include "testutil.hpp"

using namespace tefl;

namespace {

TimeSeriesTable constant_table(int T, int d, double value) {
    TimeSeriesTable t;
    t.values = Mat(T, d);
    t.values.fill(value);
    for (int c = 0; c < d; ++c) t.channel_names.push_back("ch" + std::to_string(c));
    return t;
}

}  // namespace

TEST_CASE("metric averages on hand-built differences") {
    std::vector<Mat> pred(3, Mat(4, 2)), truth(3, Mat(4, 2));
    for (auto& m : pred) m.fill(3.0);
    for (auto& m : truth) m.fill(1.0);
    Metrics m = compute_metrics(pred, truth);
    CHECK(m.mse == 4.0);
    CHECK(m.mae == 2.0);
    CHECK(m.n_anchors == 3);

    // Equal predictions: both metrics vanish.
    m = compute_metrics(truth, truth);
    CHECK(m.mse == 0.0);
    CHECK(m.mae == 0.0);

    // Differences of +1 and -1 in equal numbers.
    Mat p(2, 2), t(2, 2);
    t.fill(0.0);
    p(0, 0) = 1;
    p(0, 1) = -1;
    p(1, 0) = -1;
    p(1, 1) = 1;
    m = compute_metrics({p}, {t});
    CHECK(m.mse == 1.0);
    CHECK(m.mae == 1.0);
}

TEST_CASE("metric input validation") {
    std::vector<Mat> pred(2, Mat(4, 2)), truth(1, Mat(4, 2));
    CHECK_THROWS_AS(compute_metrics(pred, truth), InvalidInput);
    std::vector<Mat> bad(2, Mat(3, 2));
    CHECK_THROWS_AS(compute_metrics(pred, bad), InvalidInput);
    CHECK_THROWS_AS(compute_metrics({}, {}), InvalidInput);
}

TEST_CASE("no adapter: corrected metrics equal base metrics") {
    SsmSpec spec;
    TimeSeriesTable ctx = ssm_table(spec, 40, 50, 2, 7);
    TimeSeriesTable test = ssm_table(spec, 30, 50, 2, 8);
    Forecaster f = make_linear_forecaster(12, 8);
    f.init(3);
    RollingResult r = rolling_evaluate(f, nullptr, ctx, test, {});
    CHECK(r.base.mse == r.corrected.mse);
    CHECK(r.base.mae == r.corrected.mae);
    CHECK(r.base.n_anchors == r.corrected.n_anchors);
}

TEST_CASE("adapter with zero output projection is bit-identical to no adapter") {
    SsmSpec spec;
    TimeSeriesTable ctx = ssm_table(spec, 40, 50, 2, 17);
    TimeSeriesTable test = ssm_table(spec, 30, 50, 2, 18);
    Forecaster f = make_linear_forecaster(12, 8);
    f.init(5);
    Adapter g = make_adapter(AdapterKind::LowRank, 8, 3);
    g.init(11);  // hidden layer random, output projection zero

    for (bool wnorm : {false, true}) {
        PredictOptions opts;
        opts.window_norm = wnorm;
        const Mat full = concat_tables(ctx, test).values;
        for (int t : {20, 31, 45}) {
            PredictionLog log1, log2;
            log1.horizon = 8;
            log2.horizon = 8;
            const AnchorPrediction with = predict_at(f, &g, full, t, opts, log1);
            const AnchorPrediction without =
                predict_at(f, nullptr, full, t, opts, log2);
            for (std::size_t i = 0; i < with.corrected.v.size(); ++i)
                CHECK(with.corrected.v[i] == without.corrected.v[i]);
        }
        RollingResult with = rolling_evaluate(f, &g, ctx, test, opts);
        RollingResult without = rolling_evaluate(f, nullptr, ctx, test, opts);
        CHECK(with.corrected.mse == without.base.mse);
        CHECK(with.corrected.mae == without.base.mae);
    }
}

TEST_CASE("perfect model on constant data scores zero") {
    TimeSeriesTable ctx = constant_table(30, 2, 5.0);
    TimeSeriesTable test = constant_table(20, 2, 5.0);
    Forecaster f = make_linear_forecaster(10, 6);
    // Zero weights, bias pinned to the constant: every forecast is exact.
    auto& lin = std::get<LinearForecaster>(f.model);
    lin.W.fill(0.0);
    lin.b.fill(5.0);
    Adapter g = make_adapter(AdapterKind::LowRank, 6, 2);
    g.init(1);
    RollingResult r = rolling_evaluate(f, &g, ctx, test, {});
    CHECK(r.base.mse == 0.0);
    CHECK(r.base.mae == 0.0);
    // Errors are identically zero, so the correction is zero too.
    CHECK(r.corrected.mse == 0.0);
    CHECK(r.corrected.mae == 0.0);
}

TEST_CASE("rolling evaluation rejects a short context") {
    SsmSpec spec;
    TimeSeriesTable ctx = ssm_table(spec, 19, 50, 1, 3);  // needs L+H = 20
    TimeSeriesTable test = ssm_table(spec, 30, 50, 1, 4);
    Forecaster f = make_linear_forecaster(12, 8);
    f.init(3);
    CHECK_THROWS_AS(rolling_evaluate(f, nullptr, ctx, test, {}), NotEnoughData);
    TimeSeriesTable tiny = ssm_table(spec, 7, 50, 1, 5);  // shorter than H
    TimeSeriesTable ok = ssm_table(spec, 30, 50, 1, 6);
    CHECK_THROWS_AS(rolling_evaluate(f, nullptr, ok, tiny, {}), NotEnoughData);
}

TEST_CASE("per-anchor dump matches the rolling predictions") {
    SsmSpec spec;
    TimeSeriesTable ctx = ssm_table(spec, 25, 50, 2, 70);
    TimeSeriesTable test = ssm_table(spec, 14, 50, 2, 71);
    Forecaster f = make_linear_forecaster(9, 5);
    f.init(21);
    Adapter g = make_adapter(AdapterKind::LowRank, 5, 2);
    g.init(22);
    const std::string path = "eval_dump_test.csv";
    RollingResult r = rolling_evaluate(f, &g, ctx, test, {}, path);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,channel,step,truth,base_pred,corrected_pred");
    long long lines = 0;
    double se = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++lines;
        // corrected_pred is the last field; truth is the fourth.
        const auto last = line.rfind(',');
        const double corrected = std::stod(line.substr(last + 1));
        std::size_t at = 0;
        for (int skip = 0; skip < 3; ++skip) at = line.find(',', at) + 1;
        const double truth = std::stod(line.substr(at));
        se += (corrected - truth) * (corrected - truth);
    }
    // anchors * H * d rows
    CHECK(lines == r.base.n_anchors * 5 * 2);
    CHECK(se / static_cast<double>(lines) == doctest::Approx(r.corrected.mse).epsilon(1e-12));
    std::remove(path.c_str());
}

TEST_CASE("causality audit passes for the deployed predictor") {
    SsmSpec spec;
    TimeSeriesTable tbl = ssm_table(spec, 80, 50, 2, 33);
    Forecaster f = make_linear_forecaster(10, 6);
    f.init(9);
    Adapter g = make_adapter(AdapterKind::LowRank, 6, 3);
    g.init(10);
    // Give the output projection real weight so the adapter path is active.
    auto& lr = std::get<LowRankAdapter>(g.impl);
    RngState rng(77);
    for (double& w : lr.W2.v) w = 0.1 * rng.normal();

    for (SelectionStrategy sel :
         {SelectionStrategy::DelayedFullHorizon, SelectionStrategy::OneStepHistory,
          SelectionStrategy::FixedTargetHistory}) {
        for (bool wnorm : {false, true}) {
            PredictOptions opts;
            opts.strategy = sel;
            opts.window_norm = wnorm;
            AnchorPredictor pred = make_corrected_predictor(f, &g, opts);
            // Earliest legal anchor needs L rows of input and H more for the
            // residual history: L + 2H = 22.
            std::vector<int> probes = {22, 30, 47, 79};
            AuditResult res = causality_audit(pred, tbl.values, probes);
            CHECK(res.passed);
            CHECK(res.first_bad_anchor == -1);
        }
    }
}

TEST_CASE("causality audit catches a predictor that peeks") {
    SsmSpec spec;
    TimeSeriesTable tbl = ssm_table(spec, 60, 50, 1, 40);
    Forecaster f = make_linear_forecaster(8, 4);
    f.init(2);
    AnchorPredictor leaky = [&f](const Mat& series, int t) {
        Mat out = base_forecast_at(f, series, t, false);
        if (t < series.rows) out(0, 0) += 1e-9 * series(t, 0);  // reads the future
        return out;
    };
    AuditResult res = causality_audit(leaky, tbl.values, {20, 30});
    CHECK_FALSE(res.passed);
    CHECK(res.first_bad_anchor == 20);
    CHECK_FALSE(res.detail.empty());
}

TEST_CASE("audit rejects out-of-range probes") {
    Mat series(10, 1);
    series.fill(1.0);
    AnchorPredictor id = [](const Mat&, int) { return Mat(1, 1); };
    CHECK_THROWS_AS(causality_audit(id, series, {-1}), InvalidInput);
    CHECK_THROWS_AS(causality_audit(id, series, {11}), InvalidInput);
}
