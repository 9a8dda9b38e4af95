#pragma once

#include <map>

#include "tefl/mat.hpp"

namespace tefl {

// Which past forecast errors feed the adapter at prediction time t. Every
// strategy reads only truths at steps <= t-1 and forecasts issued at <= t-1,
// so the corrected prediction never touches unobserved data; that property
// is asserted at runtime.
enum class SelectionStrategy {
    // The H residuals of the forecast issued at t-H, which covers steps
    // t-H .. t-1: the most recent forecast whose whole horizon is observed.
    DelayedFullHorizon,
    // The H one-step errors of the forecasts issued at t-H .. t-1: each
    // contributes the error of its first step only.
    OneStepHistory,
    // The H errors for the most recent observed step t-1, as predicted by
    // each of the H forecasts issued at t-H .. t-1.
    FixedTargetHistory,
};

// Forecasts issued so far, keyed by issue time. A forecast issued at s covers
// steps s .. s+H-1. Rolling evaluation records each forecast once and rereads
// it for every later anchor that selects it.
struct PredictionLog {
    int horizon = 0;
    std::map<int, Mat> forecasts;  // issue time -> H x d

    void record(int issue_time, Mat forecast);
    bool has(int issue_time) const { return forecasts.count(issue_time) > 0; }
    const Mat& at(int issue_time) const;  // MissingHistory when absent
};

// Builds the d x H error matrix for prediction time t from logged forecasts
// and the observed series (rows = time). Column j is the j-th selected error
// in issue-time order; for the delayed strategy it is the horizon offset.
Mat select_residuals(const PredictionLog& log, const Mat& series, int t,
                     SelectionStrategy strategy);

}  // namespace tefl
