#include "tefl/residual_select.hpp"

#include "tefl/errors.hpp"

namespace tefl {

namespace {

// Every truth read goes through this guard; an index at or past the
// prediction time is a bug in the caller, not a data problem.
double observed(const Mat& series, int step, int channel, int t) {
    if (step >= t)
        throw CausalityViolation("residual selection read step " +
                                 std::to_string(step) + " at prediction time " +
                                 std::to_string(t));
    if (step < 0 || step >= series.rows)
        throw InvalidInput("residual selection: step out of range");
    return series(step, channel);
}

}  // namespace

void PredictionLog::record(int issue_time, Mat forecast) {
    if (horizon == 0) horizon = forecast.rows;
    if (forecast.rows != horizon)
        throw InvalidInput("prediction log: forecast rows != horizon");
    forecasts[issue_time] = std::move(forecast);
}

const Mat& PredictionLog::at(int issue_time) const {
    auto it = forecasts.find(issue_time);
    if (it == forecasts.end()) throw MissingHistory(issue_time);
    return it->second;
}

Mat select_residuals(const PredictionLog& log, const Mat& series, int t,
                     SelectionStrategy strategy) {
    const int H = log.horizon;
    if (H < 1) throw InvalidInput("residual selection: empty log");
    const int d = series.cols;
    Mat eps(d, H);

    switch (strategy) {
        case SelectionStrategy::DelayedFullHorizon: {
            const int s = t - H;
            if (s < 0) throw MissingHistory(s);
            const Mat& fc = log.at(s);
            for (int h = 0; h < H; ++h)
                for (int c = 0; c < d; ++c)
                    eps(c, h) = observed(series, s + h, c, t) - fc(h, c);
            break;
        }
        case SelectionStrategy::OneStepHistory: {
            for (int j = 0; j < H; ++j) {
                const int s = t - H + j;
                if (s < 0) throw MissingHistory(s);
                const Mat& fc = log.at(s);
                for (int c = 0; c < d; ++c)
                    eps(c, j) = observed(series, s, c, t) - fc(0, c);
            }
            break;
        }
        case SelectionStrategy::FixedTargetHistory: {
            const int target = t - 1;
            for (int j = 0; j < H; ++j) {
                const int s = t - H + j;
                if (s < 0) throw MissingHistory(s);
                const Mat& fc = log.at(s);
                const int offset = target - s;
                for (int c = 0; c < d; ++c)
                    eps(c, j) = observed(series, target, c, t) - fc(offset, c);
            }
            break;
        }
    }
    return eps;
}

}  // namespace tefl
