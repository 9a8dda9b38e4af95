#pragma once

#include <string>
#include <vector>

#include "tefl/mat.hpp"

namespace tefl {

// Multichannel series, rows = time steps in increasing order, cols = channels.
struct TimeSeriesTable {
    Mat values;  // T x d
    std::vector<std::string> channel_names;
    std::string origin;  // source path or generator tag, for reports only

    int length() const { return values.rows; }
    int channels() const { return values.cols; }
};

// Loads a headered CSV. A column whose name is "date" (case-insensitive) is
// dropped; every other cell must parse as a decimal number. Parse failures
// carry zero-based data coordinates (header row excluded).
TimeSeriesTable load_csv(const std::string& path);

// Writes a headered CSV with shortest round-trip decimals.
void write_csv(const TimeSeriesTable& table, const std::string& path);

struct SplitSpec {
    double train_frac = 0.7;
    double val_frac = 0.1;  // test gets the remainder
};

// Per-channel z-score statistics taken from the training split only.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // floored at kStdFloor
};

inline constexpr double kStdFloor = 1e-8;

struct SplitSeries {
    TimeSeriesTable train;
    TimeSeriesTable val;
    TimeSeriesTable test;
    NormStats stats;
};

// Contiguous train/val/test split in time order, then z-scores all three
// splits with statistics computed from the training split alone.
SplitSeries split_and_normalize(const TimeSeriesTable& table, SplitSpec spec);

// Re-splits an already normalized table (e.g. after injecting disturbances
// into the concatenated splits) without touching the values; `stats` is
// carried through unchanged.
SplitSeries split_only(const TimeSeriesTable& table, SplitSpec spec,
                       NormStats stats);

TimeSeriesTable concat_tables(const TimeSeriesTable& a,
                              const TimeSeriesTable& b);

// Last n rows of a table, used to seed rolling evaluation with history.
TimeSeriesTable tail_rows(const TimeSeriesTable& table, int n);

// One supervised sample: an input window and the horizon that follows it.
struct WindowSample {
    int anchor = 0;  // first forecast step: x = rows [anchor-L, anchor-1], y = rows [anchor, anchor+H-1]
    Mat x;           // L x d
    Mat y;           // H x d
};

struct Phase1Batch {
    std::vector<WindowSample> samples;  // consecutive anchors, time order
};

// Temporally ordered, unshuffled batches over every legal anchor. The last
// batch may be shorter than batch_size and is kept.
std::vector<Phase1Batch> make_phase1_batches(const TimeSeriesTable& series,
                                             int lookback, int horizon,
                                             int batch_size);

// One self-contained segment for joint training. All four blocks are copies
// of consecutive row ranges ending at the anchor's horizon:
//   x_ctx  rows [t-H-L, t-H-1]   input of the simulated earlier forecast
//   y_hist rows [t-H,   t-1]     truth that earlier forecast is scored on
//   x_in   rows [t-L,   t-1]     input of the current forecast
//   y_tgt  rows [t,     t+H-1]   truth the corrected forecast is scored on
struct Phase2Segment {
    int anchor = 0;
    Mat x_ctx;   // L x d
    Mat y_hist;  // H x d
    Mat x_in;    // L x d
    Mat y_tgt;   // H x d
};

// Segments for every anchor t in [L+H, T-H] at the given stride.
// Throws NotEnoughData when no anchor fits.
std::vector<Phase2Segment> make_phase2_segments(const TimeSeriesTable& series,
                                                int lookback, int horizon,
                                                int stride);

struct ShockSpec {
    int n_shocks = 30;
    double amplitude = 3.0;
    int duration = 192;
};

// Adds linearly decaying impulses to every channel at evenly spaced onsets
// floor(i*T/n_shocks): the step k in [0, duration) after an onset gains
// amplitude * (1 - k/duration). Expects an already normalized table so the
// amplitude is in units of training standard deviations.
TimeSeriesTable inject_shocks(const TimeSeriesTable& table, ShockSpec spec);

// Adds a ramp to the second half of the series: row t > 0.5*T gains
// 4*(t - 0.5*T)/T on every channel, reaching just under 2 standard
// deviations at the end. Expects an already normalized table.
TimeSeriesTable inject_drift(const TimeSeriesTable& table);

}  // namespace tefl
