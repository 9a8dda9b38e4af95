#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "tefl/adapter.hpp"
#include "tefl/checkpoint.hpp"
#include "tefl/dataset.hpp"
#include "tefl/forecaster.hpp"
#include "tefl/residual_select.hpp"

namespace tefl {

enum class ModelKind { Linear, Mlp };

// How the base model and the correction head are scheduled.
enum class TrainStrategy {
    Tefl,      // flatness-regularized warm-up, then joint training
    NoSf,      // identical schedule with the flatness term forced off
    Type1,     // base model to convergence, then the head alone on a frozen base
    Type2,     // joint training from random initialization, no warm-up
    Baseline,  // base model alone for the full epoch budget, no head
};

struct TrainConfig {
    ModelKind model = ModelKind::Linear;
    int lookback = 96;
    int horizon = 96;
    int hidden = 128;  // mlp only
    AdapterKind adapter = AdapterKind::LowRank;
    int rank = 64;
    TrainStrategy strategy = TrainStrategy::Tefl;
    SelectionStrategy selection = SelectionStrategy::DelayedFullHorizon;
    int warmup_epochs = 3;
    int joint_epochs = 12;
    int batch_size = 32;
    int stride = 1;  // joint-phase anchor stride
    double lr = 1e-3;
    double weight_decay = 1e-4;
    double alpha = 1.0;  // weight of the flatness term in the warm-up loss
    std::uint64_t seed = 0;
    bool window_norm = false;
    double train_frac = 0.7;
    double val_frac = 0.1;
};

// Flat "key = value" lines, one per setting, '#' starts a comment. Keys match
// the TrainConfig field names exactly; unknown or duplicate keys raise
// ConfigError naming the key, as do unparseable or out-of-range values.
TrainConfig parse_config_text(const std::string& text);
TrainConfig parse_config_file(const std::string& path);

// Canonical key/value rendering of a config. Round-trips through
// parse_config_text; used verbatim in run manifests.
std::vector<std::pair<std::string, std::string>> config_kv(const TrainConfig& cfg);

// One line of training history. val_mse/val_mae are NaN when the validation
// split is too short for the phase's window geometry. During base-only phases
// the validation columns score the raw forecaster; during joint/head phases
// they score the corrected forecast on self-contained validation segments.
struct EpochRow {
    std::string phase;  // "warmup" | "joint" | "base" | "head"
    int epoch = 0;      // zero-based within the phase
    double train_loss = 0.0;  // mean per-batch objective
    double sf_term = 0.0;     // flatness share of train_loss (0 outside warm-up)
    double val_mse = std::numeric_limits<double>::quiet_NaN();
    double val_mae = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochRow> rows;
};

// Runs the configured schedule on pre-split, pre-normalized data. The
// checkpoint carries the adapter except under Baseline. Deterministic: the
// same config and data give bit-identical parameters.
TrainResult run_training(const TrainConfig& cfg, const SplitSeries& splits);

// One self-contained joint-training step on a single segment: simulate the
// in-segment forecast errors the deployed predictor would have seen, correct
// the current forecast with the head, and score it against the target block.
// Returns the summed squared error over the horizon; `ae_out` gains the
// summed absolute error. With `backward`, gradients accumulate into the head
// and — unless `update_f` is false — into the forecaster through both of its
// uses (the current window and the error-producing context windows);
// `elem_scale` is dLoss/d(squared-error element), so `elem_scale = 1` makes
// the accumulated gradients exactly d(sse)/d(params).
double joint_segment(const Phase2Segment& seg, Forecaster& f, Adapter& g,
                     SelectionStrategy sel, bool window_norm, double elem_scale,
                     bool backward, bool update_f, double& ae_out);

// Convenience wrapper: global-split-and-normalize a raw table first.
TrainResult run_training_raw(const TrainConfig& cfg, const TimeSeriesTable& raw);

// Flatness terms are computed only for batches at least this long along the
// time axis; shorter slices have too few spectral bins to be informative.
inline constexpr int kMinFlatnessBatch = 8;

// Early-stopping guard rails for the Type1 base-fit stage.
inline constexpr int kType1Patience = 3;
inline constexpr int kType1MaxEpochs = 100;

}  // namespace tefl
