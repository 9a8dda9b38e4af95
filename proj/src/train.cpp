#include "tefl/train.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tefl/adamw.hpp"
#include "tefl/errors.hpp"
#include "tefl/evaluate.hpp"
#include "tefl/rng.hpp"
#include "tefl/spectral.hpp"

namespace tefl {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

long long parse_ll(const std::string& key, const std::string& v) {
    long long out = 0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e)
        throw ConfigError("bad value for '" + key + "': '" + v + "' is not an integer");
    return out;
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e)
        throw ConfigError("bad value for '" + key + "': '" + v +
                          "' is not a non-negative integer");
    return out;
}

double parse_dbl(const std::string& key, const std::string& v) {
    double out = 0;
    const char* b = v.data();
    const char* e = b + v.size();
    auto [p, ec] = std::from_chars(b, e, out);
    if (ec != std::errc() || p != e || !std::isfinite(out))
        throw ConfigError("bad value for '" + key + "': '" + v + "' is not a finite number");
    return out;
}

int parse_pos_int(const std::string& key, const std::string& v) {
    const long long x = parse_ll(key, v);
    if (x < 1 || x > 1'000'000'000)
        throw ConfigError("bad value for '" + key + "': must be a positive integer");
    return static_cast<int>(x);
}

int parse_nonneg_int(const std::string& key, const std::string& v) {
    const long long x = parse_ll(key, v);
    if (x < 0 || x > 1'000'000'000)
        throw ConfigError("bad value for '" + key + "': must be a non-negative integer");
    return static_cast<int>(x);
}

void append_number(std::string& out, double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    out.append(buf, ptr);
}

std::string render_double(double x) {
    std::string s;
    append_number(s, x);
    return s;
}

void validate_config(const TrainConfig& c) {
    if (c.lr <= 0) throw ConfigError("bad value for 'lr': must be positive");
    if (c.weight_decay < 0) throw ConfigError("bad value for 'weight_decay': must be non-negative");
    if (c.alpha < 0) throw ConfigError("bad value for 'alpha': must be non-negative");
    if (c.train_frac <= 0 || c.val_frac < 0 || c.train_frac + c.val_frac >= 1.0)
        throw ConfigError("bad split fractions: need 0 < train_frac, 0 <= val_frac, train_frac + val_frac < 1");
}

// --- validation metrics -----------------------------------------------------

// Raw forecaster error over every full window of the table; NaN when the
// table is too short.
std::pair<double, double> val_base_metrics(const Forecaster& f,
                                           const TimeSeriesTable& tbl,
                                           bool wnorm) {
    const int L = f.lookback();
    const int H = f.horizon();
    if (tbl.length() < L + H) return {kNan, kNan};
    double se = 0, ae = 0;
    long long n = 0;
    for (int t = L; t + H <= tbl.length(); ++t) {
        const Mat yhat = base_forecast_at(f, tbl.values, t, wnorm);
        for (int h = 0; h < H; ++h)
            for (int c = 0; c < tbl.channels(); ++c) {
                const double dlt = yhat(h, c) - tbl.values(t + h, c);
                se += dlt * dlt;
                ae += std::abs(dlt);
                ++n;
            }
    }
    return {se / n, ae / n};
}

// --- joint-phase segment forward/backward -----------------------------------

Mat rows_of(const Mat& m, int begin, int count) {
    Mat out(count, m.cols);
    std::memcpy(out.v.data(), m.row_ptr(begin), out.v.size() * sizeof(double));
    return out;
}

}  // namespace

double joint_segment(const Phase2Segment& seg, Forecaster& f, Adapter& g,
                     SelectionStrategy sel, bool wnorm, double elem_scale,
                     bool backward, bool update_f, double& ae_out) {
    const int L = f.lookback();
    const int H = f.horizon();
    const int d = seg.x_ctx.cols;

    // Context block: rows 0..L-1 are the earlier input window, rows L..L+H-1
    // the truths its forecast is scored on (ending just before the anchor).
    Mat ctxfull(L + H, d);
    std::memcpy(ctxfull.v.data(), seg.x_ctx.v.data(),
                seg.x_ctx.v.size() * sizeof(double));
    std::memcpy(ctxfull.v.data() + seg.x_ctx.v.size(), seg.y_hist.v.data(),
                seg.y_hist.v.size() * sizeof(double));

    const int n_ctx = sel == SelectionStrategy::DelayedFullHorizon ? 1 : H;
    std::vector<Mat> windows(n_ctx);
    std::vector<Mat> windows_model(n_ctx);  // normalized inputs under wnorm
    std::vector<WindowStats> wst(n_ctx);
    std::vector<Mat> fc(n_ctx);  // raw-scale context forecasts, H x d

    for (int k = 0; k < n_ctx; ++k) {
        windows[k] = sel == SelectionStrategy::DelayedFullHorizon
                         ? seg.x_ctx
                         : rows_of(ctxfull, k, L);
        if (wnorm) {
            wst[k] = window_stats(windows[k]);
            windows_model[k] = window_normalize(windows[k], wst[k]);
            fc[k] = window_denormalize(f.forecast(windows_model[k]), wst[k]);
        } else {
            fc[k] = f.forecast(windows[k]);
        }
    }

    Mat eps(d, H);
    switch (sel) {
        case SelectionStrategy::DelayedFullHorizon:
            for (int j = 0; j < H; ++j)
                for (int c = 0; c < d; ++c)
                    eps(c, j) = seg.y_hist(j, c) - fc[0](j, c);
            break;
        case SelectionStrategy::OneStepHistory:
            for (int k = 0; k < H; ++k)
                for (int c = 0; c < d; ++c)
                    eps(c, k) = ctxfull(L + k, c) - fc[k](0, c);
            break;
        case SelectionStrategy::FixedTargetHistory:
            for (int k = 0; k < H; ++k)
                for (int c = 0; c < d; ++c)
                    eps(c, k) = ctxfull(L + H - 1, c) - fc[k](H - 1 - k, c);
            break;
    }

    // Current forecast and correction.
    WindowStats st_in;
    Mat xin_model;
    Mat base_model;  // model-space output; raw scale unless wnorm
    if (wnorm) {
        st_in = window_stats(seg.x_in);
        xin_model = window_normalize(seg.x_in, st_in);
        base_model = f.forecast(xin_model);
        for (int c = 0; c < d; ++c)
            for (int j = 0; j < H; ++j) eps(c, j) /= st_in.stddev[c];
    } else {
        base_model = f.forecast(seg.x_in);
    }
    const Mat yb = transpose(base_model);  // d x H
    const Mat corr = g.forward(eps, yb);
    const Mat pred =
        wnorm ? window_denormalize(transpose(corr), st_in) : transpose(corr);

    double se = 0;
    for (int h = 0; h < H; ++h)
        for (int c = 0; c < d; ++c) {
            const double dlt = pred(h, c) - seg.y_tgt(h, c);
            se += dlt * dlt;
            ae_out += std::abs(dlt);
        }
    if (!backward) return se;

    Mat grad_corr(d, H);
    for (int h = 0; h < H; ++h)
        for (int c = 0; c < d; ++c) {
            const double gp = 2.0 * (pred(h, c) - seg.y_tgt(h, c)) * elem_scale;
            grad_corr(c, h) = wnorm ? gp * st_in.stddev[c] : gp;
        }

    AdapterGrads ag = g.backprop(eps, yb, grad_corr);

    if (!update_f) return se;

    // Path through the current window.
    Mat grad_base(H, d);
    for (int h = 0; h < H; ++h)
        for (int c = 0; c < d; ++c) grad_base(h, c) = ag.d_yhat(c, h);
    f.backprop(wnorm ? xin_model : seg.x_in, grad_base);

    // Path through the simulated errors: each error entry is truth minus a
    // context forecast entry, so the forecast entry takes the negated grad.
    for (int k = 0; k < n_ctx; ++k) {
        Mat gfc(H, d);
        gfc.fill(0.0);
        if (sel == SelectionStrategy::DelayedFullHorizon) {
            for (int j = 0; j < H; ++j)
                for (int c = 0; c < d; ++c) {
                    const double ge =
                        wnorm ? ag.d_eps(c, j) / st_in.stddev[c] : ag.d_eps(c, j);
                    gfc(j, c) = -ge;
                }
        } else {
            const int row = sel == SelectionStrategy::OneStepHistory ? 0 : H - 1 - k;
            for (int c = 0; c < d; ++c) {
                const double ge =
                    wnorm ? ag.d_eps(c, k) / st_in.stddev[c] : ag.d_eps(c, k);
                gfc(row, c) = -ge;
            }
        }
        if (wnorm) {
            for (int h = 0; h < H; ++h)
                for (int c = 0; c < d; ++c) gfc(h, c) *= wst[k].stddev[c];
            f.backprop(windows_model[k], gfc);
        } else {
            f.backprop(windows[k], gfc);
        }
    }
    return se;
}

namespace {

// Corrected-forecast error over validation segments; NaN when none fit.
std::pair<double, double> val_joint_metrics(Forecaster& f, Adapter& g,
                                            const TimeSeriesTable& tbl,
                                            SelectionStrategy sel, bool wnorm) {
    const int L = f.lookback();
    const int H = f.horizon();
    if (tbl.length() < L + 2 * H) return {kNan, kNan};
    const auto segs = make_phase2_segments(tbl, L, H, 1);
    double se = 0, ae = 0;
    for (const auto& s : segs)
        se += joint_segment(s, f, g, sel, wnorm, 0.0, false, false, ae);
    const double n = static_cast<double>(segs.size()) * H * tbl.channels();
    return {se / n, ae / n};
}

// --- epochs ------------------------------------------------------------------

struct Chunked {
    std::vector<std::pair<double*, const double*>> ptrs;
    std::vector<std::size_t> sizes;
};

Chunked combine(ParamChunks a, const ParamChunks* b) {
    Chunked out;
    out.ptrs = std::move(a.ptrs);
    out.sizes = std::move(a.sizes);
    if (b) {
        out.ptrs.insert(out.ptrs.end(), b->ptrs.begin(), b->ptrs.end());
        out.sizes.insert(out.sizes.end(), b->sizes.begin(), b->sizes.end());
    }
    return out;
}

// Warm-up: temporally ordered batches, mean absolute error plus a weighted
// mean of spectral flatness over each (channel, horizon-offset) error
// sequence along the batch axis. Returns the epoch's mean batch loss;
// `sf_out` gets the flatness share.
double warmup_epoch(Forecaster& f, const std::vector<Phase1Batch>& batches,
                    bool wnorm, double alpha, AdamWState& opt, Chunked& ch,
                    double& sf_out) {
    const int H = f.horizon();
    double loss_sum = 0, sf_sum = 0;
    for (const auto& batch : batches) {
        const int B = static_cast<int>(batch.samples.size());
        const int d = batch.samples[0].x.cols;
        const double inv = 1.0 / (static_cast<double>(B) * H * d);

        std::vector<Mat> xin_model(B), resid(B), grad_raw(B);
        std::vector<WindowStats> st(B);
        double mae = 0;
        for (int i = 0; i < B; ++i) {
            const WindowSample& s = batch.samples[i];
            Mat base;
            if (wnorm) {
                st[i] = window_stats(s.x);
                xin_model[i] = window_normalize(s.x, st[i]);
                base = window_denormalize(f.forecast(xin_model[i]), st[i]);
            } else {
                base = f.forecast(s.x);
            }
            resid[i] = Mat(H, d);
            grad_raw[i] = Mat(H, d);
            for (int h = 0; h < H; ++h)
                for (int c = 0; c < d; ++c) {
                    const double r = base(h, c) - s.y(h, c);
                    resid[i](h, c) = r;
                    mae += std::abs(r);
                    grad_raw[i](h, c) = (r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) * inv;
                }
        }
        double batch_loss = mae * inv;

        double sf_term = 0;
        if (alpha > 0 && B >= kMinFlatnessBatch) {
            const double pair_inv = 1.0 / (static_cast<double>(H) * d);
            std::vector<double> seq(B);
            for (int h = 0; h < H; ++h)
                for (int c = 0; c < d; ++c) {
                    for (int i = 0; i < B; ++i) seq[i] = resid[i](h, c);
                    sf_term += alpha * pair_inv * spectral_flatness(seq);
                    const std::vector<double> gs = spectral_flatness_grad(seq);
                    for (int i = 0; i < B; ++i)
                        grad_raw[i](h, c) += alpha * pair_inv * gs[i];
                }
        }
        batch_loss += sf_term;

        f.zero_grad();
        for (int i = 0; i < B; ++i) {
            if (wnorm) {
                for (int h = 0; h < H; ++h)
                    for (int c = 0; c < d; ++c) grad_raw[i](h, c) *= st[i].stddev[c];
                f.backprop(xin_model[i], grad_raw[i]);
            } else {
                f.backprop(batch.samples[i].x, grad_raw[i]);
            }
        }
        opt.step(ch.ptrs, ch.sizes);

        loss_sum += batch_loss;
        sf_sum += sf_term;
    }
    if (!std::isfinite(loss_sum)) throw NonFiniteError("warm-up loss diverged");
    sf_out = sf_sum / batches.size();
    return loss_sum / batches.size();
}

void shuffle_indices(std::vector<int>& idx, RngState& rng) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[rng.uniform_below(i)]);
}

double joint_epoch(Forecaster& f, Adapter& g,
                   const std::vector<Phase2Segment>& segs,
                   std::vector<int>& order, SelectionStrategy sel, bool wnorm,
                   int batch_size, bool update_f, AdamWState& opt, Chunked& ch,
                   RngState& rng) {
    shuffle_indices(order, rng);
    const int H = f.horizon();
    const int d = segs[0].x_ctx.cols;
    double loss_sum = 0;
    int n_batches = 0;
    for (std::size_t at = 0; at < order.size(); at += batch_size) {
        const int B =
            static_cast<int>(std::min<std::size_t>(batch_size, order.size() - at));
        const double elem_scale = 1.0 / (static_cast<double>(B) * H * d);
        f.zero_grad();
        g.zero_grad();
        double se = 0, ae = 0;
        for (int i = 0; i < B; ++i)
            se += joint_segment(segs[order[at + i]], f, g, sel, wnorm, elem_scale,
                                true, update_f, ae);
        opt.step(ch.ptrs, ch.sizes);
        loss_sum += se * elem_scale;
        ++n_batches;
    }
    if (!std::isfinite(loss_sum)) throw NonFiniteError("joint loss diverged");
    return loss_sum / n_batches;
}

// Plain shuffled squared-error training of the forecaster alone.
double base_epoch(Forecaster& f, std::vector<const WindowSample*>& flat,
                  std::vector<int>& order, bool wnorm, int batch_size,
                  AdamWState& opt, Chunked& ch, RngState& rng) {
    shuffle_indices(order, rng);
    const int H = f.horizon();
    double loss_sum = 0;
    int n_batches = 0;
    for (std::size_t at = 0; at < order.size(); at += batch_size) {
        const int B =
            static_cast<int>(std::min<std::size_t>(batch_size, order.size() - at));
        const int d = flat[0]->x.cols;
        const double inv = 1.0 / (static_cast<double>(B) * H * d);
        f.zero_grad();
        double se = 0;
        for (int i = 0; i < B; ++i) {
            const WindowSample& s = *flat[order[at + i]];
            WindowStats st;
            Mat xm, base;
            if (wnorm) {
                st = window_stats(s.x);
                xm = window_normalize(s.x, st);
                base = window_denormalize(f.forecast(xm), st);
            } else {
                base = f.forecast(s.x);
            }
            Mat grad(H, d);
            for (int h = 0; h < H; ++h)
                for (int c = 0; c < d; ++c) {
                    const double r = base(h, c) - s.y(h, c);
                    se += r * r;
                    grad(h, c) = 2.0 * r * inv * (wnorm ? st.stddev[c] : 1.0);
                }
            f.backprop(wnorm ? xm : s.x, grad);
        }
        opt.step(ch.ptrs, ch.sizes);
        loss_sum += se * inv;
        ++n_batches;
    }
    if (!std::isfinite(loss_sum)) throw NonFiniteError("base loss diverged");
    return loss_sum / n_batches;
}

std::vector<double> snapshot_params(Chunked& ch) {
    std::vector<double> out;
    for (std::size_t i = 0; i < ch.ptrs.size(); ++i)
        out.insert(out.end(), ch.ptrs[i].first, ch.ptrs[i].first + ch.sizes[i]);
    return out;
}

void restore_params(Chunked& ch, const std::vector<double>& flat) {
    std::size_t at = 0;
    for (std::size_t i = 0; i < ch.ptrs.size(); ++i) {
        std::memcpy(ch.ptrs[i].first, flat.data() + at,
                    ch.sizes[i] * sizeof(double));
        at += ch.sizes[i];
    }
}

}  // namespace

// --- config ------------------------------------------------------------------

TrainConfig parse_config_text(const std::string& text) {
    TrainConfig cfg;
    std::vector<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw ConfigError("duplicate key '" + key + "'");
        seen.push_back(key);

        if (key == "model") {
            if (val == "linear") cfg.model = ModelKind::Linear;
            else if (val == "mlp") cfg.model = ModelKind::Mlp;
            else throw ConfigError("bad value for 'model': expected linear|mlp");
        } else if (key == "lookback") {
            cfg.lookback = parse_pos_int(key, val);
        } else if (key == "horizon") {
            cfg.horizon = parse_pos_int(key, val);
        } else if (key == "hidden") {
            cfg.hidden = parse_pos_int(key, val);
        } else if (key == "adapter") {
            if (val == "lowrank") cfg.adapter = AdapterKind::LowRank;
            else if (val == "gate") cfg.adapter = AdapterKind::Gate;
            else if (val == "fuse") cfg.adapter = AdapterKind::Fuse;
            else throw ConfigError("bad value for 'adapter': expected lowrank|gate|fuse");
        } else if (key == "rank") {
            cfg.rank = parse_pos_int(key, val);
        } else if (key == "strategy") {
            if (val == "tefl") cfg.strategy = TrainStrategy::Tefl;
            else if (val == "nosf") cfg.strategy = TrainStrategy::NoSf;
            else if (val == "type1") cfg.strategy = TrainStrategy::Type1;
            else if (val == "type2") cfg.strategy = TrainStrategy::Type2;
            else if (val == "baseline") cfg.strategy = TrainStrategy::Baseline;
            else throw ConfigError("bad value for 'strategy': expected tefl|nosf|type1|type2|baseline");
        } else if (key == "selection") {
            if (val == "delayed") cfg.selection = SelectionStrategy::DelayedFullHorizon;
            else if (val == "onestep") cfg.selection = SelectionStrategy::OneStepHistory;
            else if (val == "fixedtarget") cfg.selection = SelectionStrategy::FixedTargetHistory;
            else throw ConfigError("bad value for 'selection': expected delayed|onestep|fixedtarget");
        } else if (key == "warmup_epochs") {
            cfg.warmup_epochs = parse_nonneg_int(key, val);
        } else if (key == "joint_epochs") {
            cfg.joint_epochs = parse_nonneg_int(key, val);
        } else if (key == "batch_size") {
            cfg.batch_size = parse_pos_int(key, val);
        } else if (key == "stride") {
            cfg.stride = parse_pos_int(key, val);
        } else if (key == "lr") {
            cfg.lr = parse_dbl(key, val);
        } else if (key == "weight_decay") {
            cfg.weight_decay = parse_dbl(key, val);
        } else if (key == "alpha") {
            cfg.alpha = parse_dbl(key, val);
        } else if (key == "seed") {
            cfg.seed = parse_u64(key, val);
        } else if (key == "window_norm") {
            if (val == "on") cfg.window_norm = true;
            else if (val == "off") cfg.window_norm = false;
            else throw ConfigError("bad value for 'window_norm': expected on|off");
        } else if (key == "train_frac") {
            cfg.train_frac = parse_dbl(key, val);
        } else if (key == "val_frac") {
            cfg.val_frac = parse_dbl(key, val);
        } else {
            throw ConfigError("unknown key '" + key + "'");
        }
    }
    validate_config(cfg);
    return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::vector<std::pair<std::string, std::string>> config_kv(const TrainConfig& c) {
    auto model = c.model == ModelKind::Linear ? "linear" : "mlp";
    const char* adapter = "lowrank";
    if (c.adapter == AdapterKind::Gate) adapter = "gate";
    if (c.adapter == AdapterKind::Fuse) adapter = "fuse";
    const char* strategy = "tefl";
    if (c.strategy == TrainStrategy::NoSf) strategy = "nosf";
    if (c.strategy == TrainStrategy::Type1) strategy = "type1";
    if (c.strategy == TrainStrategy::Type2) strategy = "type2";
    if (c.strategy == TrainStrategy::Baseline) strategy = "baseline";
    const char* selection = "delayed";
    if (c.selection == SelectionStrategy::OneStepHistory) selection = "onestep";
    if (c.selection == SelectionStrategy::FixedTargetHistory) selection = "fixedtarget";
    return {
        {"model", model},
        {"lookback", std::to_string(c.lookback)},
        {"horizon", std::to_string(c.horizon)},
        {"hidden", std::to_string(c.hidden)},
        {"adapter", adapter},
        {"rank", std::to_string(c.rank)},
        {"strategy", strategy},
        {"selection", selection},
        {"warmup_epochs", std::to_string(c.warmup_epochs)},
        {"joint_epochs", std::to_string(c.joint_epochs)},
        {"batch_size", std::to_string(c.batch_size)},
        {"stride", std::to_string(c.stride)},
        {"lr", render_double(c.lr)},
        {"weight_decay", render_double(c.weight_decay)},
        {"alpha", render_double(c.alpha)},
        {"seed", std::to_string(c.seed)},
        {"window_norm", c.window_norm ? "on" : "off"},
        {"train_frac", render_double(c.train_frac)},
        {"val_frac", render_double(c.val_frac)},
    };
}

// --- schedules ---------------------------------------------------------------

TrainResult run_training(const TrainConfig& cfg, const SplitSeries& splits) {
    validate_config(cfg);
    const int L = cfg.lookback;
    const int H = cfg.horizon;

    Forecaster f = cfg.model == ModelKind::Linear
                       ? make_linear_forecaster(L, H)
                       : make_mlp_forecaster(L, H, cfg.hidden);
    f.init(RngState::substream(cfg.seed, 1).next_u64());
    Adapter g = make_adapter(cfg.adapter, H, cfg.rank);
    g.init(RngState::substream(cfg.seed, 2).next_u64());
    RngState shuffle_rng = RngState::substream(cfg.seed, 3);

    AdamWParams hp;
    hp.lr = cfg.lr;
    hp.weight_decay = cfg.weight_decay;

    TrainResult out;

    Chunked ch_f = combine(f.chunks(), nullptr);
    ParamChunks gch = g.chunks();
    Chunked ch_fg = combine(f.chunks(), &gch);
    Chunked ch_g = combine(g.chunks(), nullptr);

    const bool wants_warmup = cfg.strategy == TrainStrategy::Tefl ||
                              cfg.strategy == TrainStrategy::NoSf;
    const bool wants_joint = cfg.strategy != TrainStrategy::Baseline;

    // Phase-1 windows, needed by warm-up, the base-fit stages, and baseline.
    std::vector<Phase1Batch> batches;
    std::vector<const WindowSample*> flat;
    std::vector<int> flat_order;
    if (wants_warmup || cfg.strategy == TrainStrategy::Type1 ||
        cfg.strategy == TrainStrategy::Baseline) {
        batches = make_phase1_batches(splits.train, L, H, cfg.batch_size);
        int prev_anchor = -1;
        for (const auto& b : batches)
            for (const auto& s : b.samples) {
                if (s.anchor <= prev_anchor)
                    throw CausalityViolation("warm-up batches out of time order");
                prev_anchor = s.anchor;
                flat.push_back(&s);
            }
        flat_order.resize(flat.size());
        for (std::size_t i = 0; i < flat.size(); ++i)
            flat_order[i] = static_cast<int>(i);
    }

    if (wants_warmup) {
        const double alpha = cfg.strategy == TrainStrategy::NoSf ? 0.0 : cfg.alpha;
        AdamWState opt(f.n_params(), hp);
        for (int e = 0; e < cfg.warmup_epochs; ++e) {
            EpochRow row;
            row.phase = "warmup";
            row.epoch = e;
            row.train_loss = warmup_epoch(f, batches, cfg.window_norm, alpha, opt,
                                          ch_f, row.sf_term);
            auto [vm, va] = val_base_metrics(f, splits.val, cfg.window_norm);
            row.val_mse = vm;
            row.val_mae = va;
            out.rows.push_back(std::move(row));
        }
    }

    if (cfg.strategy == TrainStrategy::Type1) {
        // Stage one: the forecaster alone until validation stops improving.
        AdamWState opt(f.n_params(), hp);
        std::vector<double> best = snapshot_params(ch_f);
        double best_val = std::numeric_limits<double>::infinity();
        int since_best = 0;
        const bool have_val = splits.val.length() >= L + H;
        const int cap = have_val ? kType1MaxEpochs
                                 : cfg.warmup_epochs + cfg.joint_epochs;
        for (int e = 0; e < cap; ++e) {
            EpochRow row;
            row.phase = "base";
            row.epoch = e;
            row.train_loss = base_epoch(f, flat, flat_order,
                                        cfg.window_norm, cfg.batch_size, opt,
                                        ch_f, shuffle_rng);
            auto [vm, va] = val_base_metrics(f, splits.val, cfg.window_norm);
            row.val_mse = vm;
            row.val_mae = va;
            out.rows.push_back(std::move(row));
            if (!have_val) continue;
            if (vm < best_val) {
                best_val = vm;
                best = snapshot_params(ch_f);
                since_best = 0;
            } else if (++since_best >= kType1Patience) {
                break;
            }
        }
        if (have_val) restore_params(ch_f, best);
    }

    if (cfg.strategy == TrainStrategy::Baseline) {
        AdamWState opt(f.n_params(), hp);
        const int total = cfg.warmup_epochs + cfg.joint_epochs;
        for (int e = 0; e < total; ++e) {
            EpochRow row;
            row.phase = "base";
            row.epoch = e;
            row.train_loss = base_epoch(f, flat, flat_order,
                                        cfg.window_norm, cfg.batch_size, opt,
                                        ch_f, shuffle_rng);
            auto [vm, va] = val_base_metrics(f, splits.val, cfg.window_norm);
            row.val_mse = vm;
            row.val_mae = va;
            out.rows.push_back(std::move(row));
        }
    }

    if (wants_joint && cfg.joint_epochs > 0) {
        const auto segs = make_phase2_segments(splits.train, L, H, cfg.stride);
        std::vector<int> order(segs.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = static_cast<int>(i);
        const bool frozen = cfg.strategy == TrainStrategy::Type1;
        Chunked& ch = frozen ? ch_g : ch_fg;
        std::size_t n = 0;
        for (auto s : ch.sizes) n += s;
        AdamWState opt(n, hp);
        for (int e = 0; e < cfg.joint_epochs; ++e) {
            EpochRow row;
            row.phase = frozen ? "head" : "joint";
            row.epoch = e;
            row.train_loss =
                joint_epoch(f, g, segs, order, cfg.selection, cfg.window_norm,
                            cfg.batch_size, !frozen, opt, ch, shuffle_rng);
            auto [vm, va] = val_joint_metrics(f, g, splits.val, cfg.selection,
                                              cfg.window_norm);
            row.val_mse = vm;
            row.val_mae = va;
            out.rows.push_back(std::move(row));
        }
    }

    out.checkpoint.model = std::move(f);
    if (cfg.strategy != TrainStrategy::Baseline)
        out.checkpoint.adapter = std::move(g);
    out.checkpoint.window_norm = cfg.window_norm;
    return out;
}

TrainResult run_training_raw(const TrainConfig& cfg, const TimeSeriesTable& raw) {
    SplitSpec spec;
    spec.train_frac = cfg.train_frac;
    spec.val_frac = cfg.val_frac;
    return run_training(cfg, split_and_normalize(raw, spec));
}

}  // namespace tefl
