#include "tefl/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tefl/checkpoint.hpp"
#include "tefl/dataset.hpp"
#include "tefl/errors.hpp"
#include "tefl/evaluate.hpp"
#include "tefl/ssm.hpp"
#include "tefl/theory.hpp"
#include "tefl/train.hpp"

namespace fs = std::filesystem;

namespace tefl {

namespace {

// Semantic argument errors CLI11 cannot express; maps to exit code 1.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

constexpr const char* kUsage =
    "usage: tefl <command> [flags]\n"
    "  train    --config <file> --data <csv> --out <dir>\n"
    "  evaluate --ckpt <file> --data <csv> [--strategy delayed|onestep|fixedtarget]\n"
    "           [--no-adapter] [--dump <csv>] [--train-frac F] [--val-frac F]\n"
    "  synth    --kind ssm|shocks|drift --out <csv> [--in <csv>] [--seed N]\n"
    "           [--length N] [--channels N] [--burn-in N] [--sigma-eps V]\n"
    "           [--sigma-eta V] [--n-shocks N] [--amplitude V] [--duration N]\n"
    "  theory   --check prop1|thm1 --out <csv> [--sigma-eps V ...] [--T N]\n"
    "           [--seeds K] [--M N] [--seed0 N] [--blocks B] [--sigma-eta V]\n"
    "  ablate   --suite strategy|selection|adapter --config <file> [--seeds K]\n"
    "           [--length N] [--data-seed N]\n";

// Shortest round-trip decimal, identical across reruns.
std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

// JSON number token: non-finite values become null.
std::string json_num(double v) { return std::isfinite(v) ? num(v) : "null"; }

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[std::size_t(i)] = digits[v & 15];
    return out;
}

SelectionStrategy parse_strategy_name(const std::string& s) {
    if (s == "delayed") return SelectionStrategy::DelayedFullHorizon;
    if (s == "onestep") return SelectionStrategy::OneStepHistory;
    if (s == "fixedtarget") return SelectionStrategy::FixedTargetHistory;
    throw UsageError("unknown selection strategy '" + s + "'");
}

std::string file_basename(const std::string& path) {
    return fs::path(path).filename().string();
}

// Raw flag values of one parsed subcommand, for the sidecar manifests.
std::map<std::string, std::string> parsed_args(const CLI::App* cmd) {
    std::map<std::string, std::string> m;
    for (const CLI::Option* opt : cmd->get_options()) {
        if (opt->count() == 0 || opt->get_lnames().empty()) continue;
        const std::string name = opt->get_lnames().front();
        if (name == "help") continue;
        std::string joined;
        for (const std::string& v : opt->results()) {
            if (!joined.empty()) joined += ' ';
            joined += v;
        }
        m[name] = joined;
    }
    return m;
}

void write_sidecar_manifest(const std::string& out_path,
                            const std::string& command,
                            const std::map<std::string, std::string>& args) {
    std::ofstream m(out_path + ".manifest.json", std::ios::binary);
    if (!m) throw IoError("cannot write " + out_path + ".manifest.json");
    m << "{\n  \"command\": \"" << command << "\",\n  \"args\": {\n";
    std::size_t i = 0;
    for (const auto& [k, v] : args) {
        ++i;
        m << "    \"" << json_escape(k) << "\": \"" << json_escape(v) << "\""
          << (i < args.size() ? "," : "") << "\n";
    }
    m << "  }\n}\n";
}

// ---------------------------------------------------------------- train ----

std::string canonical_config_text(const TrainConfig& cfg) {
    std::string text;
    for (const auto& [k, v] : config_kv(cfg)) text += k + " = " + v + "\n";
    return text;
}

void write_metrics_jsonl(const std::string& path, const std::string& run_id,
                         const std::vector<EpochRow>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    for (const EpochRow& r : rows) {
        f << "{\"run_id\":\"" << run_id << "\",\"phase\":\"" << r.phase
          << "\",\"epoch\":" << r.epoch
          << ",\"split\":\"train\",\"loss\":" << json_num(r.train_loss)
          << ",\"mse\":null,\"mae\":null,\"sf_term\":" << json_num(r.sf_term)
          << "}\n";
        f << "{\"run_id\":\"" << run_id << "\",\"phase\":\"" << r.phase
          << "\",\"epoch\":" << r.epoch
          << ",\"split\":\"val\",\"loss\":null,\"mse\":" << json_num(r.val_mse)
          << ",\"mae\":" << json_num(r.val_mae) << ",\"sf_term\":null}\n";
    }
}

void write_train_manifest(const std::string& path, const std::string& run_id,
                          const TrainConfig& cfg, const std::string& data_name) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << "{\n";
    f << "  \"run_id\": \"" << run_id << "\",\n";
    f << "  \"command\": \"train\",\n";
    f << "  \"data\": \"" << json_escape(data_name) << "\",\n";
    f << "  \"seed\": " << cfg.seed << ",\n";
    f << "  \"config\": {\n";
    const auto kv = config_kv(cfg);
    for (std::size_t i = 0; i < kv.size(); ++i)
        f << "    \"" << kv[i].first << "\": \"" << json_escape(kv[i].second)
          << "\"" << (i + 1 < kv.size() ? "," : "") << "\n";
    f << "  },\n";
    f << "  \"formats\": {\n";
    f << "    \"checkpoint\": \"" << kCheckpointMagic << "\",\n";
    f << "    \"metrics\": \"metrics-jsonl v1\"\n";
    f << "  },\n";
    f << "  \"outputs\": [\"model.ckpt\", \"metrics.jsonl\"]\n";
    f << "}\n";
}

struct TrainArgs {
    std::string config, data, out;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
    const TrainConfig cfg = parse_config_file(a.config);
    if (cfg.adapter == AdapterKind::LowRank && 2 * cfg.rank >= cfg.horizon)
        err << "warning: rank " << cfg.rank
            << " is large relative to horizon " << cfg.horizon
            << "; the correction head may memorize instead of smooth\n";

    const TimeSeriesTable table = load_csv(a.data);
    const SplitSeries splits =
        split_and_normalize(table, SplitSpec{cfg.train_frac, cfg.val_frac});
    const TrainResult result = run_training(cfg, splits);

    const std::string run_id = hex16(
        fnv1a(canonical_config_text(cfg) + '\0' + file_basename(a.data)));
    const fs::path dir(a.out);
    fs::create_directories(dir);
    save_checkpoint(result.checkpoint, (dir / "model.ckpt").string());
    write_metrics_jsonl((dir / "metrics.jsonl").string(), run_id, result.rows);
    write_train_manifest((dir / "manifest.json").string(), run_id, cfg,
                         file_basename(a.data));

    out << "run " << run_id << "\n";
    for (std::size_t i = 0; i < result.rows.size(); ++i) {
        const EpochRow& r = result.rows[i];
        const bool last_of_phase = i + 1 == result.rows.size() ||
                                   result.rows[i + 1].phase != r.phase;
        if (!last_of_phase) continue;
        out << r.phase << " epochs " << r.epoch + 1 << "  loss "
            << num(r.train_loss);
        if (r.sf_term != 0.0) out << "  sf_term " << num(r.sf_term);
        if (std::isfinite(r.val_mse))
            out << "  val_mse " << num(r.val_mse) << "  val_mae "
                << num(r.val_mae);
        out << "\n";
    }
    out << "wrote " << (dir / "model.ckpt").string()
        << ", metrics.jsonl, manifest.json\n";
    return 0;
}

// ------------------------------------------------------------- evaluate ----

struct EvalArgs {
    std::string ckpt, data;
    std::string strategy = "delayed";
    std::string dump;
    bool no_adapter = false;
    double train_frac = SplitSpec{}.train_frac;
    double val_frac = SplitSpec{}.val_frac;
};

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(a.ckpt);
    const TimeSeriesTable table = load_csv(a.data);
    const SplitSeries splits =
        split_and_normalize(table, SplitSpec{a.train_frac, a.val_frac});

    const int need = ck.model.lookback() + ck.model.horizon();
    TimeSeriesTable context = concat_tables(splits.train, splits.val);
    if (context.length() > need) context = tail_rows(context, need);

    PredictOptions opts;
    opts.strategy = parse_strategy_name(a.strategy);
    opts.window_norm = ck.window_norm;
    const Adapter* adapter =
        (!a.no_adapter && ck.adapter) ? &*ck.adapter : nullptr;
    const RollingResult rr =
        rolling_evaluate(ck.model, adapter, context, splits.test, opts, a.dump);

    out << "base      mse " << num(rr.base.mse) << "  mae " << num(rr.base.mae)
        << "\n";
    out << "corrected mse " << num(rr.corrected.mse) << "  mae "
        << num(rr.corrected.mae) << "\n";
    if (!a.dump.empty()) out << "wrote " << a.dump << "\n";
    return 0;
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
    std::string kind, in, out;
    std::uint64_t seed = 0;
    int length = 2000;
    int channels = 3;
    int burn_in = 200;
    double sigma_eps = SsmSpec{}.sigma_eps;
    double sigma_eta = SsmSpec{}.sigma_eta;
    int n_shocks = ShockSpec{}.n_shocks;
    double amplitude = ShockSpec{}.amplitude;
    int duration = ShockSpec{}.duration;
};

int cmd_synth(const SynthArgs& a, const CLI::App* cmd, std::ostream& out) {
    TimeSeriesTable table;
    if (a.kind == "ssm") {
        SsmSpec spec;
        spec.sigma_eps = a.sigma_eps;
        spec.sigma_eta = a.sigma_eta;
        table = ssm_table(spec, a.length, a.burn_in, a.channels, a.seed);
    } else {
        if (a.in.empty())
            throw UsageError("synth --kind " + a.kind +
                             " reads an existing table; pass --in <csv>");
        if (a.kind == "shocks") {
            ShockSpec spec;
            spec.n_shocks = a.n_shocks;
            spec.amplitude = a.amplitude;
            spec.duration = a.duration;
            table = inject_shocks(load_csv(a.in), spec);
        } else {  // drift; --kind membership is validated by the parser
            table = inject_drift(load_csv(a.in));
        }
    }

    write_csv(table, a.out);
    write_sidecar_manifest(a.out, "synth", parsed_args(cmd));
    out << "wrote " << a.out << " rows " << table.length() << " channels "
        << table.channels() << "\n";
    return 0;
}

// --------------------------------------------------------------- theory ----

struct TheoryArgs {
    std::string check, out;
    std::vector<double> sigma_eps;
    double sigma_eta = 0.0;
    long long T = 0;
    int seeds = 0;
    int M = 0;
    int blocks = 0;
    std::uint64_t seed0 = 0;
};

int cmd_theory(const TheoryArgs& a, const CLI::App* cmd, std::ostream& out) {
    std::ofstream csv(a.out, std::ios::binary);
    if (!csv) throw IoError("cannot write " + a.out);

    std::size_t n_rows = 0;
    if (a.check == "prop1") {
        Prop1Config cfg;
        if (!a.sigma_eps.empty()) cfg.sigma_grid = a.sigma_eps;
        if (cmd->count("--sigma-eta")) cfg.base.sigma_eta = a.sigma_eta;
        if (cmd->count("--T")) cfg.T = a.T;
        if (cmd->count("--seeds")) cfg.seeds = a.seeds;
        if (cmd->count("--M")) cfg.M = a.M;
        if (cmd->count("--seed0")) cfg.seed0 = a.seed0;
        if (cmd->count("--blocks")) cfg.blocks = a.blocks;
        const std::vector<Prop1Row> rows = verify_prop1(cfg);
        csv << "sigma_eps,seed,gamma_hat,predicted,ratio,stderr,mu_f_prime,"
               "gamma_plugin,ratio_plugin,stderr_plugin\n";
        for (const Prop1Row& r : rows)
            csv << num(r.sigma_eps) << ',' << r.seed_index << ','
                << num(r.gamma_hat) << ',' << num(r.predicted) << ','
                << num(r.ratio) << ',' << num(r.stderr_gamma) << ','
                << num(r.mu_f_prime) << ',' << num(r.gamma_plugin) << ','
                << num(r.ratio_plugin) << ',' << num(r.stderr_plugin) << "\n";
        n_rows = rows.size();
    } else {  // thm1; --check membership is validated by the parser
        Thm1Config cfg;
        if (a.sigma_eps.size() > 1)
            throw UsageError("flag '--sigma-eps' takes one value for thm1");
        if (!a.sigma_eps.empty()) cfg.sigma_eps = a.sigma_eps.front();
        if (cmd->count("--sigma-eta")) cfg.base.sigma_eta = a.sigma_eta;
        if (cmd->count("--T")) cfg.T = a.T;
        if (cmd->count("--seeds")) cfg.seeds = a.seeds;
        if (cmd->count("--M")) cfg.M = a.M;
        if (cmd->count("--seed0")) cfg.seed0 = a.seed0;
        const std::vector<Thm1Row> rows = verify_thm1(cfg);
        csv << "seed,gamma_hat,var_hat,beta,mse_base,mse_tefl,"
               "predicted_reduction,realized_reduction\n";
        for (const Thm1Row& r : rows)
            csv << r.seed_index << ',' << num(r.gamma_hat) << ','
                << num(r.var_hat) << ',' << num(r.beta) << ','
                << num(r.mse_base) << ',' << num(r.mse_tefl) << ','
                << num(r.predicted_reduction) << ','
                << num(r.realized_reduction) << "\n";
        n_rows = rows.size();
    }
    csv.close();
    write_sidecar_manifest(a.out, "theory", parsed_args(cmd));
    out << "wrote " << a.out << " (" << n_rows << " rows)\n";
    return 0;
}

// --------------------------------------------------------------- ablate ----

struct AblateArgs {
    std::string suite, config;
    int seeds = 5;
    int length = 2400;
    std::uint64_t data_seed = 1;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
    const TrainConfig base = parse_config_file(a.config);

    std::vector<std::pair<std::string, TrainConfig>> variants;
    auto add = [&](const std::string& name, auto setter) {
        TrainConfig cfg = base;
        setter(cfg);
        variants.emplace_back(name, cfg);
    };
    if (a.suite == "strategy") {
        add("tefl", [](TrainConfig& c) { c.strategy = TrainStrategy::Tefl; });
        add("nosf", [](TrainConfig& c) { c.strategy = TrainStrategy::NoSf; });
        add("type1", [](TrainConfig& c) { c.strategy = TrainStrategy::Type1; });
        add("type2", [](TrainConfig& c) { c.strategy = TrainStrategy::Type2; });
    } else if (a.suite == "selection") {
        add("delayed", [](TrainConfig& c) {
            c.selection = SelectionStrategy::DelayedFullHorizon;
        });
        add("onestep", [](TrainConfig& c) {
            c.selection = SelectionStrategy::OneStepHistory;
        });
        add("fixedtarget", [](TrainConfig& c) {
            c.selection = SelectionStrategy::FixedTargetHistory;
        });
    } else {  // adapter; --suite membership is validated by the parser
        add("lowrank", [](TrainConfig& c) { c.adapter = AdapterKind::LowRank; });
        add("gate", [](TrainConfig& c) { c.adapter = AdapterKind::Gate; });
        add("fuse", [](TrainConfig& c) { c.adapter = AdapterKind::Fuse; });
    }

    // Paired design: per seed one shared synthetic series, every variant
    // trained and scored on the same splits.
    std::vector<std::vector<double>> mae(variants.size());
    for (int k = 0; k < a.seeds; ++k) {
        SsmSpec spec;
        spec.sigma_eps = 0.2;
        const TimeSeriesTable table =
            ssm_table(spec, a.length, 200, 3, a.data_seed + std::uint64_t(k));
        const SplitSeries splits = split_and_normalize(
            table, SplitSpec{base.train_frac, base.val_frac});
        for (std::size_t v = 0; v < variants.size(); ++v) {
            TrainConfig cfg = variants[v].second;
            cfg.seed = base.seed + std::uint64_t(k);
            const TrainResult res = run_training(cfg, splits);
            TimeSeriesTable context = concat_tables(splits.train, splits.val);
            const int need = cfg.lookback + cfg.horizon;
            if (context.length() > need) context = tail_rows(context, need);
            PredictOptions opts;
            opts.strategy = cfg.selection;
            opts.window_norm = cfg.window_norm;
            const Adapter* adapter =
                res.checkpoint.adapter ? &*res.checkpoint.adapter : nullptr;
            const RollingResult rr = rolling_evaluate(
                res.checkpoint.model, adapter, context, splits.test, opts);
            mae[v].push_back(rr.corrected.mae);
        }
    }

    out << "suite " << a.suite << "  seeds " << a.seeds
        << "  (rolling test MAE of the corrected forecast)\n";
    char line[256];
    for (std::size_t v = 0; v < variants.size(); ++v) {
        std::vector<double> sorted = mae[v];
        std::sort(sorted.begin(), sorted.end());
        const std::size_t n = sorted.size();
        const double med = n % 2 ? sorted[n / 2]
                                 : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        std::snprintf(line, sizeof line, "%-12s median %.6f ",
                      variants[v].first.c_str(), med);
        out << line;
        for (double m : mae[v]) {
            std::snprintf(line, sizeof line, " %.6f", m);
            out << line;
        }
        out << "\n";
    }
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
    int code = 0;
    try {
        CLI::App app{"", "tefl"};
        app.require_subcommand(1);

        TrainArgs ta;
        CLI::App* train = app.add_subcommand("train");
        train->add_option("--config", ta.config)->required();
        train->add_option("--data", ta.data)->required();
        train->add_option("--out", ta.out)->required();
        train->callback([&] { code = cmd_train(ta, out, err); });

        EvalArgs ea;
        CLI::App* evaluate = app.add_subcommand("evaluate");
        evaluate->add_option("--ckpt", ea.ckpt)->required();
        evaluate->add_option("--data", ea.data)->required();
        evaluate->add_option("--strategy", ea.strategy)
            ->check(CLI::IsMember({"delayed", "onestep", "fixedtarget"}));
        evaluate->add_flag("--no-adapter", ea.no_adapter);
        evaluate->add_option("--dump", ea.dump);
        evaluate->add_option("--train-frac", ea.train_frac);
        evaluate->add_option("--val-frac", ea.val_frac);
        evaluate->callback([&] { code = cmd_evaluate(ea, out); });

        SynthArgs sa;
        CLI::App* synth = app.add_subcommand("synth");
        synth->add_option("--kind", sa.kind)
            ->required()
            ->check(CLI::IsMember({"ssm", "shocks", "drift"}));
        synth->add_option("--out", sa.out)->required();
        synth->add_option("--in", sa.in);
        synth->add_option("--seed", sa.seed);
        synth->add_option("--length", sa.length);
        synth->add_option("--channels", sa.channels);
        synth->add_option("--burn-in", sa.burn_in);
        synth->add_option("--sigma-eps", sa.sigma_eps);
        synth->add_option("--sigma-eta", sa.sigma_eta);
        synth->add_option("--n-shocks", sa.n_shocks);
        synth->add_option("--amplitude", sa.amplitude);
        synth->add_option("--duration", sa.duration);
        synth->callback([&] { code = cmd_synth(sa, synth, out); });

        TheoryArgs tha;
        CLI::App* theory = app.add_subcommand("theory");
        theory->add_option("--check", tha.check)
            ->required()
            ->check(CLI::IsMember({"prop1", "thm1"}));
        theory->add_option("--out", tha.out)->required();
        theory->add_option("--sigma-eps", tha.sigma_eps);
        theory->add_option("--sigma-eta", tha.sigma_eta);
        theory->add_option("--T", tha.T);
        theory->add_option("--seeds", tha.seeds);
        theory->add_option("--M", tha.M);
        theory->add_option("--seed0", tha.seed0);
        theory->add_option("--blocks", tha.blocks);
        theory->callback([&] { code = cmd_theory(tha, theory, out); });

        AblateArgs aa;
        CLI::App* ablate = app.add_subcommand("ablate");
        ablate->add_option("--suite", aa.suite)
            ->required()
            ->check(CLI::IsMember({"strategy", "selection", "adapter"}));
        ablate->add_option("--config", aa.config)->required();
        ablate->add_option("--seeds", aa.seeds);
        ablate->add_option("--length", aa.length);
        ablate->add_option("--data-seed", aa.data_seed);
        ablate->callback([&] { code = cmd_ablate(aa, out); });

        if (!args.empty() && !args[0].empty() && args[0][0] != '-' &&
            app.get_subcommand_no_throw(args[0]) == nullptr)
            throw UsageError("unknown subcommand '" + args[0] + "'");

        // CLI11's vector interface consumes tokens back to front.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
        return code;
    } catch (const CLI::CallForHelp&) {
        out << kUsage;
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << kUsage;
        return 1;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n" << kUsage;
        return 1;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidInput& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const NotEnoughData& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const MissingHistory& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace tefl
