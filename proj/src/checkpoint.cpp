#include "tefl/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "tefl/errors.hpp"

namespace tefl {

namespace {

void append_number(std::string& out, double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    out.append(buf, ptr);
}

void write_params(std::string& out, ParamChunks chunks) {
    std::size_t on_line = 0;
    for (std::size_t c = 0; c < chunks.ptrs.size(); ++c) {
        const double* p = chunks.ptrs[c].first;
        for (std::size_t i = 0; i < chunks.sizes[c]; ++i) {
            append_number(out, p[i]);
            if (++on_line == 8) {
                out += '\n';
                on_line = 0;
            } else {
                out += ' ';
            }
        }
    }
    if (on_line) out += '\n';
}

struct TokenStream {
    std::istringstream in;
    explicit TokenStream(std::string s) : in(std::move(s)) {}

    double next_double(const char* what) {
        std::string tok;
        if (!(in >> tok)) throw IoError(std::string("checkpoint: missing ") + what);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc() || ptr != tok.data() + tok.size())
            throw IoError("checkpoint: bad number '" + tok + "'");
        return v;
    }

    bool exhausted() {
        std::string tok;
        return !(in >> tok);
    }
};

void read_params(TokenStream& ts, ParamChunks chunks) {
    for (std::size_t c = 0; c < chunks.ptrs.size(); ++c) {
        double* p = chunks.ptrs[c].first;
        for (std::size_t i = 0; i < chunks.sizes[c]; ++i)
            p[i] = ts.next_double("parameter");
    }
}

int parse_int(const std::string& tok, const char* what) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || v < 1)
        throw IoError(std::string("checkpoint: bad ") + what + " '" + tok + "'");
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    std::string out = kCheckpointMagic;
    out += '\n';

    Forecaster model = ckpt.model;  // chunks() needs mutable access
    if (const auto* lin = std::get_if<LinearForecaster>(&model.model)) {
        out += "linear " + std::to_string(lin->lookback) + ' ' +
               std::to_string(lin->horizon);
    } else {
        const auto& m = std::get<MlpForecaster>(model.model);
        out += "mlp " + std::to_string(m.lookback) + ' ' +
               std::to_string(m.hidden) + ' ' + std::to_string(m.horizon);
    }
    out += ckpt.window_norm ? " wnorm=on\n" : " wnorm=off\n";

    std::optional<Adapter> adapter = ckpt.adapter;
    if (!adapter) {
        out += "none\n";
    } else {
        switch (adapter->kind()) {
            case AdapterKind::LowRank: out += "lowrank "; break;
            case AdapterKind::Gate: out += "gate "; break;
            case AdapterKind::Fuse: out += "fuse "; break;
        }
        out += std::to_string(adapter->horizon()) + ' ' +
               std::to_string(adapter->rank()) + '\n';
    }

    write_params(out, model.chunks());
    if (adapter) write_params(out, adapter->chunks());

    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path + "'");
    f << out;
    if (!f) throw IoError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    std::string content = buf.str();

    std::istringstream lines(content);
    std::string magic;
    if (!std::getline(lines, magic) || magic != kCheckpointMagic)
        throw IoError("'" + path + "': line 1: not a recognized checkpoint");

    std::string model_line;
    if (!std::getline(lines, model_line))
        throw IoError("'" + path + "': line 2: missing model description");
    std::istringstream ml(model_line);
    std::string kind;
    ml >> kind;

    Checkpoint ckpt;
    std::string tok;
    if (kind == "linear") {
        std::string ls, hs;
        if (!(ml >> ls >> hs)) throw IoError("'" + path + "': line 2: missing dims");
        ckpt.model = make_linear_forecaster(parse_int(ls, "lookback"),
                                            parse_int(hs, "horizon"));
    } else if (kind == "mlp") {
        std::string ls, ws, hs;
        if (!(ml >> ls >> ws >> hs)) throw IoError("'" + path + "': line 2: missing dims");
        ckpt.model = make_mlp_forecaster(parse_int(ls, "lookback"),
                                         parse_int(hs, "horizon"),
                                         parse_int(ws, "hidden width"));
    } else {
        throw IoError("'" + path + "': line 2: unknown model kind '" + kind + "'");
    }
    if (!(ml >> tok) || (tok != "wnorm=on" && tok != "wnorm=off"))
        throw IoError("'" + path + "': line 2: missing wnorm flag");
    ckpt.window_norm = tok == "wnorm=on";

    std::string adapter_line;
    if (!std::getline(lines, adapter_line))
        throw IoError("'" + path + "': line 3: missing adapter description");
    std::istringstream al(adapter_line);
    std::string akind;
    al >> akind;
    if (akind != "none") {
        AdapterKind k;
        if (akind == "lowrank") k = AdapterKind::LowRank;
        else if (akind == "gate") k = AdapterKind::Gate;
        else if (akind == "fuse") k = AdapterKind::Fuse;
        else throw IoError("'" + path + "': line 3: unknown adapter kind '" + akind + "'");
        std::string hs, rs;
        if (!(al >> hs >> rs)) throw IoError("'" + path + "': line 3: missing dims");
        ckpt.adapter = make_adapter(k, parse_int(hs, "horizon"), parse_int(rs, "rank"));
    }

    std::string rest((std::istreambuf_iterator<char>(lines)),
                     std::istreambuf_iterator<char>());
    TokenStream ts(std::move(rest));
    read_params(ts, ckpt.model.chunks());
    if (ckpt.adapter) read_params(ts, ckpt.adapter->chunks());
    if (!ts.exhausted())
        throw IoError("'" + path + "': trailing data after parameters");
    return ckpt;
}

}  // namespace tefl
