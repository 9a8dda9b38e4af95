#include "tefl/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tefl/errors.hpp"

namespace tefl {

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(strip(line.substr(start)));
            break;
        }
        out.push_back(strip(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

double parse_cell(const std::string& field, std::size_t row, std::size_t col) {
    if (field.empty()) throw ParseError(row, col, "empty cell");
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError(row, col, "not a number: '" + field + "'");
    return value;
}

void append_number(std::string& out, double x) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    out.append(buf, ptr);
}

TimeSeriesTable slice_rows(const TimeSeriesTable& t, int begin, int end) {
    TimeSeriesTable out;
    out.channel_names = t.channel_names;
    out.origin = t.origin;
    out.values = Mat(end - begin, t.channels());
    for (int r = begin; r < end; ++r)
        for (int c = 0; c < t.channels(); ++c)
            out.values(r - begin, c) = t.values(r, c);
    return out;
}

Mat copy_rows(const Mat& m, int begin, int end) {
    Mat out(end - begin, m.cols);
    for (int r = begin; r < end; ++r)
        for (int c = 0; c < m.cols; ++c) out(r - begin, c) = m(r, c);
    return out;
}

}  // namespace

TimeSeriesTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw IoError("'" + path + "': empty file");
    const std::vector<std::string> header = split_fields(line);

    std::vector<int> keep;  // header indices that are data channels
    TimeSeriesTable table;
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        if (lower(header[i]) == "date") continue;
        keep.push_back(i);
        table.channel_names.push_back(header[i]);
    }
    if (keep.empty()) throw IoError("'" + path + "': no data columns");

    std::vector<double> flat;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (strip(line).empty()) continue;
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != header.size())
            throw ParseError(row, std::min(fields.size(), header.size()),
                             "expected " + std::to_string(header.size()) +
                                 " fields, got " + std::to_string(fields.size()));
        for (std::size_t j = 0; j < keep.size(); ++j)
            flat.push_back(parse_cell(fields[keep[j]], row, j));
        ++row;
    }
    if (row == 0) throw IoError("'" + path + "': no rows");

    table.values = Mat(static_cast<int>(row), static_cast<int>(keep.size()));
    table.values.v = std::move(flat);
    table.origin = path;
    return table;
}

void write_csv(const TimeSeriesTable& table, const std::string& path) {
    std::string out;
    for (int c = 0; c < table.channels(); ++c) {
        if (c) out += ',';
        out += table.channel_names.empty() ? "ch" + std::to_string(c)
                                           : table.channel_names[c];
    }
    out += '\n';
    for (int r = 0; r < table.length(); ++r) {
        for (int c = 0; c < table.channels(); ++c) {
            if (c) out += ',';
            append_number(out, table.values(r, c));
        }
        out += '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write '" + path + "'");
    f << out;
    if (!f) throw IoError("write failed for '" + path + "'");
}

SplitSeries split_and_normalize(const TimeSeriesTable& table, SplitSpec spec) {
    const int T = table.length();
    const int d = table.channels();
    if (T < 3) throw NotEnoughData("split: need at least 3 rows");
    if (spec.train_frac <= 0 || spec.val_frac < 0 ||
        spec.train_frac + spec.val_frac >= 1.0)
        throw InvalidInput("split: fractions must satisfy 0 < train, 0 <= val, train+val < 1");

    const int n_train = static_cast<int>(std::floor(spec.train_frac * T));
    const int n_val = static_cast<int>(std::floor(spec.val_frac * T));
    if (n_train < 1 || T - n_train - n_val < 1)
        throw NotEnoughData("split: a split would be empty");

    SplitSeries out;
    out.stats.mean.assign(d, 0.0);
    out.stats.stddev.assign(d, 0.0);
    for (int c = 0; c < d; ++c) {
        double sum = 0.0;
        for (int r = 0; r < n_train; ++r) sum += table.values(r, c);
        const double mean = sum / n_train;
        double ss = 0.0;
        for (int r = 0; r < n_train; ++r) {
            const double dlt = table.values(r, c) - mean;
            ss += dlt * dlt;
        }
        out.stats.mean[c] = mean;
        out.stats.stddev[c] = std::max(std::sqrt(ss / n_train), kStdFloor);
    }

    TimeSeriesTable norm;
    norm.channel_names = table.channel_names;
    norm.origin = table.origin;
    norm.values = Mat(T, d);
    for (int r = 0; r < T; ++r)
        for (int c = 0; c < d; ++c)
            norm.values(r, c) =
                (table.values(r, c) - out.stats.mean[c]) / out.stats.stddev[c];

    out.train = slice_rows(norm, 0, n_train);
    out.val = slice_rows(norm, n_train, n_train + n_val);
    out.test = slice_rows(norm, n_train + n_val, T);
    return out;
}

SplitSeries split_only(const TimeSeriesTable& table, SplitSpec spec,
                       NormStats stats) {
    const int T = table.length();
    if (T < 3) throw NotEnoughData("split: need at least 3 rows");
    if (spec.train_frac <= 0 || spec.val_frac < 0 ||
        spec.train_frac + spec.val_frac >= 1.0)
        throw InvalidInput("split: fractions must satisfy 0 < train, 0 <= val, train+val < 1");
    const int n_train = static_cast<int>(std::floor(spec.train_frac * T));
    const int n_val = static_cast<int>(std::floor(spec.val_frac * T));
    if (n_train < 1 || T - n_train - n_val < 1)
        throw NotEnoughData("split: a split would be empty");

    SplitSeries out;
    out.stats = std::move(stats);
    out.train = slice_rows(table, 0, n_train);
    out.val = slice_rows(table, n_train, n_train + n_val);
    out.test = slice_rows(table, n_train + n_val, T);
    return out;
}

TimeSeriesTable concat_tables(const TimeSeriesTable& a,
                              const TimeSeriesTable& b) {
    if (a.channels() != b.channels())
        throw InvalidInput("concat: channel count mismatch");
    TimeSeriesTable out;
    out.channel_names = a.channel_names;
    out.origin = a.origin;
    out.values = Mat(a.length() + b.length(), a.channels());
    std::copy(a.values.v.begin(), a.values.v.end(), out.values.v.begin());
    std::copy(b.values.v.begin(), b.values.v.end(),
              out.values.v.begin() + a.values.v.size());
    return out;
}

TimeSeriesTable tail_rows(const TimeSeriesTable& table, int n) {
    if (n < 0 || n > table.length())
        throw InvalidInput("tail_rows: n out of range");
    return slice_rows(table, table.length() - n, table.length());
}

std::vector<Phase1Batch> make_phase1_batches(const TimeSeriesTable& series,
                                             int lookback, int horizon,
                                             int batch_size) {
    const int T = series.length();
    if (lookback < 1 || horizon < 1) throw InvalidInput("windows: lookback and horizon must be positive");
    if (batch_size < 1) throw InvalidInput("windows: batch_size must be positive");
    if (T < lookback + horizon)
        throw NotEnoughData("windows: series length " + std::to_string(T) +
                            " < lookback+horizon " + std::to_string(lookback + horizon));

    std::vector<Phase1Batch> batches;
    Phase1Batch cur;
    for (int t = lookback; t + horizon <= T; ++t) {
        WindowSample s;
        s.anchor = t;
        s.x = copy_rows(series.values, t - lookback, t);
        s.y = copy_rows(series.values, t, t + horizon);
        cur.samples.push_back(std::move(s));
        if (static_cast<int>(cur.samples.size()) == batch_size) {
            batches.push_back(std::move(cur));
            cur = Phase1Batch{};
        }
    }
    if (!cur.samples.empty()) batches.push_back(std::move(cur));
    return batches;
}

std::vector<Phase2Segment> make_phase2_segments(const TimeSeriesTable& series,
                                                int lookback, int horizon,
                                                int stride) {
    const int T = series.length();
    const int L = lookback, H = horizon;
    if (L < 1 || H < 1) throw InvalidInput("segments: lookback and horizon must be positive");
    if (stride < 1) throw InvalidInput("segments: stride must be positive");
    if (T < L + 2 * H)
        throw NotEnoughData("segments: series length " + std::to_string(T) +
                            " < lookback+2*horizon " + std::to_string(L + 2 * H));

    std::vector<Phase2Segment> segs;
    for (int t = L + H; t + H <= T; t += stride) {
        Phase2Segment s;
        s.anchor = t;
        s.x_ctx = copy_rows(series.values, t - H - L, t - H);
        s.y_hist = copy_rows(series.values, t - H, t);
        s.x_in = copy_rows(series.values, t - L, t);
        s.y_tgt = copy_rows(series.values, t, t + H);
        segs.push_back(std::move(s));
    }
    return segs;
}

TimeSeriesTable inject_shocks(const TimeSeriesTable& table, ShockSpec spec) {
    const int T = table.length();
    if (spec.n_shocks < 1 || spec.n_shocks > T)
        throw InvalidInput("shocks: n_shocks must be in [1, T]");
    if (spec.duration < 1) throw InvalidInput("shocks: duration must be positive");
    if (!std::isfinite(spec.amplitude)) throw InvalidInput("shocks: amplitude must be finite");

    TimeSeriesTable out = table;
    for (int i = 0; i < spec.n_shocks; ++i) {
        const int onset = static_cast<int>(
            (static_cast<long long>(i) * T) / spec.n_shocks);
        for (int k = 0; k < spec.duration && onset + k < T; ++k) {
            const double bump =
                spec.amplitude * (1.0 - static_cast<double>(k) / spec.duration);
            for (int c = 0; c < table.channels(); ++c)
                out.values(onset + k, c) += bump;
        }
    }
    return out;
}

TimeSeriesTable inject_drift(const TimeSeriesTable& table) {
    const int T = table.length();
    TimeSeriesTable out = table;
    const double half = 0.5 * T;
    for (int t = 0; t < T; ++t) {
        if (t <= half) continue;
        const double bump = 4.0 * (t - half) / T;
        for (int c = 0; c < table.channels(); ++c) out.values(t, c) += bump;
    }
    return out;
}

}  // namespace tefl
