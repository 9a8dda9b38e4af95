#include "tefl/adapter.hpp"

#include <cmath>

#include "tefl/rng.hpp"

namespace tefl {

namespace {

void fill_gaussian(Mat& m, RngState& rng, double scale) {
    for (double& x : m.v) x = scale * rng.normal();
}

void add_chunk(ParamChunks& c, Mat& p, const Mat& g) {
    c.ptrs.emplace_back(p.v.data(), g.v.data());
    c.sizes.push_back(p.size());
}

void check_io(const Mat& eps, const Mat& yhat, int horizon, const char* who) {
    if (eps.cols != horizon || yhat.cols != horizon || eps.rows != yhat.rows)
        throw InvalidInput(std::string(who) + ": inputs must be d x horizon");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

Mat LowRankAdapter::forward(const Mat& eps, const Mat& yhat) const {
    check_io(eps, yhat, horizon, "lowrank forward");
    const int d = eps.rows;
    Mat out = yhat;
    std::vector<double> u(rank);
    for (int c = 0; c < d; ++c) {
        const double* e = eps.row_ptr(c);
        for (int j = 0; j < rank; ++j) {
            double acc = 0.0;
            for (int h = 0; h < horizon; ++h) acc += e[h] * W1(h, j);
            u[j] = acc > 0.0 ? acc : 0.0;
        }
        double* o = out.row_ptr(c);
        for (int j = 0; j < rank; ++j) {
            if (u[j] == 0.0) continue;
            const double* wrow = W2.row_ptr(j);
            for (int h = 0; h < horizon; ++h) o[h] += u[j] * wrow[h];
        }
    }
    return out;
}

AdapterGrads LowRankAdapter::backprop(const Mat& eps, const Mat& yhat,
                                      const Mat& grad_out) {
    check_io(eps, yhat, horizon, "lowrank backprop");
    const int d = eps.rows;
    AdapterGrads g{Mat(d, horizon), grad_out};
    std::vector<double> u(rank), du(rank);
    for (int c = 0; c < d; ++c) {
        const double* e = eps.row_ptr(c);
        const double* go = grad_out.row_ptr(c);
        for (int j = 0; j < rank; ++j) {
            double acc = 0.0;
            for (int h = 0; h < horizon; ++h) acc += e[h] * W1(h, j);
            u[j] = acc;
        }
        // dW2[j][h] += a_j * go[h]; du_j = [u_j > 0] * sum_h W2[j][h] * go[h].
        for (int j = 0; j < rank; ++j) {
            const double a = u[j] > 0.0 ? u[j] : 0.0;
            const double* wrow = W2.row_ptr(j);
            double* gwrow = gW2.row_ptr(j);
            double acc = 0.0;
            for (int h = 0; h < horizon; ++h) {
                if (a != 0.0) gwrow[h] += a * go[h];
                acc += wrow[h] * go[h];
            }
            du[j] = u[j] > 0.0 ? acc : 0.0;
        }
        // dW1[h][j] += e[h] * du_j; d_eps[h] = sum_j W1[h][j] * du_j.
        double* ge = g.d_eps.row_ptr(c);
        for (int h = 0; h < horizon; ++h) {
            const double* wrow = W1.row_ptr(h);
            double* gwrow = gW1.row_ptr(h);
            double acc = 0.0;
            for (int j = 0; j < rank; ++j) {
                gwrow[j] += e[h] * du[j];
                acc += wrow[j] * du[j];
            }
            ge[h] = acc;
        }
    }
    return g;
}

void LowRankAdapter::zero_grad() {
    gW1.fill(0.0);
    gW2.fill(0.0);
}

ParamChunks LowRankAdapter::chunks() {
    ParamChunks c;
    add_chunk(c, W1, gW1);
    add_chunk(c, W2, gW2);
    return c;
}

Mat GateAdapter::forward(const Mat& eps, const Mat& yhat) const {
    check_io(eps, yhat, horizon, "gate forward");
    const int d = eps.rows;
    Mat out = yhat;
    std::vector<double> h1(rank), h2(rank);
    for (int c = 0; c < d; ++c) {
        const double* e = eps.row_ptr(c);
        for (int j = 0; j < rank; ++j) {
            double uc = c1(0, j), ug = d1(0, j);
            for (int h = 0; h < horizon; ++h) {
                uc += e[h] * V1(h, j);
                ug += e[h] * G1(h, j);
            }
            h1[j] = uc > 0.0 ? uc : 0.0;
            h2[j] = ug > 0.0 ? ug : 0.0;
        }
        double z = d0(0, 0);
        for (int j = 0; j < rank; ++j) z += h2[j] * g2(j, 0);
        const double s = sigmoid(z);
        double* o = out.row_ptr(c);
        for (int h = 0; h < horizon; ++h) {
            double corr = c2(0, h);
            for (int j = 0; j < rank; ++j) corr += h1[j] * V2(j, h);
            o[h] += s * corr;
        }
    }
    return out;
}

AdapterGrads GateAdapter::backprop(const Mat& eps, const Mat& yhat,
                                   const Mat& grad_out) {
    check_io(eps, yhat, horizon, "gate backprop");
    const int d = eps.rows;
    AdapterGrads g{Mat(d, horizon), grad_out};
    std::vector<double> u1(rank), u2(rank), h1(rank), h2(rank);
    std::vector<double> corr(horizon), dcorr(horizon), dh1(rank), dh2(rank);
    for (int c = 0; c < d; ++c) {
        const double* e = eps.row_ptr(c);
        const double* go = grad_out.row_ptr(c);
        for (int j = 0; j < rank; ++j) {
            double uc = c1(0, j), ug = d1(0, j);
            for (int h = 0; h < horizon; ++h) {
                uc += e[h] * V1(h, j);
                ug += e[h] * G1(h, j);
            }
            u1[j] = uc;
            u2[j] = ug;
            h1[j] = uc > 0.0 ? uc : 0.0;
            h2[j] = ug > 0.0 ? ug : 0.0;
        }
        double z = d0(0, 0);
        for (int j = 0; j < rank; ++j) z += h2[j] * g2(j, 0);
        const double s = sigmoid(z);
        for (int h = 0; h < horizon; ++h) {
            double acc = c2(0, h);
            for (int j = 0; j < rank; ++j) acc += h1[j] * V2(j, h);
            corr[h] = acc;
        }

        // out = yhat + s * corr: ds = <go, corr>, dcorr = s * go.
        double ds = 0.0;
        for (int h = 0; h < horizon; ++h) {
            ds += go[h] * corr[h];
            dcorr[h] = s * go[h];
            gc2(0, h) += dcorr[h];
        }
        const double dz = ds * s * (1.0 - s);
        gd0(0, 0) += dz;

        for (int j = 0; j < rank; ++j) {
            double acc = 0.0;
            const double* vrow = V2.row_ptr(j);
            double* gvrow = gV2.row_ptr(j);
            for (int h = 0; h < horizon; ++h) {
                if (h1[j] != 0.0) gvrow[h] += h1[j] * dcorr[h];
                acc += vrow[h] * dcorr[h];
            }
            dh1[j] = u1[j] > 0.0 ? acc : 0.0;
            gg2(j, 0) += h2[j] * dz;
            dh2[j] = u2[j] > 0.0 ? g2(j, 0) * dz : 0.0;
            gc1(0, j) += dh1[j];
            gd1(0, j) += dh2[j];
        }

        double* ge = g.d_eps.row_ptr(c);
        for (int h = 0; h < horizon; ++h) {
            double acc = 0.0;
            const double* v1row = V1.row_ptr(h);
            const double* g1row = G1.row_ptr(h);
            double* gv1row = gV1.row_ptr(h);
            double* gg1row = gG1.row_ptr(h);
            for (int j = 0; j < rank; ++j) {
                gv1row[j] += e[h] * dh1[j];
                gg1row[j] += e[h] * dh2[j];
                acc += v1row[j] * dh1[j] + g1row[j] * dh2[j];
            }
            ge[h] = acc;
        }
    }
    return g;
}

void GateAdapter::zero_grad() {
    gV1.fill(0.0);
    gc1.fill(0.0);
    gV2.fill(0.0);
    gc2.fill(0.0);
    gG1.fill(0.0);
    gd1.fill(0.0);
    gg2.fill(0.0);
    gd0.fill(0.0);
}

ParamChunks GateAdapter::chunks() {
    ParamChunks c;
    add_chunk(c, V1, gV1);
    add_chunk(c, c1, gc1);
    add_chunk(c, V2, gV2);
    add_chunk(c, c2, gc2);
    add_chunk(c, G1, gG1);
    add_chunk(c, d1, gd1);
    add_chunk(c, g2, gg2);
    add_chunk(c, d0, gd0);
    return c;
}

Mat FuseAdapter::forward(const Mat& eps, const Mat& yhat) const {
    check_io(eps, yhat, horizon, "fuse forward");
    const int d = eps.rows;
    Mat out(d, horizon);
    std::vector<double> u(rank);
    for (int c = 0; c < d; ++c) {
        const double* e = eps.row_ptr(c);
        const double* p = yhat.row_ptr(c);
        for (int j = 0; j < rank; ++j) {
            double acc = bh(0, j);
            for (int h = 0; h < horizon; ++h) acc += e[h] * We(h, j) + p[h] * Wp(h, j);
            u[j] = acc > 0.0 ? acc : 0.0;
        }
        double* o = out.row_ptr(c);
        for (int h = 0; h < horizon; ++h) o[h] = bo(0, h);
        for (int j = 0; j < rank; ++j) {
            if (u[j] == 0.0) continue;
            const double* wrow = Wo.row_ptr(j);
            for (int h = 0; h < horizon; ++h) o[h] += u[j] * wrow[h];
        }
    }
    return out;
}

AdapterGrads FuseAdapter::backprop(const Mat& eps, const Mat& yhat,
                                   const Mat& grad_out) {
    check_io(eps, yhat, horizon, "fuse backprop");
    const int d = eps.rows;
    AdapterGrads g{Mat(d, horizon), Mat(d, horizon)};
    std::vector<double> u(rank), du(rank);
    for (int c = 0; c < d; ++c) {
        const double* e = eps.row_ptr(c);
        const double* p = yhat.row_ptr(c);
        const double* go = grad_out.row_ptr(c);
        for (int j = 0; j < rank; ++j) {
            double acc = bh(0, j);
            for (int h = 0; h < horizon; ++h) acc += e[h] * We(h, j) + p[h] * Wp(h, j);
            u[j] = acc;
        }
        for (int h = 0; h < horizon; ++h) gbo(0, h) += go[h];
        for (int j = 0; j < rank; ++j) {
            const double a = u[j] > 0.0 ? u[j] : 0.0;
            const double* wrow = Wo.row_ptr(j);
            double* gwrow = gWo.row_ptr(j);
            double acc = 0.0;
            for (int h = 0; h < horizon; ++h) {
                if (a != 0.0) gwrow[h] += a * go[h];
                acc += wrow[h] * go[h];
            }
            du[j] = u[j] > 0.0 ? acc : 0.0;
            gbh(0, j) += du[j];
        }
        double* ge = g.d_eps.row_ptr(c);
        double* gy = g.d_yhat.row_ptr(c);
        for (int h = 0; h < horizon; ++h) {
            const double* werow = We.row_ptr(h);
            const double* wprow = Wp.row_ptr(h);
            double* gwerow = gWe.row_ptr(h);
            double* gwprow = gWp.row_ptr(h);
            double acce = 0.0, accp = 0.0;
            for (int j = 0; j < rank; ++j) {
                gwerow[j] += e[h] * du[j];
                gwprow[j] += p[h] * du[j];
                acce += werow[j] * du[j];
                accp += wprow[j] * du[j];
            }
            ge[h] = acce;
            gy[h] = accp;
        }
    }
    return g;
}

void FuseAdapter::zero_grad() {
    gWe.fill(0.0);
    gWp.fill(0.0);
    gbh.fill(0.0);
    gWo.fill(0.0);
    gbo.fill(0.0);
}

ParamChunks FuseAdapter::chunks() {
    ParamChunks c;
    add_chunk(c, We, gWe);
    add_chunk(c, Wp, gWp);
    add_chunk(c, bh, gbh);
    add_chunk(c, Wo, gWo);
    add_chunk(c, bo, gbo);
    return c;
}

AdapterKind Adapter::kind() const {
    if (std::holds_alternative<LowRankAdapter>(impl)) return AdapterKind::LowRank;
    if (std::holds_alternative<GateAdapter>(impl)) return AdapterKind::Gate;
    return AdapterKind::Fuse;
}

int Adapter::horizon() const {
    return std::visit([](const auto& a) { return a.horizon; }, impl);
}

int Adapter::rank() const {
    return std::visit([](const auto& a) { return a.rank; }, impl);
}

Mat Adapter::forward(const Mat& eps, const Mat& yhat) const {
    return std::visit([&](const auto& a) { return a.forward(eps, yhat); }, impl);
}

AdapterGrads Adapter::backprop(const Mat& eps, const Mat& yhat,
                               const Mat& grad_out) {
    return std::visit([&](auto& a) { return a.backprop(eps, yhat, grad_out); },
                      impl);
}

void Adapter::zero_grad() {
    std::visit([](auto& a) { a.zero_grad(); }, impl);
}

ParamChunks Adapter::chunks() {
    return std::visit([](auto& a) { return a.chunks(); }, impl);
}

std::size_t Adapter::n_params() const {
    return const_cast<Adapter*>(this)->chunks().total();
}

void Adapter::init(std::uint64_t seed) {
    RngState rng(seed);
    const double hscale = 1.0 / std::sqrt(static_cast<double>(horizon()));
    const double rscale = 1.0 / std::sqrt(static_cast<double>(rank()));
    if (auto* lr = std::get_if<LowRankAdapter>(&impl)) {
        fill_gaussian(lr->W1, rng, hscale);
        lr->W2.fill(0.0);
    } else if (auto* ga = std::get_if<GateAdapter>(&impl)) {
        fill_gaussian(ga->V1, rng, hscale);
        ga->c1.fill(0.0);
        ga->V2.fill(0.0);
        ga->c2.fill(0.0);
        fill_gaussian(ga->G1, rng, hscale);
        ga->d1.fill(0.0);
        fill_gaussian(ga->g2, rng, rscale);
        ga->d0.fill(0.0);
    } else {
        auto& fu = std::get<FuseAdapter>(impl);
        fill_gaussian(fu.We, rng, hscale);
        fill_gaussian(fu.Wp, rng, hscale);
        fu.bh.fill(0.0);
        fill_gaussian(fu.Wo, rng, rscale);
        fu.bo.fill(0.0);
    }
}

Adapter make_adapter(AdapterKind kind, int horizon, int rank) {
    if (horizon < 1 || rank < 1)
        throw InvalidInput("adapter: horizon and rank must be positive");
    switch (kind) {
        case AdapterKind::LowRank: return Adapter{LowRankAdapter(horizon, rank)};
        case AdapterKind::Gate: return Adapter{GateAdapter(horizon, rank)};
        case AdapterKind::Fuse: return Adapter{FuseAdapter(horizon, rank)};
    }
    throw InvalidInput("adapter: unknown kind");
}

}  // namespace tefl
