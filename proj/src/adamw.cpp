#include "tefl/adamw.hpp"

#include <cmath>

#include "tefl/errors.hpp"

namespace tefl {

namespace {

inline void update_span(double* p, const double* g, std::size_t n,
                        const AdamWParams& hp, double* m, double* v,
                        double bc1, double bc2) {
    const double shrink = 1.0 - hp.lr * hp.weight_decay;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] *= shrink;
        m[i] = hp.beta1 * m[i] + (1.0 - hp.beta1) * g[i];
        v[i] = hp.beta2 * v[i] + (1.0 - hp.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        p[i] -= hp.lr * mhat / (std::sqrt(vhat) + hp.eps);
    }
}

}  // namespace

void AdamWState::step(std::vector<double>& params,
                      const std::vector<double>& grads) {
    if (params.size() != m.size() || grads.size() != m.size())
        throw InvalidInput("AdamWState::step: size mismatch");
    ++step_count;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step_count));
    update_span(params.data(), grads.data(), params.size(), hp, m.data(),
                v.data(), bc1, bc2);
}

void AdamWState::step(
    const std::vector<std::pair<double*, const double*>>& chunks,
    const std::vector<std::size_t>& chunk_sizes) {
    if (chunks.size() != chunk_sizes.size())
        throw InvalidInput("AdamWState::step: chunk list mismatch");
    std::size_t total = 0;
    for (std::size_t n : chunk_sizes) total += n;
    if (total != m.size())
        throw InvalidInput("AdamWState::step: chunk sizes do not cover state");
    ++step_count;
    const double bc1 = 1.0 - std::pow(hp.beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(hp.beta2, static_cast<double>(step_count));
    std::size_t off = 0;
    for (std::size_t c = 0; c < chunks.size(); ++c) {
        update_span(chunks[c].first, chunks[c].second, chunk_sizes[c], hp,
                    m.data() + off, v.data() + off, bc1, bc2);
        off += chunk_sizes[c];
    }
}

}  // namespace tefl
