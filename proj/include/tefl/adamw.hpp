#pragma once

#include <cstddef>
#include <vector>

namespace tefl {

struct AdamWParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4;
};

// AdamW with decoupled weight decay: each step first shrinks the parameter by
// lr * weight_decay, then applies the bias-corrected adaptive update. Decay is
// multiplicative on the parameter and never enters the moment estimates.
struct AdamWState {
    AdamWParams hp;
    std::vector<double> m;
    std::vector<double> v;
    long long step_count = 0;

    explicit AdamWState(std::size_t n_params, AdamWParams hp = {})
        : hp(hp), m(n_params, 0.0), v(n_params, 0.0) {}

    std::size_t size() const { return m.size(); }

    // In-place update of `params` given `grads`; both must have exactly the
    // state's length.
    void step(std::vector<double>& params, const std::vector<double>& grads);

    // Chunked variant for models whose parameters live in several buffers.
    // Chunks are visited in order; their concatenation is the flat parameter
    // vector the state was sized for.
    void step(const std::vector<std::pair<double*, const double*>>& chunks,
              const std::vector<std::size_t>& chunk_sizes);
};

}  // namespace tefl
