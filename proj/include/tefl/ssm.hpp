#pragma once

#include <cstdint>

#include "tefl/dataset.hpp"

namespace tefl {

// Scalar state-space process: x_{t+1} = a * tanh(x_t) + eta_t with
// eta ~ N(0, sigma_eta^2), observed through y_t = x_t + eps_t with
// eps ~ N(0, sigma_eps^2). With |a| < 1 the state is bounded by
// |x_t| <= |a| + |eta_{t-1}|, so the chain never diverges.
struct SsmSpec {
    double a = 0.8;
    double sigma_eta = 0.5;
    double sigma_eps = 0.1;

    double f(double x) const;        // a * tanh(x)
    double f_prime(double x) const;  // a * (1 - tanh(x)^2)
};

struct SsmRun {
    std::vector<double> x;  // latent states, length T
    std::vector<double> y;  // observations, length T
};

// Simulates the chain from x_0 = 0, discards `burn_in` steps, returns the next
// `length` states and observations. Same seed, same run, bit for bit.
SsmRun simulate_ssm(SsmSpec spec, int length, int burn_in, std::uint64_t seed);

// Stacks `channels` independent chains (seed substreams) into a table whose
// columns are the observation sequences.
TimeSeriesTable ssm_table(SsmSpec spec, int length, int burn_in, int channels,
                          std::uint64_t seed);

}  // namespace tefl
