#include "tefl/ssm.hpp"

#include <cmath>

#include "tefl/errors.hpp"
#include "tefl/rng.hpp"

namespace tefl {

double SsmSpec::f(double x) const { return a * std::tanh(x); }

double SsmSpec::f_prime(double x) const {
    const double th = std::tanh(x);
    return a * (1.0 - th * th);
}

SsmRun simulate_ssm(SsmSpec spec, int length, int burn_in, std::uint64_t seed) {
    if (length < 1) throw InvalidInput("ssm: length must be positive");
    if (burn_in < 0) throw InvalidInput("ssm: burn_in must be nonnegative");
    if (spec.sigma_eta < 0 || spec.sigma_eps < 0)
        throw InvalidInput("ssm: noise scales must be nonnegative");

    RngState rng(seed);
    double x = 0.0;
    for (int t = 0; t < burn_in; ++t) x = spec.f(x) + spec.sigma_eta * rng.normal();

    SsmRun run;
    run.x.reserve(length);
    run.y.reserve(length);
    for (int t = 0; t < length; ++t) {
        run.x.push_back(x);
        run.y.push_back(x + spec.sigma_eps * rng.normal());
        x = spec.f(x) + spec.sigma_eta * rng.normal();
    }
    return run;
}

TimeSeriesTable ssm_table(SsmSpec spec, int length, int burn_in, int channels,
                          std::uint64_t seed) {
    if (channels < 1) throw InvalidInput("ssm: channels must be positive");
    TimeSeriesTable table;
    table.values = Mat(length, channels);
    table.origin = "ssm";
    for (int c = 0; c < channels; ++c) {
        RngState sub = RngState::substream(seed, static_cast<std::uint64_t>(c));
        SsmRun run = simulate_ssm(spec, length, burn_in, sub.next_u64());
        for (int t = 0; t < length; ++t) table.values(t, c) = run.y[t];
        table.channel_names.push_back("y" + std::to_string(c));
    }
    return table;
}

}  // namespace tefl
