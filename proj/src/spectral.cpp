#include "tefl/spectral.hpp"

#include <cmath>
#include <cstddef>

#include "tefl/errors.hpp"

namespace tefl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Spectrum {
    std::vector<double> re;   // A_k = sum_n x_n cos(2*pi*k*n/b)
    std::vector<double> im;   // B_k = -sum_n x_n sin(2*pi*k*n/b)
    std::vector<double> pow;  // A_k^2 + B_k^2
};

Spectrum full_spectrum(const std::vector<double>& seq) {
    const std::size_t b = seq.size();
    if (b == 0) throw InvalidInput("dft_power: empty sequence");
    Spectrum s;
    s.re.assign(b, 0.0);
    s.im.assign(b, 0.0);
    s.pow.assign(b, 0.0);
    const double step = kTwoPi / static_cast<double>(b);
    for (std::size_t k = 0; k < b; ++k) {
        double re = 0.0, im = 0.0;
        for (std::size_t n = 0; n < b; ++n) {
            // Reduce k*n mod b before taking cos/sin so large products do not
            // lose precision in the angle.
            const double ang = step * static_cast<double>((k * n) % b);
            re += seq[n] * std::cos(ang);
            im -= seq[n] * std::sin(ang);
        }
        s.re[k] = re;
        s.im[k] = im;
        s.pow[k] = re * re + im * im;
    }
    return s;
}

}  // namespace

std::vector<double> dft_power(const std::vector<double>& seq) {
    return full_spectrum(seq).pow;
}

double spectral_flatness(const std::vector<double>& seq) {
    const std::vector<double> p = dft_power(seq);
    const double b = static_cast<double>(p.size());
    double log_sum = 0.0;
    double arith = 0.0;
    for (double pk : p) {
        const double q = pk > kSpectralFloor ? pk : kSpectralFloor;
        log_sum += std::log(q);
        arith += q;
    }
    const double geo = std::exp(log_sum / b);
    return geo / (arith / b);
}

std::vector<double> spectral_flatness_grad(const std::vector<double>& seq) {
    const Spectrum s = full_spectrum(seq);
    const std::size_t b = seq.size();
    const double bd = static_cast<double>(b);

    double log_sum = 0.0;
    double arith = 0.0;
    for (double pk : s.pow) {
        const double q = pk > kSpectralFloor ? pk : kSpectralFloor;
        log_sum += std::log(q);
        arith += q;
    }
    const double geo = std::exp(log_sum / bd);
    const double amean = arith / bd;
    const double sf = geo / amean;

    // dSF/dQ_k = (SF/b) * (1/Q_k - 1/amean); Q_k = max(P_k, floor).
    std::vector<double> dsf_dp(b, 0.0);
    for (std::size_t k = 0; k < b; ++k) {
        if (s.pow[k] <= kSpectralFloor) continue;
        dsf_dp[k] = (sf / bd) * (1.0 / s.pow[k] - 1.0 / amean);
    }

    // dP_k/dx_n = 2*A_k*cos(2*pi*k*n/b) - 2*B_k*sin(2*pi*k*n/b).
    std::vector<double> grad(b, 0.0);
    const double step = kTwoPi / bd;
    for (std::size_t k = 0; k < b; ++k) {
        if (dsf_dp[k] == 0.0) continue;
        const double ck = dsf_dp[k];
        for (std::size_t n = 0; n < b; ++n) {
            const double ang = step * static_cast<double>((k * n) % b);
            grad[n] += ck * 2.0 * (s.re[k] * std::cos(ang) - s.im[k] * std::sin(ang));
        }
    }
    return grad;
}

}  // namespace tefl
