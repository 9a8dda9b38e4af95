#pragma once

#include <vector>

namespace tefl {

// Floor applied to every power bin before the flatness ratio; clamped bins
// contribute zero gradient.
inline constexpr double kSpectralFloor = 1e-12;

// Full-length power spectrum of a real sequence via the direct O(b^2)
// transform: P_k = |sum_n seq[n] * exp(-2*pi*i*k*n/b)|^2 for k = 0..b-1.
// Sequences here are short batch slices, so the quadratic transform is cheap
// and keeps the gradient code in one obvious place.
std::vector<double> dft_power(const std::vector<double>& seq);

// Geometric mean over arithmetic mean of the floored power spectrum.
// Equals 1 for an impulse, approaches 0 for a constant or a pure tone,
// sits in between for broadband noise. Scale-invariant when no bin clamps.
double spectral_flatness(const std::vector<double>& seq);

// Analytic d(spectral_flatness)/d(seq). The geometric mean is differentiated
// in the log domain; bins at the floor are treated as constants.
std::vector<double> spectral_flatness_grad(const std::vector<double>& seq);

}  // namespace tefl
