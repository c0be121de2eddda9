#pragma once

#include <complex>
#include <vector>

namespace rml {

// In-place complex DFT. Radix-2 iterative when n is a power of two,
// O(n^2) direct evaluation otherwise (signal lengths here are small).
void fft(std::vector<std::complex<double>>& a, bool inverse);

std::vector<std::complex<double>> fft_copy(
    const std::vector<std::complex<double>>& a, bool inverse);

// Analytic signal: real input -> complex output whose spectrum is zero on
// negative frequencies (one-sided). Used for single-sideband modulation.
std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x);

}  // namespace rml
