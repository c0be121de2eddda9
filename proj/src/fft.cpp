#include "rml/fft.hpp"

#include <cmath>

namespace rml {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  // bit reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? kTwoPi : -kTwoPi) / double(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

void dft_direct(std::vector<std::complex<double>>& a, bool inverse) {
  const size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  const double sign = inverse ? 1.0 : -1.0;
  for (size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (size_t t = 0; t < n; ++t) {
      const double ang = sign * kTwoPi * double(k) * double(t) / double(n);
      acc += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  a = std::move(out);
}
}  // namespace

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  if (a.size() <= 1) return;
  if (is_pow2(a.size()))
    fft_radix2(a, inverse);
  else
    dft_direct(a, inverse);
  if (inverse) {
    const double inv = 1.0 / double(a.size());
    for (auto& v : a) v *= inv;
  }
}

std::vector<std::complex<double>> fft_copy(
    const std::vector<std::complex<double>>& a, bool inverse) {
  auto out = a;
  fft(out, inverse);
  return out;
}

std::vector<std::complex<double>> analytic_signal(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<std::complex<double>> spec(n);
  for (size_t i = 0; i < n; ++i) spec[i] = std::complex<double>(x[i], 0.0);
  fft(spec, false);
  // keep DC (and Nyquist for even n) as-is, double positives, zero negatives
  for (size_t k = 1; k < n; ++k) {
    const bool nyquist = (n % 2 == 0) && (k == n / 2);
    if (nyquist) continue;
    if (k < (n + 1) / 2)
      spec[k] *= 2.0;
    else
      spec[k] = 0.0;
  }
  fft(spec, true);
  return spec;
}

}  // namespace rml
