#include <cmath>
#include <stdexcept>

#include "rml/signal.hpp"

namespace rml::signal {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

constexpr uint64_t kFadingTag = 1;
constexpr uint64_t kClockTag = 2;
constexpr uint64_t kCfoTag = 3;
constexpr uint64_t kAwgnTag = 4;

// Random complex taps with exponentially decaying power over the delay
// spread, normalized to unit total power so SNR calibration is unaffected
// by the fade realization. tap_count == 1 with zero spread is an exact
// bypass (identity channel building block).
std::vector<cplx> draw_fading_taps(int count, double spread, Rng rng) {
  std::vector<cplx> taps(static_cast<size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double p = (spread > 0.0) ? std::exp(-double(k) / spread)
                                    : (k == 0 ? 1.0 : 0.0);
    const double amp = std::sqrt(p / 2.0);
    taps[size_t(k)] = cplx(amp * rng.gaussian(), amp * rng.gaussian());
  }
  double total = 0.0;
  for (const cplx& t : taps) total += std::norm(t);
  if (total <= 0.0) {
    taps.assign(size_t(count), cplx(0.0, 0.0));
    taps[0] = cplx(1.0, 0.0);
    return taps;
  }
  const double inv = 1.0 / std::sqrt(total);
  for (auto& t : taps) t *= inv;
  return taps;
}

}  // namespace

void ChannelParams::validate() const {
  if (awgn_enabled && !std::isfinite(snr_db))
    throw std::invalid_argument("channel: snr_db must be finite");
  if (fading_tap_count < 1)
    throw std::invalid_argument("channel: fading_tap_count must be >= 1");
  if (fading_delay_spread < 0.0)
    throw std::invalid_argument("channel: fading_delay_spread must be >= 0");
  if (clock_offset_max_ppm < 0.0)
    throw std::invalid_argument("channel: clock_offset_max_ppm must be >= 0");
  if (cfo_std_hz < 0.0)
    throw std::invalid_argument("channel: cfo_std_hz must be >= 0");
}

BasebandSignal apply_channel(const BasebandSignal& in, const ChannelParams& p) {
  p.validate();
  if (in.size() < 256)
    throw std::invalid_argument("apply_channel: signal length must be >= 256");
  Rng base(p.rng_seed);
  std::vector<cplx> y = in.samples;

  // 1. multipath fading
  if (!(p.fading_tap_count == 1 && p.fading_delay_spread == 0.0)) {
    const auto taps =
        draw_fading_taps(p.fading_tap_count, p.fading_delay_spread,
                         base.fork(kFadingTag));
    std::vector<cplx> faded(y.size(), cplx(0.0, 0.0));
    for (size_t n = 0; n < y.size(); ++n) {
      cplx acc(0.0, 0.0);
      const size_t kmax = std::min(taps.size(), n + 1);
      for (size_t k = 0; k < kmax; ++k) acc += taps[k] * y[n - k];
      faded[n] = acc;
    }
    y = std::move(faded);
  }

  // 2. sample clock offset: resample at rate 1 + delta, linear interpolation
  if (p.clock_offset_max_ppm > 0.0) {
    Rng rng = base.fork(kClockTag);
    const double delta =
        rng.uniform(-p.clock_offset_max_ppm, p.clock_offset_max_ppm) * 1e-6;
    const double rate = 1.0 + delta;
    const size_t out_len = size_t(std::floor(double(y.size() - 1) / rate)) + 1;
    std::vector<cplx> resampled(out_len);
    for (size_t i = 0; i < out_len; ++i) {
      const double t = double(i) * rate;
      const size_t i0 = size_t(t);
      const double frac = t - double(i0);
      const cplx a = y[i0];
      const cplx b = (i0 + 1 < y.size()) ? y[i0 + 1] : y[i0];
      resampled[i] = a + (b - a) * frac;
    }
    y = std::move(resampled);
  }

  // 3. carrier frequency offset: Gaussian random-walk frequency
  if (p.cfo_std_hz > 0.0) {
    Rng rng = base.fork(kCfoTag);
    double freq = 0.0;
    double phase = 0.0;
    for (auto& s : y) {
      freq += p.cfo_std_hz * rng.gaussian();
      phase += kTwoPi * freq;
      s *= cplx(std::cos(phase), std::sin(phase));
    }
  }

  // 4. AWGN calibrated against the measured post-impairment signal power
  if (p.awgn_enabled) {
    Rng rng = base.fork(kAwgnTag);
    double power = 0.0;
    for (const cplx& s : y) power += std::norm(s);
    power /= double(y.size());
    const double noise_var = power * std::pow(10.0, -p.snr_db / 10.0);
    const double amp = std::sqrt(noise_var / 2.0);
    for (auto& s : y) s += cplx(amp * rng.gaussian(), amp * rng.gaussian());
  }

  BasebandSignal out;
  out.samples = std::move(y);
  out.sample_rate = in.sample_rate;
  return out;
}

}  // namespace rml::signal
