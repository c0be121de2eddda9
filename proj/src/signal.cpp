#include "rml/signal.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rml/fft.hpp"

namespace rml::signal {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTwoPi = 2.0 * kPi;
}  // namespace

const char* mod_name(Mod m) {
  switch (m) {
    case Mod::BPSK: return "BPSK";
    case Mod::QPSK: return "QPSK";
    case Mod::PSK8: return "8PSK";
    case Mod::QAM16: return "QAM16";
    case Mod::QAM64: return "QAM64";
    case Mod::PAM4: return "PAM4";
    case Mod::GFSK: return "GFSK";
    case Mod::CPFSK: return "CPFSK";
    case Mod::WBFM: return "WBFM";
    case Mod::AMDSB: return "AM-DSB";
    case Mod::AMSSB: return "AM-SSB";
  }
  return "?";
}

std::optional<Mod> mod_from_name(std::string_view name) {
  for (int i = 0; i < kNumClasses; ++i)
    if (name == mod_name(Mod(i))) return Mod(i);
  // 16QAM/64QAM aliases appear in the literature
  if (name == "16QAM") return Mod::QAM16;
  if (name == "64QAM") return Mod::QAM64;
  return std::nullopt;
}

std::vector<std::string> all_class_names() {
  std::vector<std::string> v;
  for (int i = 0; i < kNumClasses; ++i) v.emplace_back(mod_name(Mod(i)));
  return v;
}

std::vector<Mod> all_classes() {
  std::vector<Mod> v;
  for (int i = 0; i < kNumClasses; ++i) v.push_back(Mod(i));
  return v;
}

bool is_linear(Mod m) {
  switch (m) {
    case Mod::BPSK:
    case Mod::QPSK:
    case Mod::PSK8:
    case Mod::QAM16:
    case Mod::QAM64:
    case Mod::PAM4:
      return true;
    default:
      return false;
  }
}

bool is_cpm(Mod m) { return m == Mod::GFSK || m == Mod::CPFSK; }
bool is_digital(Mod m) { return is_linear(m) || is_cpm(m); }
bool is_analog(Mod m) {
  return m == Mod::WBFM || m == Mod::AMDSB || m == Mod::AMSSB;
}

std::vector<uint8_t> gen_bits(uint64_t seed, size_t n) {
  if (n < 1) throw std::invalid_argument("gen_bits: n must be >= 1");
  std::vector<uint8_t> bits(n);
  Rng rng(seed);
  uint64_t word = 0;
  int left = 0;
  for (size_t i = 0; i < n; ++i) {
    if (left == 0) {
      word = rng.next_u64();
      left = 64;
    }
    bits[i] = uint8_t(word & 1);
    word >>= 1;
    --left;
  }
  return bits;
}

std::vector<double> gen_audio(uint64_t seed, size_t n, double bandwidth_frac) {
  if (!(bandwidth_frac > 0.0 && bandwidth_frac < 0.5))
    throw std::invalid_argument("gen_audio: bandwidth_frac must be in (0, 0.5)");
  Rng rng(seed);
  std::vector<double> white(n);
  for (auto& v : white) v = rng.gaussian();

  // windowed-sinc low-pass, Hamming, fixed 255 taps
  constexpr int kTaps = 255;
  constexpr int kHalf = kTaps / 2;
  std::array<double, kTaps> h{};
  for (int i = 0; i < kTaps; ++i) {
    const int k = i - kHalf;
    const double sinc = (k == 0)
                            ? 2.0 * bandwidth_frac
                            : std::sin(kTwoPi * bandwidth_frac * k) / (kPi * k);
    const double window = 0.54 - 0.46 * std::cos(kTwoPi * i / (kTaps - 1));
    h[size_t(i)] = sinc * window;
  }

  std::vector<double> out(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const int lo = std::max<int>(0, int(i) - kHalf);
    const int hi = std::min<int>(int(n) - 1, int(i) + kHalf);
    for (int j = lo; j <= hi; ++j)
      acc += white[size_t(j)] * h[size_t(kHalf + int(i) - j)];
    out[i] = acc;
  }

  // standardize to zero mean, unit variance
  double mean = 0.0;
  for (double v : out) mean += v;
  mean /= double(n);
  double var = 0.0;
  for (double v : out) var += (v - mean) * (v - mean);
  var /= double(n);
  const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (auto& v : out) v = (v - mean) * inv_std;
  return out;
}

std::vector<double> rrc_taps(double beta, int span_symbols, int sps) {
  if (!(beta > 0.0 && beta <= 1.0))
    throw std::invalid_argument("rrc_taps: beta must be in (0, 1]");
  if (span_symbols < 4) throw std::invalid_argument("rrc_taps: span must be >= 4");
  if (sps < 2) throw std::invalid_argument("rrc_taps: sps must be >= 2");

  const int len = span_symbols * sps + 1;
  const int half = len / 2;
  std::vector<double> h(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) {
    const double t = double(i - half) / double(sps);  // in symbol periods
    double v;
    if (std::abs(t) < 1e-10) {
      v = 1.0 - beta + 4.0 * beta / kPi;
    } else if (std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-10) {
      v = (beta / std::sqrt(2.0)) *
          ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) +
           (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
    } else {
      const double num = std::sin(kPi * t * (1.0 - beta)) +
                         4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
      const double den = kPi * t * (1.0 - 16.0 * beta * beta * t * t);
      v = num / den;
    }
    h[size_t(i)] = v;
  }
  double energy = 0.0;
  for (double v : h) energy += v * v;
  const double scale = 1.0 / std::sqrt(energy);
  for (auto& v : h) v *= scale;
  return h;
}

int bits_per_symbol(Mod m) {
  switch (m) {
    case Mod::BPSK: return 1;
    case Mod::QPSK: return 2;
    case Mod::PSK8: return 3;
    case Mod::QAM16: return 4;
    case Mod::QAM64: return 6;
    case Mod::PAM4: return 2;
    case Mod::GFSK:
    case Mod::CPFSK: return 1;
    default:
      throw std::invalid_argument("bits_per_symbol: not a digital class");
  }
}

namespace {

uint32_t gray_to_binary(uint32_t g) {
  uint32_t b = g;
  while (g >>= 1) b ^= g;
  return b;
}

// Gray-coded amplitude level from `nb` bits: maps to {-(M-1), ..., +(M-1)}
// in steps of 2 with adjacent levels differing by one bit.
double gray_level(uint32_t bits, int nb) {
  const uint32_t idx = gray_to_binary(bits);
  const int m = 1 << nb;
  return 2.0 * double(idx) - double(m - 1);
}

uint32_t take_bits(std::span<const uint8_t> bits, size_t& pos, int nb) {
  uint32_t v = 0;
  for (int i = 0; i < nb; ++i) v = (v << 1) | uint32_t(bits[pos++] & 1);
  return v;
}

}  // namespace

std::vector<cplx> map_symbols(Mod m, std::span<const uint8_t> bits) {
  if (!is_linear(m))
    throw std::invalid_argument("map_symbols: not a linear class");
  const int bps = bits_per_symbol(m);
  const size_t n_sym = bits.size() / size_t(bps);
  std::vector<cplx> out;
  out.reserve(n_sym);
  size_t pos = 0;
  for (size_t s = 0; s < n_sym; ++s) {
    switch (m) {
      case Mod::BPSK: {
        const uint32_t b = take_bits(bits, pos, 1);
        out.emplace_back(b ? -1.0 : 1.0, 0.0);
        break;
      }
      case Mod::QPSK: {
        const uint32_t b = take_bits(bits, pos, 2);
        const double i = (b & 2) ? -1.0 : 1.0;
        const double q = (b & 1) ? -1.0 : 1.0;
        out.emplace_back(i / std::sqrt(2.0), q / std::sqrt(2.0));
        break;
      }
      case Mod::PSK8: {
        const uint32_t b = take_bits(bits, pos, 3);
        const double phase = kTwoPi * double(gray_to_binary(b)) / 8.0;
        out.emplace_back(std::cos(phase), std::sin(phase));
        break;
      }
      case Mod::QAM16: {
        const double i = gray_level(take_bits(bits, pos, 2), 2);
        const double q = gray_level(take_bits(bits, pos, 2), 2);
        out.emplace_back(i / std::sqrt(10.0), q / std::sqrt(10.0));
        break;
      }
      case Mod::QAM64: {
        const double i = gray_level(take_bits(bits, pos, 3), 3);
        const double q = gray_level(take_bits(bits, pos, 3), 3);
        out.emplace_back(i / std::sqrt(42.0), q / std::sqrt(42.0));
        break;
      }
      case Mod::PAM4: {
        const double i = gray_level(take_bits(bits, pos, 2), 2);
        out.emplace_back(i / std::sqrt(5.0), 0.0);
        break;
      }
      default:
        throw std::logic_error("unreachable");
    }
  }
  return out;
}

namespace {

BasebandSignal shape_linear(const std::vector<cplx>& symbols, int sps,
                            const ModemConfig& cfg) {
  const auto taps = rrc_taps(cfg.rrc_beta, cfg.rrc_span, sps);
  const int delay = int(taps.size()) / 2;
  const size_t n = symbols.size() * size_t(sps);
  BasebandSignal sig;
  sig.samples.assign(n, cplx(0.0, 0.0));
  // group-delay-compensated convolution with the upsampled impulse train
  for (size_t s = 0; s < symbols.size(); ++s) {
    const long base = long(s) * sps + delay;
    for (size_t k = 0; k < taps.size(); ++k) {
      const long idx = base - long(k);
      if (idx >= 0 && idx < long(n))
        sig.samples[size_t(idx)] += symbols[s] * taps[taps.size() - 1 - k];
    }
  }
  return sig;
}

// Continuous-phase modulation: phase increments 2*pi*h * sum_k a_k g[n-k*sps]
// with the frequency pulse g summing to 1/2 (total phase pi*h per symbol).
BasebandSignal shape_cpm(Mod m, std::span<const uint8_t> bits, int sps,
                         const ModemConfig& cfg) {
  const size_t n_sym = bits.size();
  std::vector<double> freq_pulse;
  if (m == Mod::CPFSK) {
    freq_pulse.assign(size_t(sps), 1.0 / (2.0 * double(sps)));
  } else {
    // Gaussian frequency pulse: gauss(BT) convolved with a one-symbol rect,
    // truncated to 4 symbol periods
    const int span = 4;
    const int glen = span * sps + 1;
    const double bt = cfg.gfsk_bt;
    const double sigma = std::sqrt(std::log(2.0)) / (kTwoPi * bt);  // in T
    std::vector<double> gauss(static_cast<size_t>(glen));
    for (int i = 0; i < glen; ++i) {
      const double t = double(i - glen / 2) / double(sps);
      gauss[size_t(i)] = std::exp(-t * t / (2.0 * sigma * sigma));
    }
    freq_pulse.assign(size_t(glen + sps - 1), 0.0);
    for (int i = 0; i < glen; ++i)
      for (int j = 0; j < sps; ++j) freq_pulse[size_t(i + j)] += gauss[size_t(i)];
    double total = 0.0;
    for (double v : freq_pulse) total += v;
    for (auto& v : freq_pulse) v *= 0.5 / total;
  }

  const size_t n = n_sym * size_t(sps);
  std::vector<double> dphase(n, 0.0);
  const int delay = int(freq_pulse.size()) / 2;
  for (size_t s = 0; s < n_sym; ++s) {
    const double a = bits[s] ? 1.0 : -1.0;
    const long base = long(s) * sps - delay;
    for (size_t k = 0; k < freq_pulse.size(); ++k) {
      const long idx = base + long(k);
      if (idx >= 0 && idx < long(n))
        dphase[size_t(idx)] += a * freq_pulse[k];
    }
  }

  BasebandSignal sig;
  sig.samples.resize(n);
  double phase = 0.0;
  const double scale = kTwoPi * cfg.cpm_mod_index;
  for (size_t i = 0; i < n; ++i) {
    phase += scale * dphase[i];
    sig.samples[i] = cplx(std::cos(phase), std::sin(phase));
  }
  return sig;
}

}  // namespace

BasebandSignal modulate_digital(Mod m, std::span<const uint8_t> bits, int sps,
                                const ModemConfig& cfg) {
  if (!is_digital(m))
    throw std::invalid_argument("modulate_digital: unsupported class " +
                                std::string(mod_name(m)));
  if (sps < 2) throw std::invalid_argument("modulate_digital: sps must be >= 2");
  const int bps = bits_per_symbol(m);
  const size_t n_sym = bits.size() / size_t(bps);
  if (n_sym < 32)
    throw std::invalid_argument("modulate_digital: need bits for >= 32 symbols");
  if (is_cpm(m)) return shape_cpm(m, bits.first(n_sym), sps, cfg);
  return shape_linear(map_symbols(m, bits), sps, cfg);
}

BasebandSignal modulate_analog(Mod m, std::span<const double> audio,
                               const ModemConfig& cfg) {
  if (!is_analog(m))
    throw std::invalid_argument("modulate_analog: unsupported class " +
                                std::string(mod_name(m)));
  if (audio.size() < 256)
    throw std::invalid_argument("modulate_analog: audio length must be >= 256");
  BasebandSignal sig;
  sig.samples.resize(audio.size());
  switch (m) {
    case Mod::WBFM: {
      double phase = 0.0;
      for (size_t i = 0; i < audio.size(); ++i) {
        phase += kTwoPi * cfg.wbfm_deviation * audio[i];
        sig.samples[i] = cplx(std::cos(phase), std::sin(phase));
      }
      break;
    }
    case Mod::AMDSB: {
      for (size_t i = 0; i < audio.size(); ++i)
        sig.samples[i] = cplx(1.0 + cfg.am_mod_index * audio[i], 0.0);
      break;
    }
    case Mod::AMSSB: {
      std::vector<double> buf(audio.begin(), audio.end());
      sig.samples = analytic_signal(buf);
      break;
    }
    default:
      throw std::logic_error("unreachable");
  }
  return sig;
}

double IQFrame::mean_power() const {
  double acc = 0.0;
  for (int k = 0; k < 128; ++k)
    acc += double(v[size_t(k)]) * double(v[size_t(k)]) +
           double(v[size_t(128 + k)]) * double(v[size_t(128 + k)]);
  return acc / 128.0;
}

std::vector<IQFrame> extract_frames(const BasebandSignal& sig, size_t count,
                                    uint64_t offset_seed) {
  if (count == 0) return {};
  if (sig.size() < 128)
    throw std::invalid_argument("extract_frames: signal shorter than 128 samples");
  Rng rng(offset_seed);
  std::vector<IQFrame> out(count);
  for (size_t f = 0; f < count; ++f) {
    const size_t offset = size_t(rng.below(sig.size() - 128 + 1));
    double power = 0.0;
    for (int k = 0; k < 128; ++k) power += std::norm(sig.samples[offset + size_t(k)]);
    power /= 128.0;
    const double scale = power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;
    for (int k = 0; k < 128; ++k) {
      const cplx s = sig.samples[offset + size_t(k)] * scale;
      out[f].v[size_t(k)] = float(s.real());
      out[f].v[size_t(128 + k)] = float(s.imag());
    }
  }
  return out;
}

}  // namespace rml::signal
