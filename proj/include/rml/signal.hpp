#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rml/rng.hpp"

namespace rml::signal {

using cplx = std::complex<double>;

// ------------------------------------------------------------ mod classes

// Canonical class ids are stable everywhere: file formats, checkpoints and
// holdout configs all refer to these.
enum class Mod : uint8_t {
  BPSK = 0,
  QPSK = 1,
  PSK8 = 2,
  QAM16 = 3,
  QAM64 = 4,
  PAM4 = 5,
  GFSK = 6,
  CPFSK = 7,
  WBFM = 8,
  AMDSB = 9,
  AMSSB = 10,
};

constexpr int kNumClasses = 11;

const char* mod_name(Mod m);
std::optional<Mod> mod_from_name(std::string_view name);
std::vector<std::string> all_class_names();
std::vector<Mod> all_classes();

bool is_linear(Mod m);   // RRC-shaped constellation classes
bool is_cpm(Mod m);      // GFSK, CPFSK
bool is_digital(Mod m);  // linear or cpm
bool is_analog(Mod m);   // WBFM, AM-DSB, AM-SSB

// --------------------------------------------------------------- sources

// Deterministic pseudorandom bit sequence.
std::vector<uint8_t> gen_bits(uint64_t seed, size_t n);

// Zero-mean unit-variance band-limited noise: white Gaussian noise through
// a windowed-sinc low-pass with cutoff bandwidth_frac (0 < frac < 0.5),
// then standardized. Source signal for the analog classes.
std::vector<double> gen_audio(uint64_t seed, size_t n, double bandwidth_frac);

// Root-raised-cosine taps: odd length span*sps+1, unit energy, peak center.
std::vector<double> rrc_taps(double beta, int span_symbols, int sps);

// ------------------------------------------------------------ modulators

struct BasebandSignal {
  std::vector<cplx> samples;
  double sample_rate = 1.0;
  size_t size() const { return samples.size(); }
};

struct ModemConfig {
  int sps = 8;
  double rrc_beta = 0.35;
  int rrc_span = 8;
  double gfsk_bt = 0.35;
  double cpm_mod_index = 0.5;   // CPFSK and GFSK
  double wbfm_deviation = 0.15; // rms frequency deviation, cycles/sample
  double am_mod_index = 0.5;
  double audio_bandwidth = 0.05;
};

// Unit-average-power constellation points for a linear class (before pulse
// shaping). Consumes floor(n_bits / bits_per_symbol) symbols.
std::vector<cplx> map_symbols(Mod m, std::span<const uint8_t> bits);
int bits_per_symbol(Mod m);

// Digital modulator: RRC-shaped linear constellations or continuous-phase
// FSK (Gaussian / rectangular frequency pulse). Needs >= 32 symbols.
BasebandSignal modulate_digital(Mod m, std::span<const uint8_t> bits, int sps,
                                const ModemConfig& cfg = {});

// Analog modulator for WBFM / AM-DSB / AM-SSB; audio length >= 256.
BasebandSignal modulate_analog(Mod m, std::span<const double> audio,
                               const ModemConfig& cfg = {});

// -------------------------------------------------------------- channel

struct ChannelParams {
  double snr_db = 10.0;
  bool awgn_enabled = true;       // disabled path used by calibration tests
  double cfo_std_hz = 0.0;        // random-walk step, cycles/sample
  double clock_offset_max_ppm = 0.0;
  int fading_tap_count = 1;
  double fading_delay_spread = 0.0;  // samples; 0 with 1 tap = identity
  uint64_t rng_seed = 0;

  void validate() const;
};

// Applies, in order: multipath fading, sample-clock offset (fractional
// resampling), carrier-frequency-offset random walk, calibrated AWGN.
BasebandSignal apply_channel(const BasebandSignal& in, const ChannelParams& p);

// --------------------------------------------------------------- frames

// One 2x128 training example: row 0 in-phase, row 1 quadrature.
struct IQFrame {
  std::array<float, 256> v{};
  float* i_row() { return v.data(); }
  float* q_row() { return v.data() + 128; }
  const float* i_row() const { return v.data(); }
  const float* q_row() const { return v.data() + 128; }
  double mean_power() const;
};

// Slices `count` windows of 128 samples at seeded random offsets (windows
// may overlap) and normalizes each to unit mean sample power.
std::vector<IQFrame> extract_frames(const BasebandSignal& sig, size_t count,
                                    uint64_t offset_seed);

// --------------------------------------------------------------- dataset

struct LabeledExample {
  IQFrame frame;
  uint8_t class_id = 0;
  int8_t snr_db = 0;
};

struct DatasetConfig {
  std::vector<Mod> classes = all_classes();
  std::vector<int> snr_grid;  // integer dB, int8 range
  int frames_per_class_snr = 100;
  ModemConfig modem;
  // impairment defaults applied at every grid SNR
  double cfo_std_hz = 1e-4;
  double clock_offset_max_ppm = 50.0;
  int fading_tap_count = 3;
  double fading_delay_spread = 2.0;

  static std::vector<int> default_snr_grid();  // -20..18 step 2
  static std::vector<int> high_snr_grid();     // >= +10 slice
  void validate() const;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  std::vector<std::string> class_table = all_class_names();
  std::vector<int> snr_grid;
  uint64_t generator_seed = 0;

  size_t size() const { return examples.size(); }
};

// Deterministic stratified synthesis: every example's RNG stream is keyed
// by (seed, class, snr index, frame index), so generation order (and the
// parallel schedule) cannot affect the result.
Dataset build_dataset(const DatasetConfig& cfg, uint64_t seed);

}  // namespace rml::signal
