#include <stdexcept>

#include "rml/signal.hpp"
#include "rml/util.hpp"

namespace rml::signal {

namespace {

constexpr uint64_t kBitsTag = 11;
constexpr uint64_t kAudioTag = 12;
constexpr uint64_t kChannelTag = 13;
constexpr uint64_t kOffsetTag = 14;

constexpr int kSymbolsPerExample = 80;
constexpr size_t kAudioLenPerExample = 1024;  // power of two, fast SSB path
constexpr size_t kFrameMargin = 64;           // keeps filter transients out

LabeledExample synth_example(Mod m, int snr_db, uint64_t ex_seed,
                             const DatasetConfig& cfg) {
  Rng rng(ex_seed);
  BasebandSignal sig;
  if (is_digital(m)) {
    const size_t n_bits = size_t(kSymbolsPerExample) * size_t(bits_per_symbol(m));
    const auto bits = gen_bits(rng.fork(kBitsTag).seed(), n_bits);
    sig = modulate_digital(m, bits, cfg.modem.sps, cfg.modem);
  } else {
    const auto audio = gen_audio(rng.fork(kAudioTag).seed(), kAudioLenPerExample,
                                 cfg.modem.audio_bandwidth);
    sig = modulate_analog(m, audio, cfg.modem);
  }

  ChannelParams ch;
  ch.snr_db = double(snr_db);
  ch.cfo_std_hz = cfg.cfo_std_hz;
  ch.clock_offset_max_ppm = cfg.clock_offset_max_ppm;
  ch.fading_tap_count = cfg.fading_tap_count;
  ch.fading_delay_spread = cfg.fading_delay_spread;
  ch.rng_seed = rng.fork(kChannelTag).seed();
  BasebandSignal impaired = apply_channel(sig, ch);

  // trim the edge margin before slicing the frame
  if (impaired.size() < 128 + 2 * kFrameMargin)
    throw std::logic_error("dataset: synthesized signal too short");
  BasebandSignal trimmed;
  trimmed.samples.assign(impaired.samples.begin() + long(kFrameMargin),
                         impaired.samples.end() - long(kFrameMargin));
  auto frames = extract_frames(trimmed, 1, rng.fork(kOffsetTag).seed());

  LabeledExample ex;
  ex.frame = frames[0];
  ex.class_id = uint8_t(m);
  ex.snr_db = int8_t(snr_db);
  return ex;
}

}  // namespace

std::vector<int> DatasetConfig::default_snr_grid() {
  std::vector<int> grid;
  for (int s = -20; s <= 18; s += 2) grid.push_back(s);
  return grid;
}

std::vector<int> DatasetConfig::high_snr_grid() {
  std::vector<int> grid;
  for (int s = 10; s <= 18; s += 2) grid.push_back(s);
  return grid;
}

void DatasetConfig::validate() const {
  if (classes.empty()) throw std::invalid_argument("dataset: empty class list");
  if (snr_grid.empty()) throw std::invalid_argument("dataset: empty snr grid");
  for (int s : snr_grid)
    if (s < -128 || s > 127)
      throw std::invalid_argument("dataset: snr outside int8 storage range");
  if (frames_per_class_snr < 1)
    throw std::invalid_argument("dataset: frames_per_class_snr must be >= 1");
  if (fading_tap_count < 1)
    throw std::invalid_argument("dataset: fading_tap_count must be >= 1");
  if (fading_delay_spread < 0.0 || clock_offset_max_ppm < 0.0 || cfo_std_hz < 0.0)
    throw std::invalid_argument("dataset: impairment spreads must be >= 0");
}

Dataset build_dataset(const DatasetConfig& cfg, uint64_t seed) {
  cfg.validate();
  Dataset ds;
  ds.snr_grid = cfg.snr_grid;
  ds.generator_seed = seed;

  const size_t per_class = cfg.snr_grid.size() * size_t(cfg.frames_per_class_snr);
  const size_t total = cfg.classes.size() * per_class;
  ds.examples.resize(total);

  // flat index -> (class, snr, frame); every example's stream is keyed by
  // its coordinates, so the parallel schedule cannot change the output
  parallel_for(total, 8, [&](size_t lo, size_t hi) {
    for (size_t idx = lo; idx < hi; ++idx) {
      const size_t ci = idx / per_class;
      const size_t rem = idx % per_class;
      const size_t si = rem / size_t(cfg.frames_per_class_snr);
      const size_t fi = rem % size_t(cfg.frames_per_class_snr);
      const Mod m = cfg.classes[ci];
      const uint64_t ex_seed =
          mix64(mix64(mix64(seed, uint64_t(m)), si), fi);
      ds.examples[idx] = synth_example(m, cfg.snr_grid[si], ex_seed, cfg);
    }
  });
  return ds;
}

}  // namespace rml::signal
