#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmw {

using Complex = std::complex<double>;
using BitVector = std::vector<std::uint8_t>;

// Sample rates along the chain.
inline constexpr double kBasebandRateHz = 30.72e6;
inline constexpr double kShapedRateHz = 307.2e6;
inline constexpr double kConverterRateHz = 4.9152e9;
inline constexpr int kShapingInterpolation = 10;
inline constexpr int kConverterInterpolation = 16;

inline constexpr double kIntermediateFreqHz = 3.8e9;
inline constexpr double kMmWaveCarrierHz = 29.8e9;
inline constexpr double kSpeedOfLight = 299792458.0;

// Error kinds raised by the pipeline stages. Invalid arguments use
// std::invalid_argument directly.
class DegenerateInput : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class TruncatedFrame : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class EstimationFailed : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class EqualizationSingular : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A run of complex baseband samples tagged with its sample rate.
class IqBuffer {
 public:
  IqBuffer() = default;
  IqBuffer(std::vector<Complex> samples, double sample_rate_hz);

  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] double sample_rate_hz() const { return rate_hz_; }

  [[nodiscard]] std::span<const Complex> samples() const { return samples_; }
  [[nodiscard]] std::span<Complex> samples() { return samples_; }
  [[nodiscard]] const std::vector<Complex>& vec() const { return samples_; }

  const Complex& operator[](std::size_t i) const { return samples_[i]; }
  Complex& operator[](std::size_t i) { return samples_[i]; }

  [[nodiscard]] bool all_finite() const;
  [[nodiscard]] double energy() const;
  [[nodiscard]] double mean_power() const;

 private:
  std::vector<Complex> samples_;
  double rate_hz_ = kBasebandRateHz;
};

/// Geometry of the 480-sample frame and its 64-bin subcarrier map.
///
/// Bin index k in 0..63 is the DFT bin; negative subcarrier -m lives at
/// bin 64 - m. The default map has DC plus 5 upper and 6 lower edge bins
/// virtual, pilots at +-7 and +-21 and the remaining 48 bins carrying data.
struct FrameLayout {
  int sts_len = 16;
  int sts_repeats = 10;
  int lts_len = 64;
  int lts_repeats = 2;
  int lts_cp = 32;
  int payload_count = 2;
  int payload_fft = 64;
  int payload_cp = 16;

  std::array<int, 48> data_bins{};
  std::array<int, 4> pilot_bins{};
  std::array<int, 12> virtual_bins{};

  /// Builds the default layout; throws std::logic_error if the geometry
  /// does not add up to 480 samples or the bin sets do not partition 0..63.
  static FrameLayout standard();

  [[nodiscard]] int short_preamble_len() const { return sts_len * sts_repeats; }
  [[nodiscard]] int long_preamble_len() const { return lts_cp + lts_len * lts_repeats; }
  [[nodiscard]] int payload_symbol_len() const { return payload_cp + payload_fft; }
  [[nodiscard]] int frame_len() const {
    return short_preamble_len() + long_preamble_len() + payload_count * payload_symbol_len();
  }

  [[nodiscard]] int long_preamble_start() const { return short_preamble_len(); }
  /// First sample of training symbol `rep` (after the long cyclic prefix).
  [[nodiscard]] int lts_start(int rep) const { return short_preamble_len() + lts_cp + rep * lts_len; }
  [[nodiscard]] int payload_start() const { return short_preamble_len() + long_preamble_len(); }

  [[nodiscard]] int data_symbols_per_frame() const {
    return payload_count * static_cast<int>(data_bins.size());
  }
  [[nodiscard]] int bits_per_frame() const { return 2 * data_symbols_per_frame(); }

  [[nodiscard]] bool is_virtual(int bin) const;
  void validate() const;
};

/// Maps a signed subcarrier number (-32..31) onto its DFT bin.
constexpr int subcarrier_to_bin(int subcarrier, int fft_len = 64) {
  return subcarrier >= 0 ? subcarrier : subcarrier + fft_len;
}

/// Gray QPSK, 00 in the first quadrant, unit average energy.
IqBuffer qpsk_map(std::span<const std::uint8_t> bits, double sample_rate_hz = kBasebandRateHz);
BitVector qpsk_demap(std::span<const Complex> symbols);

/// Reproducible payload bits; the same seed always yields the same stream.
BitVector prbs_bits(std::uint64_t seed, std::size_t n);

/// splitmix64 step, used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

double power_db(double linear);

/// x[n] *= exp(j (2 pi cycles_per_sample n + phase_rad)). The phasor is
/// re-derived exactly every few hundred samples so errors stay near 1e-13.
void mix_in_place(std::span<Complex> x, double cycles_per_sample, double phase_rad);

}  // namespace mmw
