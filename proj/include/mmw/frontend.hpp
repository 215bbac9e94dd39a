#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmw/common.hpp"

namespace mmw {

inline constexpr double kDefaultRolloff = 0.25;
inline constexpr int kDefaultSpanSymbols = 24;

struct RrcFilterSpec {
  double rolloff = kDefaultRolloff;
  int span_symbols = kDefaultSpanSymbols;
  int samples_per_symbol = kShapingInterpolation;
  std::vector<double> taps;

  /// Delay (in output samples) between an input symbol and its pulse peak.
  [[nodiscard]] int group_delay() const { return static_cast<int>(taps.size() / 2); }
};

/// Root-raised-cosine taps normalised to unit energy, so the Tx/Rx cascade
/// has unit gain at the symbol instants.
RrcFilterSpec design_rrc(double rolloff = kDefaultRolloff, int span_symbols = kDefaultSpanSymbols,
                         int samples_per_symbol = kShapingInterpolation);

/// Zero-stuff by 10 and filter. The output keeps the first 10*N samples of
/// the full convolution, so input sample k peaks at output 10*k + group_delay();
/// callers that need the trailing tail append zeros first.
IqBuffer interpolate_pulse_shape(const IqBuffer& frame, const RrcFilterSpec& filt);

/// Same-length causal FIR with real taps (output n = sum_k taps[k] x[n-k]).
std::vector<Complex> fir_filter(std::span<const Complex> x, std::span<const double> taps);

/// Interleaved 16-bit I/Q words plus the amplitude that maps to full scale.
struct QuantizedIq {
  std::vector<std::int16_t> words;
  double full_scale = 1.0;

  [[nodiscard]] std::size_t sample_count() const { return words.size() / 2; }
};

inline constexpr double kQuantizerScale = 32768.0;

/// Normalise by the largest |I| or |Q| so it reaches full scale, then round
/// half away from zero and saturate to [-32768, 32767].
QuantizedIq scale_quantize(const IqBuffer& signal);

/// word / 2^15 per component. Throws std::invalid_argument on an odd word count.
IqBuffer dequantize(std::span<const std::int16_t> words, double sample_rate_hz);
IqBuffer dequantize(const QuantizedIq& q, double sample_rate_hz);

enum class ResampleDirection { Up, Down };

/// Windowed-sinc lowpass used by the converter-tile 16x rate change.
const std::vector<double>& converter_lowpass_taps();

/// 16x rate change between 307.2 MSPS and 4.9152 GSPS. Both directions
/// remove the lowpass group delay, so down(up(x)) lines up with x.
IqBuffer resample_16(const IqBuffer& signal, ResampleDirection direction);

struct NcoSpec {
  double frequency_hz = 0.0;
  double initial_phase_rad = 0.0;
};

/// Multiplies sample n by exp(j(2 pi f n / fs + phi0)).
IqBuffer nco_shift(const IqBuffer& signal, const NcoSpec& nco);

/// The IF expressed as a complex shift inside the converter's first Nyquist
/// zone (3.8 GHz folds to -1.1152 GHz at 4.9152 GSPS).
double folded_nco_frequency(double frequency_hz, double sample_rate_hz);

}  // namespace mmw
