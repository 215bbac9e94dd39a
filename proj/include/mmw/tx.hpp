#pragma once

#include <array>

#include "mmw/common.hpp"

namespace mmw {

// Training sequences on subcarriers -26..26 (index 0 is subcarrier -26).
// The short sequence occupies every 4th subcarrier, which makes its 64-point
// inverse DFT periodic in 16 samples.
extern const std::array<Complex, 53> kShortTrainingSeq;
extern const std::array<double, 53> kLongTrainingSeq;

// Pilot value on every pilot bin of every payload symbol.
inline constexpr double kPilotValue = 1.0;

/// Scale applied to the whole frame so a payload symbol body has unit RMS
/// (52 unit-energy bins spread over 64 samples by the unitary inverse DFT).
double frame_scale(const FrameLayout& layout);

/// Frequency-domain long training symbol on the 64-bin grid (zero on virtual bins).
std::array<Complex, 64> long_training_bins(const FrameLayout& layout);
std::array<Complex, 64> short_training_bins(const FrameLayout& layout);

struct OfdmSymbolSpec {
  std::array<Complex, 48> data{};
  std::array<Complex, 4> pilots{};
  const FrameLayout* layout = nullptr;
};

struct TxFrame {
  IqBuffer time_samples;
  BitVector payload_bits;
};

IqBuffer build_short_preamble(const FrameLayout& layout);
IqBuffer build_long_preamble(const FrameLayout& layout);
IqBuffer build_payload_symbol(const OfdmSymbolSpec& spec);

/// short preamble | long preamble | payload 1 | payload 2, scaled by
/// frame_scale(). Throws std::invalid_argument unless bits has exactly
/// layout.bits_per_frame() entries.
TxFrame build_frame(std::span<const std::uint8_t> bits, const FrameLayout& layout);

}  // namespace mmw
