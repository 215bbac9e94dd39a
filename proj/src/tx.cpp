#include "mmw/tx.hpp"

#include <cmath>

#include "mmw/dft.hpp"

namespace mmw {
namespace {

const double kStsAmp = std::sqrt(13.0 / 6.0);
const Complex kP{kStsAmp, kStsAmp};
const Complex kN{-kStsAmp, -kStsAmp};
const Complex kZ{0.0, 0.0};

std::array<Complex, 64> to_bins(auto const& seq) {
  std::array<Complex, 64> bins{};
  for (int sc = -26; sc <= 26; ++sc) bins[static_cast<std::size_t>(subcarrier_to_bin(sc))] = seq[static_cast<std::size_t>(sc + 26)];
  return bins;
}

}  // namespace

// clang-format off
const std::array<Complex, 53> kShortTrainingSeq{
    kZ, kZ, kP, kZ, kZ, kZ, kN, kZ, kZ, kZ, kP, kZ, kZ, kZ, kN, kZ, kZ, kZ, kN, kZ, kZ, kZ, kP, kZ, kZ, kZ,
    kZ,
    kZ, kZ, kZ, kN, kZ, kZ, kZ, kN, kZ, kZ, kZ, kP, kZ, kZ, kZ, kP, kZ, kZ, kZ, kP, kZ, kZ, kZ, kP, kZ, kZ};

const std::array<double, 53> kLongTrainingSeq{
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1,
    0,
    1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1};
// clang-format on

double frame_scale(const FrameLayout& layout) {
  const double occupied = static_cast<double>(layout.data_bins.size() + layout.pilot_bins.size());
  return std::sqrt(static_cast<double>(layout.payload_fft) / occupied);
}

std::array<Complex, 64> long_training_bins(const FrameLayout& layout) {
  auto bins = to_bins(kLongTrainingSeq);
  for (int b : layout.virtual_bins) bins[static_cast<std::size_t>(b)] = 0.0;
  return bins;
}

std::array<Complex, 64> short_training_bins(const FrameLayout& layout) {
  auto bins = to_bins(kShortTrainingSeq);
  for (int b : layout.virtual_bins) bins[static_cast<std::size_t>(b)] = 0.0;
  return bins;
}

IqBuffer build_short_preamble(const FrameLayout& layout) {
  const auto bins = short_training_bins(layout);
  const auto symbol = ifft(bins);
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(layout.short_preamble_len()));
  for (int rep = 0; rep < layout.sts_repeats; ++rep) {
    out.insert(out.end(), symbol.begin(), symbol.begin() + layout.sts_len);
  }
  return {std::move(out), kBasebandRateHz};
}

IqBuffer build_long_preamble(const FrameLayout& layout) {
  const auto bins = long_training_bins(layout);
  const auto symbol = ifft(bins);
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(layout.long_preamble_len()));
  out.insert(out.end(), symbol.end() - layout.lts_cp, symbol.end());
  for (int rep = 0; rep < layout.lts_repeats; ++rep) out.insert(out.end(), symbol.begin(), symbol.end());
  return {std::move(out), kBasebandRateHz};
}

IqBuffer build_payload_symbol(const OfdmSymbolSpec& spec) {
  if (spec.layout == nullptr) throw std::invalid_argument("build_payload_symbol: missing layout");
  const FrameLayout& layout = *spec.layout;

  std::vector<Complex> bins(static_cast<std::size_t>(layout.payload_fft), Complex{});
  for (std::size_t i = 0; i < layout.data_bins.size(); ++i) bins[static_cast<std::size_t>(layout.data_bins[i])] = spec.data[i];
  for (std::size_t i = 0; i < layout.pilot_bins.size(); ++i) bins[static_cast<std::size_t>(layout.pilot_bins[i])] = spec.pilots[i];

  const auto body = ifft(bins);
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(layout.payload_symbol_len()));
  out.insert(out.end(), body.end() - layout.payload_cp, body.end());
  out.insert(out.end(), body.begin(), body.end());
  return {std::move(out), kBasebandRateHz};
}

TxFrame build_frame(std::span<const std::uint8_t> bits, const FrameLayout& layout) {
  if (static_cast<int>(bits.size()) != layout.bits_per_frame()) {
    throw std::invalid_argument("build_frame: expected " + std::to_string(layout.bits_per_frame()) + " bits, got " +
                                std::to_string(bits.size()));
  }

  const IqBuffer symbols = qpsk_map(bits);
  std::vector<Complex> frame;
  frame.reserve(static_cast<std::size_t>(layout.frame_len()));

  const auto sts = build_short_preamble(layout);
  const auto lts = build_long_preamble(layout);
  frame.insert(frame.end(), sts.vec().begin(), sts.vec().end());
  frame.insert(frame.end(), lts.vec().begin(), lts.vec().end());

  const std::size_t per_symbol = layout.data_bins.size();
  for (int p = 0; p < layout.payload_count; ++p) {
    OfdmSymbolSpec spec;
    spec.layout = &layout;
    for (std::size_t i = 0; i < per_symbol; ++i) spec.data[i] = symbols[static_cast<std::size_t>(p) * per_symbol + i];
    spec.pilots.fill(kPilotValue);
    const auto sym = build_payload_symbol(spec);
    frame.insert(frame.end(), sym.vec().begin(), sym.vec().end());
  }

  const double scale = frame_scale(layout);
  for (auto& s : frame) s *= scale;

  return {IqBuffer{std::move(frame), kBasebandRateHz}, BitVector(bits.begin(), bits.end())};
}

}  // namespace mmw
