#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mmw/common.hpp"
#include "mmw/frontend.hpp"

namespace mmw {

struct DetectionResult {
  bool detected = false;
  // Index (in the matched-filter output) where the frame is taken to start.
  std::size_t start_index = 0;
  std::vector<double> metric_trace;
  // Largest metric within one plateau length of the first threshold
  // crossing, or the global maximum if nothing crosses.
  double peak_metric = 0.0;
  // Largest metric anywhere in the trace, i.e. the highest threshold that
  // would still have detected something.
  double max_metric = 0.0;
  double threshold_used = 0.0;
  // Raw lag correlation sum at the peak; its angle carries the CFO.
  Complex lag_correlation{};
};

/// Convolution with the Tx RRC taps; same length as the input, pulses delayed
/// by filt.group_delay().
IqBuffer matched_filter(const IqBuffer& rx, const RrcFilterSpec& filt);

/// Normalised delay correlation
///   m[n] = |sum r[n+k] conj(r[n+k+D])| / sum |r[n+k]| |r[n+k+D]|
/// with D = sts_len * sps and a window of (sts_repeats - 1) * D. Windows whose
/// energy is more than 60 dB below the strongest window score zero.
DetectionResult detect_packet(const IqBuffer& rx, double threshold, const FrameLayout& layout,
                              int samples_per_symbol = kShapingInterpolation);

struct Decimated {
  IqBuffer frame;
  int phase_offset = 0;  // chosen offset relative to the requested start, in [-5, 5]
};

/// Takes layout.frame_len() samples spaced sps apart, trying every offset in
/// [-sps/2, sps/2] around start and keeping the one with the most energy.
/// Throws TruncatedFrame if fewer than frame_len * sps samples follow start.
Decimated decimate_10(const IqBuffer& mf, std::size_t start, const FrameLayout& layout,
                      int samples_per_symbol = kShapingInterpolation);

/// Lag-16 correlation over the short preamble; unambiguous within +-fs/32.
double coarse_cfo(const IqBuffer& frame, const FrameLayout& layout);
/// Lag-64 correlation between the two long training symbols; +-fs/128.
double fine_cfo(const IqBuffer& frame, const FrameLayout& layout);

/// Multiplies sample n by exp(-j 2 pi f n / fs).
IqBuffer correct_cfo(const IqBuffer& frame, double cfo_hz);

struct ChannelEstimate {
  std::array<Complex, 64> gains{};
  std::array<bool, 64> valid{};
};

ChannelEstimate estimate_channel_ls(const IqBuffer& frame, const FrameLayout& layout,
                                    const std::array<Complex, 64>& known_lts);

inline constexpr double kDefaultGainFloor = 1e-6;

/// Zero-forcing equalisation plus per-symbol common phase correction from
/// the pilots. `payloads` holds the payload symbols with their prefixes.
/// Returns the equalised data symbols in transmit order.
std::vector<Complex> equalize_payloads(std::span<const Complex> payloads, const ChannelEstimate& channel,
                                       const FrameLayout& layout, double gain_floor = kDefaultGainFloor);

BitVector equalize_and_demod(std::span<const Complex> payloads, const ChannelEstimate& channel,
                             const FrameLayout& layout, double gain_floor = kDefaultGainFloor);

double compute_ber(std::span<const std::uint8_t> rx_bits, std::span<const std::uint8_t> ref_bits);
std::size_t count_bit_errors(std::span<const std::uint8_t> rx_bits, std::span<const std::uint8_t> ref_bits);

struct RxReport {
  DetectionResult detection;
  bool decoded = false;
  std::string failure;
  std::size_t start_index = 0;
  int decimation_phase = 0;
  double coarse_cfo_hz = 0.0;
  double fine_cfo_hz = 0.0;
  ChannelEstimate channel;
  std::vector<Complex> equalized;
  BitVector bits;
  // A frame that is missed or cannot be decoded counts every bit as wrong.
  std::size_t bit_errors = 0;
  double ber = 1.0;
};

std::string rx_report_csv_header();
std::string rx_report_csv_row(const std::string& scenario, const RxReport& report);

/// The full receive chain for one capture at 307.2 MSPS.
class Receiver {
 public:
  Receiver(FrameLayout layout, RrcFilterSpec filt);

  [[nodiscard]] RxReport process(const IqBuffer& rx, std::span<const std::uint8_t> ref_bits, double threshold) const;

  /// Locates the frame start to within a sample by cross-correlating
  /// against the shaped long training symbols, after removing the CFO seen
  /// by the detector.
  [[nodiscard]] std::size_t refine_timing(const IqBuffer& mf, const DetectionResult& det) const;

  [[nodiscard]] const FrameLayout& layout() const { return layout_; }
  [[nodiscard]] const RrcFilterSpec& filter() const { return filt_; }

 private:
  FrameLayout layout_;
  RrcFilterSpec filt_;
  std::array<Complex, 64> known_lts_{};
  std::vector<Complex> lts_template_;
  std::size_t template_offset_ = 0;  // template start relative to the frame start
};

}  // namespace mmw
