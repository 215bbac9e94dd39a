#include "mmw/rx.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "mmw/dft.hpp"
#include "mmw/tx.hpp"

namespace mmw {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinRelativeWindowEnergy = 1e-6;
constexpr std::size_t kRecomputeEvery = 512;

std::string fixed(double v, int precision) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << v;
  return os.str();
}

}  // namespace

IqBuffer matched_filter(const IqBuffer& rx, const RrcFilterSpec& filt) {
  const double expected = kBasebandRateHz * filt.samples_per_symbol;
  if (std::abs(rx.sample_rate_hz() - expected) > 1e-6 * expected) {
    throw std::invalid_argument("matched_filter: sample rate does not match the filter");
  }
  return {fir_filter(rx.samples(), filt.taps), rx.sample_rate_hz()};
}

DetectionResult detect_packet(const IqBuffer& rx, double threshold, const FrameLayout& layout, int samples_per_symbol) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw std::invalid_argument("detect_packet: threshold must be in (0, 1]");

  DetectionResult det;
  det.threshold_used = threshold;

  const std::size_t lag = static_cast<std::size_t>(layout.sts_len * samples_per_symbol);
  const std::size_t window = static_cast<std::size_t>(layout.sts_repeats - 1) * lag;
  const std::size_t n = rx.size();
  if (n < window + lag + 1) return det;
  const std::size_t len = n - window - lag + 1;

  std::vector<Complex> prod(n - lag);
  std::vector<double> mag(n - lag);
  for (std::size_t i = 0; i < prod.size(); ++i) {
    prod[i] = rx[i] * std::conj(rx[i + lag]);
    mag[i] = std::abs(rx[i]) * std::abs(rx[i + lag]);
  }

  std::vector<Complex> num(len);
  std::vector<double> den(len);
  Complex acc_num{};
  double acc_den = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    if (i % kRecomputeEvery == 0) {
      acc_num = {};
      acc_den = 0.0;
      for (std::size_t k = 0; k < window; ++k) {
        acc_num += prod[i + k];
        acc_den += mag[i + k];
      }
    } else {
      acc_num += prod[i + window - 1] - prod[i - 1];
      acc_den += mag[i + window - 1] - mag[i - 1];
    }
    num[i] = acc_num;
    den[i] = acc_den;
  }

  const double den_max = *std::max_element(den.begin(), den.end());
  det.metric_trace.assign(len, 0.0);
  if (den_max > 0.0) {
    const double floor = den_max * kMinRelativeWindowEnergy;
    for (std::size_t i = 0; i < len; ++i) {
      if (den[i] > floor) det.metric_trace[i] = std::min(1.0, std::abs(num[i]) / den[i]);
    }
  }

  const auto& m = det.metric_trace;
  const auto global = std::max_element(m.begin(), m.end());
  det.max_metric = *global;

  auto first = std::find_if(m.begin(), m.end(), [&](double v) { return v >= threshold; });
  if (first == m.end()) {
    det.peak_metric = det.max_metric;
    det.start_index = static_cast<std::size_t>(global - m.begin());
    det.lag_correlation = num[det.start_index];
    return det;
  }

  // Peak within one plateau length of the first crossing, so a brief dip on
  // the rising edge does not end the search early. Ties go to the later
  // index because the window only fully covers the short preamble at its end.
  std::size_t best = static_cast<std::size_t>(first - m.begin());
  const std::size_t search_end = std::min(len, best + window + lag);
  for (std::size_t i = best; i < search_end; ++i) {
    if (m[i] >= m[best] - 1e-12) best = i;
  }
  det.detected = true;
  det.start_index = best;
  det.peak_metric = m[best];
  det.lag_correlation = num[best];
  return det;
}

Decimated decimate_10(const IqBuffer& mf, std::size_t start, const FrameLayout& layout, int samples_per_symbol) {
  const std::size_t sps = static_cast<std::size_t>(samples_per_symbol);
  const std::size_t frame_len = static_cast<std::size_t>(layout.frame_len());
  if (start >= mf.size() || mf.size() - start < frame_len * sps) {
    throw TruncatedFrame("decimate_10: fewer than " + std::to_string(frame_len * sps) + " samples after start");
  }

  const int half = samples_per_symbol / 2;
  int best_offset = 0;
  double best_energy = -1.0;
  // Visit 0, -1, +1, -2, +2, ... so ties keep the smallest shift.
  for (int step = 0; step <= 2 * half; ++step) {
    const int offset = (step % 2 == 0) ? step / 2 : -(step + 1) / 2;
    if (std::abs(offset) > half) continue;
    const auto first = static_cast<long long>(start) + offset;
    const auto last = first + static_cast<long long>((frame_len - 1) * sps);
    if (first < 0 || last >= static_cast<long long>(mf.size())) continue;
    double e = 0.0;
    for (std::size_t k = 0; k < frame_len; ++k) e += std::norm(mf[static_cast<std::size_t>(first) + k * sps]);
    if (e > best_energy) {
      best_energy = e;
      best_offset = offset;
    }
  }

  std::vector<Complex> out(frame_len);
  const std::size_t first = static_cast<std::size_t>(static_cast<long long>(start) + best_offset);
  for (std::size_t k = 0; k < frame_len; ++k) out[k] = mf[first + k * sps];
  return {IqBuffer{std::move(out), mf.sample_rate_hz() / static_cast<double>(sps)}, best_offset};
}

double coarse_cfo(const IqBuffer& frame, const FrameLayout& layout) {
  const std::size_t lag = static_cast<std::size_t>(layout.sts_len);
  const std::size_t span = static_cast<std::size_t>(layout.short_preamble_len());
  if (frame.size() < span) throw EstimationFailed("coarse_cfo: frame shorter than the short preamble");
  Complex acc{};
  for (std::size_t n = 0; n + lag < span; ++n) acc += std::conj(frame[n]) * frame[n + lag];
  if (std::abs(acc) == 0.0) throw EstimationFailed("coarse_cfo: zero-energy short preamble");
  return std::arg(acc) * frame.sample_rate_hz() / (2.0 * kPi * static_cast<double>(lag));
}

double fine_cfo(const IqBuffer& frame, const FrameLayout& layout) {
  const std::size_t a = static_cast<std::size_t>(layout.lts_start(0));
  const std::size_t b = static_cast<std::size_t>(layout.lts_start(1));
  const std::size_t len = static_cast<std::size_t>(layout.lts_len);
  if (frame.size() < b + len) throw EstimationFailed("fine_cfo: frame shorter than the long preamble");
  Complex acc{};
  for (std::size_t n = 0; n < len; ++n) acc += std::conj(frame[a + n]) * frame[b + n];
  if (std::abs(acc) == 0.0) throw EstimationFailed("fine_cfo: zero-energy long preamble");
  return std::arg(acc) * frame.sample_rate_hz() / (2.0 * kPi * static_cast<double>(b - a));
}

IqBuffer correct_cfo(const IqBuffer& frame, double cfo_hz) {
  const double cycles_per_sample = cfo_hz / frame.sample_rate_hz();
  std::vector<Complex> out(frame.vec());
  mix_in_place(out, -cycles_per_sample, 0.0);
  return {std::move(out), frame.sample_rate_hz()};
}

ChannelEstimate estimate_channel_ls(const IqBuffer& frame, const FrameLayout& layout,
                                    const std::array<Complex, 64>& known_lts) {
  const auto span = frame.samples();
  const std::size_t len = static_cast<std::size_t>(layout.lts_len);
  const std::size_t a = static_cast<std::size_t>(layout.lts_start(0));
  const std::size_t b = static_cast<std::size_t>(layout.lts_start(1));
  if (span.size() < b + len) throw std::invalid_argument("estimate_channel_ls: frame too short");

  const auto y1 = fft(span.subspan(a, len));
  const auto y2 = fft(span.subspan(b, len));

  ChannelEstimate est;
  for (std::size_t k = 0; k < 64; ++k) {
    if (layout.is_virtual(static_cast<int>(k)) || std::abs(known_lts[k]) == 0.0) continue;
    est.gains[k] = (y1[k] + y2[k]) / (2.0 * known_lts[k]);
    est.valid[k] = true;
  }
  return est;
}

std::vector<Complex> equalize_payloads(std::span<const Complex> payloads, const ChannelEstimate& channel,
                                       const FrameLayout& layout, double gain_floor) {
  const std::size_t sym_len = static_cast<std::size_t>(layout.payload_symbol_len());
  const std::size_t cp = static_cast<std::size_t>(layout.payload_cp);
  const std::size_t fft_len = static_cast<std::size_t>(layout.payload_fft);
  if (payloads.size() < sym_len * static_cast<std::size_t>(layout.payload_count)) {
    throw std::invalid_argument("equalize_payloads: payload buffer too short");
  }

  const double scale = frame_scale(layout);
  std::vector<Complex> out;
  out.reserve(static_cast<std::size_t>(layout.data_symbols_per_frame()));

  for (int p = 0; p < layout.payload_count; ++p) {
    const auto y = fft(payloads.subspan(static_cast<std::size_t>(p) * sym_len + cp, fft_len));

    Complex pilot_acc{};
    for (int bin : layout.pilot_bins) {
      const auto k = static_cast<std::size_t>(bin);
      if (!channel.valid[k] || std::abs(channel.gains[k]) < gain_floor) continue;
      pilot_acc += (y[k] / channel.gains[k]) * std::conj(Complex{kPilotValue * scale, 0.0});
    }
    const Complex derotate = std::abs(pilot_acc) > 0.0 ? std::conj(pilot_acc) / std::abs(pilot_acc) : Complex{1.0, 0.0};

    for (int bin : layout.data_bins) {
      const auto k = static_cast<std::size_t>(bin);
      if (!channel.valid[k] || std::abs(channel.gains[k]) < gain_floor) {
        throw EqualizationSingular("equalize_payloads: channel gain below floor on data bin " + std::to_string(bin));
      }
      out.push_back(y[k] / channel.gains[k] * derotate / scale);
    }
  }
  return out;
}

BitVector equalize_and_demod(std::span<const Complex> payloads, const ChannelEstimate& channel,
                             const FrameLayout& layout, double gain_floor) {
  return qpsk_demap(equalize_payloads(payloads, channel, layout, gain_floor));
}

std::size_t count_bit_errors(std::span<const std::uint8_t> rx_bits, std::span<const std::uint8_t> ref_bits) {
  if (rx_bits.size() != ref_bits.size()) throw std::invalid_argument("compute_ber: length mismatch");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < rx_bits.size(); ++i) errors += (rx_bits[i] != 0) != (ref_bits[i] != 0);
  return errors;
}

double compute_ber(std::span<const std::uint8_t> rx_bits, std::span<const std::uint8_t> ref_bits) {
  const std::size_t errors = count_bit_errors(rx_bits, ref_bits);
  return rx_bits.empty() ? 0.0 : static_cast<double>(errors) / static_cast<double>(rx_bits.size());
}

std::string rx_report_csv_header() {
  return "scenario,detected,peak_metric,threshold,coarse_cfo_hz,fine_cfo_hz,ber,decimation_phase";
}

std::string rx_report_csv_row(const std::string& scenario, const RxReport& r) {
  std::ostringstream os;
  os << scenario << "," << (r.detection.detected ? 1 : 0) << "," << fixed(r.detection.peak_metric, 6) << ","
     << fixed(r.detection.threshold_used, 3) << "," << fixed(r.coarse_cfo_hz, 3) << "," << fixed(r.fine_cfo_hz, 3)
     << "," << fixed(r.ber, 6) << "," << r.decimation_phase;
  return os.str();
}

Receiver::Receiver(FrameLayout layout, RrcFilterSpec filt) : layout_(std::move(layout)), filt_(std::move(filt)) {
  const double scale = frame_scale(layout_);
  known_lts_ = long_training_bins(layout_);
  for (auto& v : known_lts_) v *= scale;

  // Shaped, matched-filtered preambles with a silent payload; keep the part
  // of the two long training symbols that the neighbouring sections cannot
  // reach through the filter tails.
  const std::size_t sps = static_cast<std::size_t>(filt_.samples_per_symbol);
  const std::size_t pad = static_cast<std::size_t>(filt_.span_symbols);
  std::vector<Complex> base(pad, Complex{});
  const auto sts = build_short_preamble(layout_);
  const auto lts = build_long_preamble(layout_);
  for (const auto& v : sts.samples()) base.push_back(v * scale);
  for (const auto& v : lts.samples()) base.push_back(v * scale);
  base.resize(base.size() + static_cast<std::size_t>(layout_.frame_len()) + pad, Complex{});

  const auto shaped = interpolate_pulse_shape(IqBuffer{std::move(base), kBasebandRateHz}, filt_);
  const auto mf = matched_filter(shaped, filt_);
  const std::size_t frame0 = pad * sps + 2 * static_cast<std::size_t>(filt_.group_delay());
  const std::size_t guard = static_cast<std::size_t>(filt_.group_delay());
  template_offset_ = static_cast<std::size_t>(layout_.lts_start(0)) * sps + guard;
  const std::size_t end = static_cast<std::size_t>(layout_.lts_start(layout_.lts_repeats - 1) + layout_.lts_len) * sps - guard;
  lts_template_.assign(mf.vec().begin() + static_cast<std::ptrdiff_t>(frame0 + template_offset_),
                       mf.vec().begin() + static_cast<std::ptrdiff_t>(frame0 + end));
}

std::size_t Receiver::refine_timing(const IqBuffer& mf, const DetectionResult& det) const {
  const std::size_t sps = static_cast<std::size_t>(filt_.samples_per_symbol);
  const std::size_t lag = static_cast<std::size_t>(layout_.sts_len) * sps;
  const std::size_t window = static_cast<std::size_t>(layout_.sts_repeats - 1) * lag;
  const std::size_t tlen = lts_template_.size();
  if (mf.size() < template_offset_ + tlen) return det.start_index;

  const std::size_t lo = det.start_index > window + lag ? det.start_index - window - lag : 0;
  const std::size_t hi = std::min(det.start_index + 2 * lag, mf.size() - template_offset_ - tlen);
  if (hi < lo) return det.start_index;

  // Detector CFO: the lag correlation rotates by -2 pi f lag / fs.
  const double fs = mf.sample_rate_hz();
  const double cfo = -std::arg(det.lag_correlation) * fs / (2.0 * kPi * static_cast<double>(lag));
  const std::size_t seg_start = lo + template_offset_;
  const std::size_t seg_len = hi - lo + tlen;
  std::vector<Complex> seg(mf.vec().begin() + static_cast<std::ptrdiff_t>(seg_start),
                           mf.vec().begin() + static_cast<std::ptrdiff_t>(seg_start + seg_len));
  mix_in_place(seg, -cfo / fs, 0.0);

  auto score = [&](std::size_t cand) {
    const std::size_t base = cand - lo;
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = 0; k < tlen; ++k) {
      const Complex& t = lts_template_[k];
      const Complex& y = seg[base + k];
      re += t.real() * y.real() + t.imag() * y.imag();
      im += t.real() * y.imag() - t.imag() * y.real();
    }
    return re * re + im * im;
  };

  const std::size_t coarse_step = sps / 2 > 0 ? sps / 2 : 1;
  std::size_t best = lo;
  double best_score = -1.0;
  for (std::size_t c = lo; c <= hi; c += coarse_step) {
    const double s = score(c);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  const std::size_t f_lo = best > lo + coarse_step ? best - coarse_step : lo;
  const std::size_t f_hi = std::min(best + coarse_step, hi);
  for (std::size_t c = f_lo; c <= f_hi; ++c) {
    const double s = score(c);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

RxReport Receiver::process(const IqBuffer& rx, std::span<const std::uint8_t> ref_bits, double threshold) const {
  RxReport report;
  report.bit_errors = ref_bits.size();
  report.ber = ref_bits.empty() ? 0.0 : 1.0;

  const IqBuffer mf = matched_filter(rx, filt_);
  report.detection = detect_packet(mf, threshold, layout_, filt_.samples_per_symbol);
  if (!report.detection.detected) {
    report.failure = "not detected";
    return report;
  }

  try {
    report.start_index = refine_timing(mf, report.detection);
    const Decimated dec = decimate_10(mf, report.start_index, layout_, filt_.samples_per_symbol);
    report.decimation_phase = dec.phase_offset;

    report.coarse_cfo_hz = coarse_cfo(dec.frame, layout_);
    const IqBuffer after_coarse = correct_cfo(dec.frame, report.coarse_cfo_hz);
    report.fine_cfo_hz = fine_cfo(after_coarse, layout_);
    const IqBuffer corrected = correct_cfo(after_coarse, report.fine_cfo_hz);

    report.channel = estimate_channel_ls(corrected, layout_, known_lts_);
    const auto payloads = corrected.samples().subspan(static_cast<std::size_t>(layout_.payload_start()));
    report.equalized = equalize_payloads(payloads, report.channel, layout_);
    report.bits = qpsk_demap(report.equalized);
    report.decoded = true;
    report.bit_errors = count_bit_errors(report.bits, ref_bits);
    report.ber = compute_ber(report.bits, ref_bits);
  } catch (const TruncatedFrame& e) {
    report.failure = e.what();
  } catch (const EstimationFailed& e) {
    report.failure = e.what();
  } catch (const EqualizationSingular& e) {
    report.failure = e.what();
  }
  return report;
}

}  // namespace mmw
