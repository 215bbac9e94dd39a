#include "mmw/frontend.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mmw {
namespace {

constexpr double kPi = std::numbers::pi;

double rrc_tap(double t, double beta) {
  if (std::abs(t) < 1e-12) return 1.0 - beta + 4.0 * beta / kPi;
  const double singular = 1.0 / (4.0 * beta);
  if (std::abs(std::abs(t) - singular) < 1e-9) {
    return beta / std::sqrt(2.0) *
           ((1.0 + 2.0 / kPi) * std::sin(kPi / (4.0 * beta)) + (1.0 - 2.0 / kPi) * std::cos(kPi / (4.0 * beta)));
  }
  const double num = std::sin(kPi * t * (1.0 - beta)) + 4.0 * beta * t * std::cos(kPi * t * (1.0 + beta));
  const double den = kPi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
  return num / den;
}

// Kaiser-windowed sinc, cutoff at half the low rate. 161 taps with beta 9
// keeps passband ripple near 1e-5 over +-30.72 MHz and the stopband below
// -90 dB from 276 MHz.
constexpr int kConverterHalfLen = 80;
constexpr double kConverterKaiserBeta = 9.0;

std::vector<double> design_converter_lowpass() {
  const int len = 2 * kConverterHalfLen + 1;
  const double cutoff = 0.5 / kConverterInterpolation;
  std::vector<double> h(static_cast<std::size_t>(len));
  const double i0_beta = std::cyl_bessel_i(0.0, kConverterKaiserBeta);
  for (int n = 0; n < len; ++n) {
    const double m = n - kConverterHalfLen;
    const double sinc = m == 0 ? 2.0 * cutoff : std::sin(2.0 * kPi * cutoff * m) / (kPi * m);
    const double r = m / kConverterHalfLen;
    const double w = std::cyl_bessel_i(0.0, kConverterKaiserBeta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[static_cast<std::size_t>(n)] = sinc * w;
  }
  double dc = 0.0;
  for (double v : h) dc += v;
  for (double& v : h) v /= dc;
  return h;
}

void require_rate(const IqBuffer& b, double rate, const char* who) {
  if (std::abs(b.sample_rate_hz() - rate) > 1e-6 * rate) {
    throw std::invalid_argument(std::string(who) + ": unexpected sample rate " + std::to_string(b.sample_rate_hz()));
  }
}

}  // namespace

RrcFilterSpec design_rrc(double rolloff, int span_symbols, int samples_per_symbol) {
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("design_rrc: rolloff must be in (0, 1]");
  if (span_symbols < 4) throw std::invalid_argument("design_rrc: span must be at least 4 symbols");
  if (samples_per_symbol < 1) throw std::invalid_argument("design_rrc: samples per symbol must be >= 1");
  if ((span_symbols * samples_per_symbol) % 2 != 0) {
    throw std::invalid_argument("design_rrc: span * sps must be even for a symmetric odd-length filter");
  }

  RrcFilterSpec spec;
  spec.rolloff = rolloff;
  spec.span_symbols = span_symbols;
  spec.samples_per_symbol = samples_per_symbol;

  const int half = span_symbols * samples_per_symbol / 2;
  spec.taps.resize(static_cast<std::size_t>(2 * half + 1));
  for (int n = -half; n <= half; ++n) {
    spec.taps[static_cast<std::size_t>(n + half)] = rrc_tap(static_cast<double>(n) / samples_per_symbol, rolloff);
  }
  // Force exact symmetry, then unit energy.
  for (int n = 1; n <= half; ++n) {
    const double avg = 0.5 * (spec.taps[static_cast<std::size_t>(half + n)] + spec.taps[static_cast<std::size_t>(half - n)]);
    spec.taps[static_cast<std::size_t>(half + n)] = avg;
    spec.taps[static_cast<std::size_t>(half - n)] = avg;
  }
  double energy = 0.0;
  for (double t : spec.taps) energy += t * t;
  const double norm = 1.0 / std::sqrt(energy);
  for (double& t : spec.taps) t *= norm;
  return spec;
}

std::vector<Complex> fir_filter(std::span<const Complex> x, std::span<const double> taps) {
  std::vector<Complex> y(x.size());
  const std::size_t l = taps.size();
  for (std::size_t n = 0; n < x.size(); ++n) {
    double re = 0.0;
    double im = 0.0;
    const std::size_t kmax = std::min(l, n + 1);
    for (std::size_t k = 0; k < kmax; ++k) {
      const Complex& v = x[n - k];
      re += taps[k] * v.real();
      im += taps[k] * v.imag();
    }
    y[n] = {re, im};
  }
  return y;
}

IqBuffer interpolate_pulse_shape(const IqBuffer& frame, const RrcFilterSpec& filt) {
  require_rate(frame, kBasebandRateHz, "interpolate_pulse_shape");
  if (filt.samples_per_symbol != kShapingInterpolation) {
    throw std::invalid_argument("interpolate_pulse_shape: filter must be designed for 10 samples per symbol");
  }
  const std::size_t sps = static_cast<std::size_t>(filt.samples_per_symbol);
  const std::size_t out_len = frame.size() * sps;
  const std::size_t l = filt.taps.size();

  // Polyphase: only every 10th input of the zero-stuffed stream is nonzero.
  std::vector<Complex> y(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    double re = 0.0;
    double im = 0.0;
    const std::size_t phase = n % sps;
    for (std::size_t k = phase; k < l && k <= n; k += sps) {
      const Complex& v = frame[(n - k) / sps];
      re += filt.taps[k] * v.real();
      im += filt.taps[k] * v.imag();
    }
    y[n] = {re, im};
  }
  return {std::move(y), frame.sample_rate_hz() * static_cast<double>(sps)};
}

QuantizedIq scale_quantize(const IqBuffer& signal) {
  double peak = 0.0;
  for (const auto& s : signal.samples()) peak = std::max({peak, std::abs(s.real()), std::abs(s.imag())});
  if (!(peak > 0.0)) throw DegenerateInput("scale_quantize: all-zero signal");
  if (!std::isfinite(peak)) throw std::invalid_argument("scale_quantize: non-finite samples");

  auto quantize = [](double v) -> std::int16_t {
    const long r = std::lround(v * kQuantizerScale);
    return static_cast<std::int16_t>(std::clamp<long>(r, -32768, 32767));
  };

  QuantizedIq q;
  q.full_scale = peak;
  q.words.reserve(signal.size() * 2);
  for (const auto& s : signal.samples()) {
    q.words.push_back(quantize(s.real() / peak));
    q.words.push_back(quantize(s.imag() / peak));
  }
  return q;
}

IqBuffer dequantize(std::span<const std::int16_t> words, double sample_rate_hz) {
  if (words.size() % 2 != 0) throw std::invalid_argument("dequantize: odd word count");
  std::vector<Complex> out(words.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {words[2 * i] / kQuantizerScale, words[2 * i + 1] / kQuantizerScale};
  }
  return {std::move(out), sample_rate_hz};
}

IqBuffer dequantize(const QuantizedIq& q, double sample_rate_hz) { return dequantize(q.words, sample_rate_hz); }

const std::vector<double>& converter_lowpass_taps() {
  static const std::vector<double> taps = design_converter_lowpass();
  return taps;
}

IqBuffer resample_16(const IqBuffer& signal, ResampleDirection direction) {
  const auto& h = converter_lowpass_taps();
  const std::size_t l = h.size();
  const std::size_t m = l / 2;
  const std::size_t r = kConverterInterpolation;

  if (direction == ResampleDirection::Up) {
    require_rate(signal, kShapedRateHz, "resample_16(up)");
    const std::size_t n_in = signal.size();
    std::vector<Complex> y(n_in * r);
    for (std::size_t n = 0; n < y.size(); ++n) {
      // y[n] = r * sum_k x[k] h[n + m - r k]
      const std::size_t base = n + m;
      const std::size_t k_lo = base >= l ? (base - l) / r + 1 : 0;
      const std::size_t k_hi = std::min(n_in - 1, base / r);
      double re = 0.0;
      double im = 0.0;
      for (std::size_t k = k_lo; k <= k_hi && k < n_in; ++k) {
        const double t = h[base - r * k];
        re += t * signal[k].real();
        im += t * signal[k].imag();
      }
      y[n] = {re * static_cast<double>(r), im * static_cast<double>(r)};
    }
    return {std::move(y), kConverterRateHz};
  }

  require_rate(signal, kConverterRateHz, "resample_16(down)");
  const std::size_t n_out = signal.size() / r;
  std::vector<Complex> y(n_out);
  const std::size_t n_in = signal.size();
  for (std::size_t k = 0; k < n_out; ++k) {
    // Full-convolution index r*k + m, i.e. the filter centred on input r*k.
    const std::size_t centre = r * k + m;
    double re = 0.0;
    double im = 0.0;
    const std::size_t j_lo = centre >= n_in ? centre - n_in + 1 : 0;
    const std::size_t j_hi = std::min(l - 1, centre);
    for (std::size_t j = j_lo; j <= j_hi; ++j) {
      const Complex& v = signal[centre - j];
      re += h[j] * v.real();
      im += h[j] * v.imag();
    }
    y[k] = {re, im};
  }
  return {std::move(y), kShapedRateHz};
}

IqBuffer nco_shift(const IqBuffer& signal, const NcoSpec& nco) {
  const double fs = signal.sample_rate_hz();
  if (!(std::abs(nco.frequency_hz) < fs / 2.0)) {
    throw std::invalid_argument("nco_shift: frequency beyond Nyquist");
  }
  std::vector<Complex> out(signal.vec());
  mix_in_place(out, nco.frequency_hz / fs, nco.initial_phase_rad);
  return {std::move(out), fs};
}

double folded_nco_frequency(double frequency_hz, double sample_rate_hz) {
  double f = std::fmod(frequency_hz, sample_rate_hz);
  if (f >= sample_rate_hz / 2.0) f -= sample_rate_hz;
  if (f < -sample_rate_hz / 2.0) f += sample_rate_hz;
  return f;
}

}  // namespace mmw
