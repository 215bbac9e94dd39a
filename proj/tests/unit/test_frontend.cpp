#include <doctest.h>

#include <algorithm>

#include "mmw/dft.hpp"
#include "mmw/frontend.hpp"
#include "mmw/tx.hpp"
#include "oracles.hpp"

using namespace mmw;

namespace {

// Sum of random tones inside +-15.36 MHz at the shaped rate.
IqBuffer multitone(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> freq(-15.0e6, 15.0e6), phase(0.0, 2.0 * oracle::kPi);
  std::vector<Complex> x(n);
  for (int t = 0; t < 12; ++t) {
    const double f = freq(gen) / kShapedRateHz;
    const double p = phase(gen);
    for (std::size_t i = 0; i < n; ++i) x[i] += std::polar(0.2, 2.0 * oracle::kPi * f * static_cast<double>(i) + p);
  }
  return {std::move(x), kShapedRateHz};
}

double response_db(const std::vector<double>& h, double f_norm) {
  Complex acc{};
  for (std::size_t n = 0; n < h.size(); ++n) acc += h[n] * std::polar(1.0, -2.0 * oracle::kPi * f_norm * static_cast<double>(n));
  return 20.0 * std::log10(std::abs(acc));
}

}  // namespace

TEST_SUITE("frontend") {

TEST_CASE("rrc taps: count, symmetry, peak, energy") {
  const RrcFilterSpec short_filter = design_rrc(0.25, 8, 10);
  CHECK(short_filter.taps.size() == 81);
  const RrcFilterSpec f = design_rrc();
  REQUIRE(f.taps.size() == 241);
  CHECK(f.group_delay() == 120);
  for (const auto* spec : {&short_filter, &f}) {
    const auto& t = spec->taps;
    const std::size_t c = t.size() / 2;
    for (std::size_t i = 0; i < c; ++i) CHECK(std::abs(t[i] - t[t.size() - 1 - i]) < 1e-12);
    CHECK(std::max_element(t.begin(), t.end()) - t.begin() == static_cast<std::ptrdiff_t>(c));
    double e = 0.0;
    for (double v : t) e += v * v;
    CHECK(e == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rrc singular points use the analytic limit") {
  // beta = 0.25 puts t = 1 symbol exactly on the 1/(4 beta) singularity.
  const RrcFilterSpec f = design_rrc(0.25, 8, 10);
  for (double v : f.taps) CHECK(std::isfinite(v));
  // Taps around the singular point vary smoothly.
  const std::size_t s = 40 + 10;
  const double left = f.taps[s - 1], mid = f.taps[s], right = f.taps[s + 1];
  CHECK(std::abs(mid - 0.5 * (left + right)) < 0.05 * std::abs(f.taps[40]));
}

TEST_CASE("rrc parameter validation") {
  CHECK_THROWS_AS((void)design_rrc(0.0, 8, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)design_rrc(1.5, 8, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)design_rrc(0.25, 3, 10), std::invalid_argument);
  CHECK_THROWS_AS((void)design_rrc(0.25, 8, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)design_rrc(0.25, 5, 3), std::invalid_argument);
  CHECK_NOTHROW((void)design_rrc(1.0, 4, 1));
}

TEST_CASE("raised-cosine cascade has negligible symbol-spaced ISI") {
  const RrcFilterSpec f = design_rrc();
  const auto rc = oracle::convolve(f.taps, f.taps);
  const std::size_t centre = rc.size() / 2;
  CHECK(rc[centre] == doctest::Approx(1.0).epsilon(1e-12));
  double worst = 0.0;
  for (std::size_t k = centre % 10; k < rc.size(); k += 10) {
    if (k != centre) worst = std::max(worst, std::abs(rc[k]));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("pulse shaping lengths, zero input and impulse response") {
  const RrcFilterSpec f = design_rrc();
  const TxFrame frame = build_frame(prbs_bits(1, 192), FrameLayout::standard());
  const IqBuffer shaped = interpolate_pulse_shape(frame.time_samples, f);
  CHECK(shaped.size() == 4800);
  CHECK(shaped.sample_rate_hz() == doctest::Approx(kShapedRateHz));

  const IqBuffer zeros = interpolate_pulse_shape(IqBuffer(std::vector<Complex>(64), kBasebandRateHz), f);
  for (const auto& v : zeros.samples()) CHECK(v == Complex{});

  std::vector<Complex> imp(40);
  imp[0] = 1.0;
  const IqBuffer h = interpolate_pulse_shape(IqBuffer(imp, kBasebandRateHz), f);
  for (std::size_t i = 0; i < f.taps.size(); ++i) CHECK(h[i] == Complex{f.taps[i], 0.0});
  for (std::size_t i = f.taps.size(); i < h.size(); ++i) CHECK(h[i] == Complex{});

  CHECK_THROWS_AS((void)interpolate_pulse_shape(IqBuffer(imp, kShapedRateHz), f), std::invalid_argument);
  CHECK_THROWS_AS((void)interpolate_pulse_shape(frame.time_samples, design_rrc(0.25, 8, 4)), std::invalid_argument);
}

TEST_CASE("shaping, matched filtering and decimation recover the frame") {
  const RrcFilterSpec f = design_rrc();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TxFrame frame = build_frame(prbs_bits(seed, 192), FrameLayout::standard());
    std::vector<Complex> padded(frame.time_samples.vec());
    padded.resize(padded.size() + 30);
    const IqBuffer shaped = interpolate_pulse_shape(IqBuffer(padded, kBasebandRateHz), f);
    const auto mf = fir_filter(shaped.samples(), f.taps);
    std::vector<Complex> rec(480);
    for (std::size_t k = 0; k < 480; ++k) rec[k] = mf[10 * k + 2 * static_cast<std::size_t>(f.group_delay())];
    CHECK(oracle::rms_error(rec, frame.time_samples.samples()) < 1e-3);
  }
}

TEST_CASE("fir filter matches direct causal convolution") {
  const auto x = oracle::awgn(300, 1.0, 8);
  const std::vector<double> taps{0.5, -0.25, 0.125, 2.0};
  const auto y = fir_filter(x, taps);
  REQUIRE(y.size() == x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    Complex acc{};
    for (std::size_t k = 0; k < taps.size() && k <= n; ++k) acc += taps[k] * x[n - k];
    CHECK(std::abs(acc - y[n]) < 1e-14);
  }
}

TEST_CASE("quantizer maps the peak component to full scale") {
  const IqBuffer pos({{1.0, 0.25}, {0.0, 0.0}, {-0.5, 0.1}}, kShapedRateHz);
  const QuantizedIq q = scale_quantize(pos);
  REQUIRE(q.words.size() == 6);
  CHECK(q.sample_count() == 3);
  CHECK(q.full_scale == doctest::Approx(1.0));
  CHECK(q.words[0] == 32767);
  CHECK(q.words[1] == 8192);
  CHECK(q.words[2] == 0);
  CHECK(q.words[3] == 0);
  CHECK(q.words[4] == -16384);

  const IqBuffer neg({{0.5, -2.0}}, kShapedRateHz);
  const QuantizedIq qn = scale_quantize(neg);
  CHECK(qn.words[1] == -32768);
  CHECK(qn.words[0] == 8192);
  CHECK(qn.full_scale == doctest::Approx(2.0));
}

TEST_CASE("quantizer rounds half away from zero") {
  const double lsb = 1.0 / 32768.0;
  const IqBuffer x({{1.0, 0.0}, {0.5 * lsb, -0.5 * lsb}, {1.5 * lsb, -2.5 * lsb}}, kShapedRateHz);
  const QuantizedIq q = scale_quantize(x);
  CHECK(q.words[2] == 1);
  CHECK(q.words[3] == -1);
  CHECK(q.words[4] == 2);
  CHECK(q.words[5] == -3);
}

TEST_CASE("quantizer rejects all-zero and non-finite input") {
  CHECK_THROWS_AS((void)scale_quantize(IqBuffer(std::vector<Complex>(10), kShapedRateHz)), DegenerateInput);
  CHECK_THROWS_AS((void)scale_quantize(IqBuffer({{std::numeric_limits<double>::infinity(), 0.0}}, kShapedRateHz)),
                  std::invalid_argument);
}

TEST_CASE("dequantize definition") {
  const std::vector<std::int16_t> w{32767, -32768};
  const IqBuffer x = dequantize(w, kShapedRateHz);
  REQUIRE(x.size() == 1);
  CHECK(x[0].real() == doctest::Approx(0.99997).epsilon(1e-5));
  CHECK(x[0].imag() == -1.0);

  const IqBuffer z = dequantize(std::vector<std::int16_t>{0, 0, 0, 0}, kShapedRateHz);
  CHECK(z.size() == 2);
  CHECK(z[0] == Complex{});
  CHECK(z[1] == Complex{});

  CHECK_THROWS_AS((void)dequantize(std::vector<std::int16_t>{1, 2, 3}, kShapedRateHz), std::invalid_argument);
}

TEST_CASE("quantize round trip: ramp error bound and Gaussian SNR") {
  std::vector<Complex> ramp(2001);
  for (std::size_t i = 0; i < ramp.size(); ++i) {
    const double v = -1.0 + static_cast<double>(i) / 1000.0;
    ramp[i] = {v, -0.37 * v};
  }
  const IqBuffer r(ramp, kShapedRateHz);
  const QuantizedIq q = scale_quantize(r);
  const IqBuffer back = dequantize(q, kShapedRateHz);
  double worst = 0.0;
  for (std::size_t i = 0; i < ramp.size(); ++i) {
    const Complex norm = ramp[i] / q.full_scale;
    worst = std::max({worst, std::abs(back[i].real() - norm.real()), std::abs(back[i].imag() - norm.imag())});
  }
  CHECK(worst <= std::ldexp(1.0, -15));

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const IqBuffer g(oracle::awgn(20000, 1.0, seed), kShapedRateHz);
    const QuantizedIq qg = scale_quantize(g);
    const IqBuffer bg = dequantize(qg, kShapedRateHz);
    double sig = 0.0, err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Complex norm = g[i] / qg.full_scale;
      sig += std::norm(norm);
      err += std::norm(bg[i] - norm);
    }
    CHECK(10.0 * std::log10(sig / err) >= 80.0);
  }
}

TEST_CASE("converter lowpass: unit DC gain, flat passband, deep stopband") {
  const auto& h = converter_lowpass_taps();
  REQUIRE(h.size() % 2 == 1);
  double dc = 0.0;
  for (double v : h) dc += v;
  CHECK(dc == doctest::Approx(1.0).epsilon(1e-12));
  for (double f = 0.0; f <= 19.2e6; f += 0.6e6) CHECK(std::abs(response_db(h, f / kConverterRateHz)) < 1e-3);
  // Images of a 307.2 MSPS signal occupying +-19.2 MHz start at 288 MHz.
  double worst = -1e9;
  for (double f = 288e6; f <= kConverterRateHz / 2.0; f += 1.2e6) worst = std::max(worst, response_db(h, f / kConverterRateHz));
  CHECK(worst < -60.0);
}

TEST_CASE("resample lengths, rates and zero input") {
  const IqBuffer x(std::vector<Complex>(4800), kShapedRateHz);
  const IqBuffer up = resample_16(x, ResampleDirection::Up);
  CHECK(up.size() == 76800);
  CHECK(up.sample_rate_hz() == doctest::Approx(kConverterRateHz));
  for (const auto& v : up.samples()) CHECK(v == Complex{});
  const IqBuffer down = resample_16(up, ResampleDirection::Down);
  CHECK(down.size() == 4800);
  CHECK(down.sample_rate_hz() == doctest::Approx(kShapedRateHz));

  CHECK_THROWS_AS((void)resample_16(up, ResampleDirection::Up), std::invalid_argument);
  CHECK_THROWS_AS((void)resample_16(x, ResampleDirection::Down), std::invalid_argument);
}

TEST_CASE("16x up then down is the identity on band-limited signals") {
  const RrcFilterSpec f = design_rrc();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    // A shaped frame with silence on both sides.
    std::vector<Complex> burst(48);
    const TxFrame frame = build_frame(prbs_bits(seed, 192), FrameLayout::standard());
    burst.insert(burst.end(), frame.time_samples.vec().begin(), frame.time_samples.vec().end());
    burst.resize(burst.size() + 48);
    const IqBuffer shaped = interpolate_pulse_shape(IqBuffer(burst, kBasebandRateHz), f);
    const IqBuffer rt = resample_16(resample_16(shaped, ResampleDirection::Up), ResampleDirection::Down);
    CHECK(oracle::rms_error(rt.samples(), shaped.samples()) / std::sqrt(shaped.mean_power()) < 1e-3);

    // Free-running tones: skip the filter transient at each end.
    const IqBuffer tones = multitone(4800, seed);
    const IqBuffer rt2 = resample_16(resample_16(tones, ResampleDirection::Up), ResampleDirection::Down);
    const auto a = tones.samples().subspan(50, 4700);
    const auto b = rt2.samples().subspan(50, 4700);
    CHECK(oracle::rms_error(a, b) / std::sqrt(oracle::mean_power(a)) < 1e-3);
  }
}

TEST_CASE("nco shift: identity, inverse, magnitude, spectral move") {
  const IqBuffer x(oracle::awgn(4096, 1.0, 2), kShapedRateHz);
  const IqBuffer same = nco_shift(x, {0.0, 0.0});
  CHECK(same.vec() == x.vec());

  const IqBuffer up = nco_shift(x, {37.3e6, 0.4});
  const IqBuffer back = nco_shift(up, {-37.3e6, -0.4});
  CHECK(oracle::rms_error(back.samples(), x.samples()) < 1e-12);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(up[i]) == doctest::Approx(std::abs(x[i])).epsilon(1e-12));

  const std::size_t n = 1024;
  std::vector<Complex> tone(n);
  for (std::size_t i = 0; i < n; ++i) tone[i] = std::polar(1.0, 2.0 * oracle::kPi * 5.0 * static_cast<double>(i) / n);
  const IqBuffer shifted = nco_shift(IqBuffer(tone, kShapedRateHz), {7.0 * kShapedRateHz / n, 0.0});
  const auto spec = fft(shifted.samples());
  std::size_t peak = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (std::abs(spec[k]) > std::abs(spec[peak])) peak = k;
  CHECK(peak == 12);

  CHECK_THROWS_AS((void)nco_shift(x, {kShapedRateHz / 2.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS((void)nco_shift(x, {-0.6 * kShapedRateHz, 0.0}), std::invalid_argument);
}

TEST_CASE("intermediate frequency folds into the first Nyquist zone") {
  CHECK(folded_nco_frequency(kIntermediateFreqHz, kConverterRateHz) == doctest::Approx(-1.1152e9));
  CHECK(folded_nco_frequency(1.0e9, kConverterRateHz) == doctest::Approx(1.0e9));
  CHECK(folded_nco_frequency(-3.0e9, kConverterRateHz) == doctest::Approx(1.9152e9));
}

}  // TEST_SUITE
